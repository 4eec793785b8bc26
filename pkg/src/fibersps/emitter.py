"""Seeded Monte Carlo photon emission from a pumped two-level ion.

Event-driven (exponential waiting time) simulation: exact for a two-level
Markov model, no time stepping.  CW pumping yields an alternating-renewal
telegraph process; pulsed pumping restricts absorption to the pulse windows
while spontaneous decay runs freely.  Also hosts the isotropic solid-angle
Monte Carlo estimator used to cross-check the closed-form collection
efficiencies, and a homogeneous Poisson background generator.

All generators use numpy's PCG64 via ``default_rng(seed)`` and are
deterministic given (parameters, seed); the generator name is recorded in
stream metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .events import PhotonEventStream
from .physics import EmitterParams

# emission/stop events ride channel 0; pulse triggers (start signals) channel 1
CH_EMISSION = 0
CH_START = 1

RNG_NAME = "numpy-pcg64"

# refuse simulations whose expected event count exceeds this, to bound memory
DEFAULT_EVENT_CAP = 100_000_000


@dataclass(frozen=True)
class PulseSchedule:
    """Periodic pump pulses: rate (Hz), width (ns), time of the first pulse (ns)."""

    repetition_rate: float
    pulse_width: float
    first_pulse_time: float = 0.0

    def __post_init__(self):
        if not self.repetition_rate > 0:
            raise ValueError(f"repetition_rate must be > 0, got {self.repetition_rate}")
        if self.pulse_width < 0:
            raise ValueError(f"pulse_width must be >= 0, got {self.pulse_width}")
        if self.first_pulse_time < 0:
            raise ValueError(f"first_pulse_time must be >= 0, got {self.first_pulse_time}")
        if not self.pulse_width < self.period_ns:
            raise ValueError("pulse_width must be shorter than the pulse period")

    @property
    def period_ns(self) -> float:
        return 1e9 / self.repetition_rate


@dataclass(frozen=True)
class SolidAngleSpec:
    """Acceptance geometry for the solid-angle Monte Carlo.

    kind 'cone': polar angle <= asin(N.A./n) toward the lens.
    kind 'tir':  total internal reflection into one fiber end,
                 cos(angle from fiber axis) >= 1/fiber_index.
    kind 'both_sides_tir': same, either fiber end.
    """

    kind: str
    numerical_aperture: float = 0.0
    medium_index: float = 1.0
    fiber_index: float = 1.45

    def __post_init__(self):
        if self.kind not in ("cone", "tir", "both_sides_tir"):
            raise ValueError(f"unknown solid-angle kind {self.kind!r}")
        if self.medium_index < 1:
            raise ValueError(f"medium_index must be >= 1, got {self.medium_index}")
        if self.fiber_index < 1:
            raise ValueError(f"fiber_index must be >= 1, got {self.fiber_index}")
        if not 0 <= self.numerical_aperture <= self.medium_index:
            raise ValueError("numerical_aperture must lie in [0, medium_index]")

    @classmethod
    def cone(cls, numerical_aperture, medium_index=1.0):
        return cls("cone", numerical_aperture=numerical_aperture, medium_index=medium_index)

    @classmethod
    def tir(cls, fiber_index):
        return cls("tir", fiber_index=fiber_index)

    @classmethod
    def both_sides_tir(cls, fiber_index):
        return cls("both_sides_tir", fiber_index=fiber_index)


def simulate_cw(
    p: EmitterParams,
    duration_ns: float,
    seed: int,
    max_events: int = DEFAULT_EVENT_CAP,
) -> PhotonEventStream:
    """Emission times of a CW-pumped ion over [0, duration_ns].

    Alternating renewal: from the ground state wait Exp(tau_abs) to absorb,
    then wait Exp(tau_life) to emit one photon and return to ground.  The
    expected rate is 1/(tau_abs + tau_life); gaps between emissions are the
    sum of the two exponentials.
    """
    if not duration_ns > 0:
        raise ValueError(f"duration_ns must be > 0, got {duration_ns}")
    tau_abs_ns = p.tau_abs * 1e9
    tau_life_ns = p.tau_life * 1e9
    mean_cycle = tau_abs_ns + tau_life_ns
    expected = duration_ns / mean_cycle if math.isfinite(mean_cycle) else 0.0
    if expected > max_events:
        raise ValueError(
            f"expected ~{expected:.2e} events exceeds the cap of {max_events:.0e}; "
            "shorten the duration, raise max_events, or split the run into chunks"
        )

    rng = np.random.default_rng(seed)
    blocks = []
    t = 0.0
    # draw cycles in bounded blocks to cap transient memory; the block
    # schedule depends only on (params, duration), keeping runs reproducible
    block = min(max(int(expected + 6.0 * math.sqrt(expected)) + 64, 64), 4_000_000)
    while t <= duration_ns:
        cycles = rng.exponential(tau_abs_ns, block) + rng.exponential(tau_life_ns, block)
        emissions = t + np.cumsum(cycles)
        blocks.append(emissions)
        t = emissions[-1]
        if not math.isfinite(t):
            break
    times = np.concatenate(blocks)
    times = times[times <= duration_ns]

    return PhotonEventStream(
        times_ns=times,
        channels=np.full(times.size, CH_EMISSION, dtype=np.int64),
        duration_ns=float(duration_ns),
        seed=seed,
        metadata={
            "generator": RNG_NAME,
            "model": "cw-telegraph",
            "tau_life_s": p.tau_life,
            "tau_abs_s": p.tau_abs,
            "channel_set": [CH_EMISSION],
        },
    )


def simulate_pulsed(
    p: EmitterParams,
    sched: PulseSchedule,
    n_pulses: int,
    seed: int,
    max_events: int = DEFAULT_EVENT_CAP,
) -> tuple[PhotonEventStream, PhotonEventStream]:
    """(pulse triggers, emission times) for pulsed excitation.

    Absorption is possible only while a pulse is on; an excited ion decays
    after Exp(tau_life) regardless of the pulses and cannot re-absorb until
    it has emitted.  Emission inside a pulse window re-arms absorption within
    the same window; an emission pending past later pulses blocks them (the
    two-level ion cannot absorb while excited).  Emissions after the end of
    the observation window are dropped.
    """
    if n_pulses < 1:
        raise ValueError(f"n_pulses must be >= 1, got {n_pulses}")
    if 2 * n_pulses > max_events:
        raise ValueError(
            f"{n_pulses} pulses exceed the event cap of {max_events:.0e}; "
            "lower n_pulses or raise max_events"
        )
    tau_abs_ns = p.tau_abs * 1e9
    tau_life_ns = p.tau_life * 1e9
    period = sched.period_ns
    duration = sched.first_pulse_time + n_pulses * period

    rng = np.random.default_rng(seed)
    starts = sched.first_pulse_time + period * np.arange(n_pulses)
    emissions = []
    pending = None  # emission time of a still-excited ion, or None
    for t_on in starts:
        t_off = t_on + sched.pulse_width
        if pending is not None:
            if pending >= t_off:
                continue  # excited for the whole window
            cursor = max(t_on, pending)
            pending = None
        else:
            cursor = t_on
        while True:
            cursor += rng.exponential(tau_abs_ns)
            if cursor >= t_off:
                break  # pulse ended before absorption
            emit_at = cursor + rng.exponential(tau_life_ns)
            emissions.append(emit_at)
            if emit_at < t_off:
                cursor = emit_at  # back to ground mid-pulse, may re-absorb
            else:
                pending = emit_at
                break

    emissions = np.asarray(emissions, dtype=float)
    emissions = emissions[emissions <= duration]

    meta_common = {
        "generator": RNG_NAME,
        "model": "pulsed-two-level",
        "tau_life_s": p.tau_life,
        "tau_abs_s": p.tau_abs,
        "repetition_rate_hz": sched.repetition_rate,
        "pulse_width_ns": sched.pulse_width,
        "n_pulses": n_pulses,
    }
    start_stream = PhotonEventStream(
        times_ns=starts,
        channels=np.full(starts.size, CH_START, dtype=np.int64),
        duration_ns=duration,
        seed=seed,
        metadata=dict(meta_common, channel_set=[CH_START]),
    )
    emission_stream = PhotonEventStream(
        times_ns=emissions,
        channels=np.full(emissions.size, CH_EMISSION, dtype=np.int64),
        duration_ns=duration,
        seed=seed,
        metadata=dict(meta_common, channel_set=[CH_EMISSION]),
    )
    return start_stream, emission_stream


def solid_angle_mc(
    spec: SolidAngleSpec, n_samples: int, seed: int
) -> tuple[float, float]:
    """(acceptance fraction, binomial standard error) from isotropic sampling.

    Draws cos(theta) uniform on [-1, 1] (azimuth is irrelevant for the
    axially symmetric acceptance regions) and counts directions inside the
    spec's region.
    """
    if n_samples < 1000:
        raise ValueError(f"n_samples must be >= 1000, got {n_samples}")
    rng = np.random.default_rng(seed)
    accepted = 0
    remaining = int(n_samples)
    if spec.kind == "cone":
        ratio = spec.numerical_aperture / spec.medium_index
        threshold = math.sqrt(1.0 - ratio * ratio)
    else:
        threshold = 1.0 / spec.fiber_index
    while remaining > 0:
        chunk = min(remaining, 1 << 20)
        u = rng.uniform(-1.0, 1.0, chunk)
        if spec.kind == "both_sides_tir":
            accepted += int(np.count_nonzero(np.abs(u) >= threshold))
        else:
            accepted += int(np.count_nonzero(u >= threshold))
        remaining -= chunk
    estimate = accepted / n_samples
    stderr = math.sqrt(estimate * (1.0 - estimate) / n_samples)
    return estimate, stderr


def add_poisson_background(
    s: PhotonEventStream, rate_hz: float, seed: int
) -> PhotonEventStream:
    """Merge homogeneous Poisson events at ``rate_hz`` into the stream.

    Background events carry the stream's channel; their positions are tagged
    in ``metadata['background_mask']`` for diagnostics only.
    """
    if rate_hz < 0:
        raise ValueError(f"rate_hz must be >= 0, got {rate_hz}")
    if rate_hz == 0:
        return s.replace(s.times_ns, s.channels, background_rate_hz=0.0)
    channel = s.single_channel()
    rng = np.random.default_rng(seed)
    n_bg = rng.poisson(rate_hz * s.duration_ns * 1e-9)
    bg_times = np.sort(rng.uniform(0.0, s.duration_ns, n_bg))
    merged = np.concatenate([s.times_ns, bg_times])
    origin_bg = np.concatenate(
        [np.zeros(len(s), dtype=bool), np.ones(n_bg, dtype=bool)]
    )
    order = np.argsort(merged, kind="stable")
    return s.replace(
        merged[order],
        np.full(merged.size, channel, dtype=np.int64),
        background_rate_hz=rate_hz,
        background_mask=origin_bg[order],
        background_seed=seed,
    )
