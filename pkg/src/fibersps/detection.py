"""Detection chain: SPCM model, TAC gating, HBT splitting and correlation.

Event streams go through detector efficiency/dark/dead-time, an optional
periodic stop gate, and either a start-stop delay recorder (lifetime path) or
a two-detector coincidence correlator (autocorrelation path).  Histograms are
normalized so that uncorrelated light sits at 1.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .events import PhotonEventStream, atomic_write_text, _sidecar_path

DEAD_TIME_NONE = 0.0


@dataclass(frozen=True)
class DetectorParams:
    """Single-photon counting module: efficiency, dark rate (Hz), dead time (ns)."""

    quantum_efficiency: float
    dark_rate: float = 0.0
    dead_time: float = DEAD_TIME_NONE

    def __post_init__(self):
        if not 0 <= self.quantum_efficiency <= 1:
            raise ValueError(
                f"quantum_efficiency must lie in [0, 1], got {self.quantum_efficiency}"
            )
        if self.dark_rate < 0:
            raise ValueError(f"dark_rate must be >= 0, got {self.dark_rate}")
        if self.dead_time < 0:
            raise ValueError(f"dead_time must be >= 0, got {self.dead_time}")


@dataclass(frozen=True)
class GateSchedule:
    """Periodic stop-blocking windows: rate (Hz), width (ns), phase (ns).

    Events inside [k/rate + phase, k/rate + phase + width) are discarded.
    """

    repetition_rate: float
    gate_width: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.repetition_rate > 0:
            raise ValueError(f"repetition_rate must be > 0, got {self.repetition_rate}")
        if self.gate_width < 0:
            raise ValueError(f"gate_width must be >= 0, got {self.gate_width}")
        if self.gate_width > self.period_ns:
            raise ValueError("gate_width must not exceed the gate period")

    @property
    def period_ns(self) -> float:
        return 1e9 / self.repetition_rate


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Binned start-stop delays (one-sided) or pair delays (two-sided).

    counts[i] holds delays in [bin_edges[i], bin_edges[i+1]); ``normalization``
    is the expected uncorrelated pair count per bin, so counts/normalization
    estimates g2 per bin.  For raw (lifetime) histograms normalization is 1.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    normalization: float = 1.0
    total_pairs: int = 0

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)
        if edges.ndim != 1 or counts.ndim != 1 or len(edges) != len(counts) + 1:
            raise ValueError("need len(bin_edges) == len(counts) + 1")
        widths = np.diff(edges)
        if not np.all(widths > 0) or not np.allclose(widths, widths[0], rtol=1e-9):
            raise ValueError("bin_edges must be uniform and increasing")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if not self.normalization > 0:
            raise ValueError(f"normalization must be > 0, got {self.normalization}")
        if int(counts.sum()) != self.total_pairs:
            raise ValueError("total_pairs must equal sum(counts)")

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def g2(self) -> np.ndarray:
        return self.counts / self.normalization

    @property
    def g2_err(self) -> np.ndarray:
        return np.sqrt(self.counts) / self.normalization


def apply_detector(
    s: PhotonEventStream, d: DetectorParams, seed: int
) -> PhotonEventStream:
    """Detected stream: Bernoulli(QE) survival, merged dark counts, then a
    non-paralyzable dead-time filter (an accepted event blinds the detector
    for ``dead_time`` ns)."""
    channel = s.single_channel()
    rng = np.random.default_rng(seed)
    survive = rng.random(len(s)) < d.quantum_efficiency
    times = s.times_ns[survive]
    if d.dark_rate > 0:
        n_dark = rng.poisson(d.dark_rate * s.duration_ns * 1e-9)
        dark_times = rng.uniform(0.0, s.duration_ns, n_dark)
        times = np.sort(np.concatenate([times, dark_times]), kind="stable")
    if d.dead_time > 0 and times.size:
        times = times[_dead_time_mask(times, d.dead_time)]
    return s.replace(
        times,
        np.full(times.size, channel, dtype=np.int64),
        detector={
            "quantum_efficiency": d.quantum_efficiency,
            "dark_rate_hz": d.dark_rate,
            "dead_time_ns": d.dead_time,
            "seed": seed,
        },
    )


def _dead_time_mask(times: np.ndarray, dead_time: float) -> np.ndarray:
    keep = np.zeros(times.size, dtype=bool)
    last = -math.inf
    for i, t in enumerate(times):
        if t - last >= dead_time:
            keep[i] = True
            last = t
    return keep


def spectral_detection_ratio(
    qe_by_line: dict, relative_intensity_by_line: dict, line_a=None, line_b=None
) -> float:
    """Detected-count ratio of two emission lines weighted by detector QE.

    Returns sum(QE*weight over line A) / sum(QE*weight over line B).  With the
    default designation, line A is the shortest and line B the longest
    wavelength of the shared keys.
    """
    keys = set(qe_by_line)
    if keys != set(relative_intensity_by_line):
        raise ValueError("qe_by_line and relative_intensity_by_line must share keys")
    if len(keys) < 2:
        raise ValueError("need at least two emission lines")
    for wl, w in relative_intensity_by_line.items():
        if w < 0:
            raise ValueError(f"relative intensity at {wl} must be >= 0, got {w}")
    if all(w == 0 for w in relative_intensity_by_line.values()):
        raise ValueError("relative intensities must not all be zero")
    if line_a is None:
        line_a = min(keys)
    if line_b is None:
        line_b = max(keys)
    group_a = line_a if isinstance(line_a, (list, tuple, set)) else (line_a,)
    group_b = line_b if isinstance(line_b, (list, tuple, set)) else (line_b,)
    num = sum(qe_by_line[k] * relative_intensity_by_line[k] for k in group_a)
    den = sum(qe_by_line[k] * relative_intensity_by_line[k] for k in group_b)
    if den == 0:
        raise ValueError("line B has zero weighted intensity")
    return num / den


def apply_gate(s: PhotonEventStream, g: GateSchedule) -> PhotonEventStream:
    """Remove every event inside a gate window; deterministic."""
    if g.gate_width == 0 or len(s) == 0:
        return s.replace(s.times_ns, s.channels, gate="none")
    offset = np.mod(s.times_ns - g.phase, g.period_ns)
    keep = offset >= g.gate_width
    return s.replace(
        s.times_ns[keep],
        s.channels[keep],
        gate={
            "repetition_rate_hz": g.repetition_rate,
            "gate_width_ns": g.gate_width,
            "phase_ns": g.phase,
        },
    )


def tac_first_stop(
    starts: PhotonEventStream, stops: PhotonEventStream, range_ns: float
) -> np.ndarray:
    """Start-stop delays of a single-stop TAC.

    For each start, the delay to the first stop in (start, start + range_ns];
    each stop is consumed by at most one start; starts with no stop in range
    record nothing.
    """
    if not range_ns > 0:
        raise ValueError(f"range_ns must be > 0, got {range_ns}")
    stop_times = stops.times_ns
    delays = []
    j = 0
    n = stop_times.size
    for t in starts.times_ns:
        while j < n and stop_times[j] <= t:
            j += 1
        if j < n and stop_times[j] <= t + range_ns:
            delays.append(stop_times[j] - t)
            j += 1
    return np.asarray(delays, dtype=float)


def hbt_split(
    s: PhotonEventStream, split_a: float, transmission: float, seed: int
) -> tuple[PhotonEventStream, PhotonEventStream]:
    """Split a stream on a lossy beamsplitter.

    Each event survives with probability ``transmission`` and is then routed
    to output A with probability ``split_a`` (else B); no event reaches both
    outputs.  Input event indices are kept in metadata for diagnostics.
    """
    if not 0 <= split_a <= 1:
        raise ValueError(f"split_a must lie in [0, 1], got {split_a}")
    if not 0 <= transmission <= 1:
        raise ValueError(f"transmission must lie in [0, 1], got {transmission}")
    rng = np.random.default_rng(seed)
    survive = rng.random(len(s)) < transmission
    to_a = rng.random(len(s)) < split_a
    idx = np.arange(len(s))
    mask_a = survive & to_a
    mask_b = survive & ~to_a
    arm_a = s.replace(
        s.times_ns[mask_a], s.channels[mask_a], arm="A", source_index=idx[mask_a]
    )
    arm_b = s.replace(
        s.times_ns[mask_b], s.channels[mask_b], arm="B", source_index=idx[mask_b]
    )
    return arm_a, arm_b


def correlate(
    a: PhotonEventStream, b: PhotonEventStream, bin_width_ns: float, max_delay_ns: float
) -> CoincidenceHistogram:
    """Two-sided coincidence histogram of delays t_b - t_a.

    Bins are centered on multiples of ``bin_width_ns`` from -max_delay to
    +max_delay (so the zero-delay bin is symmetric around 0).  All pairs
    falling inside the binned span are counted; this all-pairs estimator is
    valid while max_delay is far below the mean inter-event spacing.
    Normalization rate_a * rate_b * bin_width * duration turns counts into a
    g2 estimate with Poisson error sqrt(counts)/normalization per bin.
    """
    if not bin_width_ns > 0:
        raise ValueError(f"bin_width_ns must be > 0, got {bin_width_ns}")
    k_max = max_delay_ns / bin_width_ns
    if abs(k_max - round(k_max)) > 1e-9 or round(k_max) < 1:
        raise ValueError("max_delay_ns must be a positive multiple of bin_width_ns")
    k_max = int(round(k_max))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("cannot correlate an empty stream (rates undefined)")
    if abs(a.duration_ns - b.duration_ns) > 1e-6 * max(a.duration_ns, b.duration_ns):
        raise ValueError("streams must cover the same duration")

    ta, tb = a.times_ns, b.times_ns
    reach = max_delay_ns + 0.5 * bin_width_ns
    lo = np.searchsorted(tb, ta - reach, side="left")
    hi = np.searchsorted(tb, ta + reach, side="right")
    per_start = hi - lo
    total = int(per_start.sum())
    rep_a = np.repeat(np.arange(ta.size), per_start)
    offsets = np.arange(total) - np.repeat(np.cumsum(per_start) - per_start, per_start)
    delays = tb[np.repeat(lo, per_start) + offsets] - ta[rep_a]

    k = np.rint(delays / bin_width_ns).astype(np.int64)
    k = k[np.abs(k) <= k_max]
    counts = np.bincount(k + k_max, minlength=2 * k_max + 1)

    duration = a.duration_ns
    rate_a = ta.size / duration
    rate_b = tb.size / duration
    normalization = rate_a * rate_b * bin_width_ns * duration
    edges = (np.arange(2 * k_max + 2) - k_max - 0.5) * bin_width_ns
    return CoincidenceHistogram(
        bin_edges=edges,
        counts=counts,
        normalization=normalization,
        total_pairs=int(counts.sum()),
    )


def histogram_delays(
    delays_ns: np.ndarray, bin_width_ns: float, t_max_ns: float
) -> CoincidenceHistogram:
    """One-sided histogram of start-stop delays over [0, t_max_ns]."""
    if not bin_width_ns > 0:
        raise ValueError(f"bin_width_ns must be > 0, got {bin_width_ns}")
    n_bins = t_max_ns / bin_width_ns
    if abs(n_bins - round(n_bins)) > 1e-9 or round(n_bins) < 1:
        raise ValueError("t_max_ns must be a positive multiple of bin_width_ns")
    n_bins = int(round(n_bins))
    edges = np.arange(n_bins + 1) * bin_width_ns
    counts, _ = np.histogram(np.asarray(delays_ns, dtype=float), bins=edges)
    return CoincidenceHistogram(
        bin_edges=edges,
        counts=counts,
        normalization=1.0,
        total_pairs=int(counts.sum()),
    )


def write_histogram_csv(h: CoincidenceHistogram, path: str):
    """Write ``tau_ns,counts,g2,g2_err`` rows plus a JSON sidecar."""
    lines = ["tau_ns,counts,g2,g2_err"]
    g2 = h.g2
    g2_err = h.g2_err
    for c, n, v, e in zip(h.centers, h.counts, g2, g2_err):
        lines.append(f"{float(c)!r},{int(n)},{float(v)!r},{float(e)!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")
    meta = {
        "bin_start_ns": float(h.bin_edges[0]),
        "bin_width_ns": h.bin_width,
        "n_bins": int(h.counts.size),
        "normalization": h.normalization,
        "total_pairs": h.total_pairs,
    }
    atomic_write_text(
        _sidecar_path(path), json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )


def read_histogram_csv(path: str) -> CoincidenceHistogram:
    """Read a histogram CSV (using the sidecar when available)."""
    centers, counts, g2 = [], [], []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["tau_ns", "counts"]:
            raise ValueError(f"{path}: expected header 'tau_ns,counts,g2,g2_err'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                centers.append(float(row[0]))
                counts.append(int(row[1]))
                g2.append(float(row[2]) if len(row) > 2 else float(row[1]))
            except (ValueError, IndexError):
                raise ValueError(f"{path}: malformed row at line {lineno}: {row!r}")
    if len(centers) < 1:
        raise ValueError(f"{path}: no histogram rows")
    counts = np.asarray(counts, dtype=np.int64)

    sidecar = _sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar) as f:
            meta = json.load(f)
        start = meta["bin_start_ns"]
        width = meta["bin_width_ns"]
        n_bins = meta["n_bins"]
        normalization = meta["normalization"]
        edges = start + width * np.arange(n_bins + 1)
    else:
        centers = np.asarray(centers, dtype=float)
        if centers.size > 1:
            width = float(centers[1] - centers[0])
        else:
            width = 2.0 * centers[0] if centers[0] > 0 else 1.0
        edges = np.concatenate([centers - width / 2.0, [centers[-1] + width / 2.0]])
        # recover the scale factor from the largest populated bin
        imax = int(np.argmax(counts))
        normalization = counts[imax] / g2[imax] if counts[imax] > 0 and g2[imax] > 0 else 1.0
    return CoincidenceHistogram(
        bin_edges=edges,
        counts=counts,
        normalization=float(normalization),
        total_pairs=int(counts.sum()),
    )


def write_delays_csv(delays_ns: np.ndarray, path: str):
    """Write a one-column ``delay_ns`` CSV."""
    lines = ["delay_ns"]
    for d in delays_ns:
        lines.append(repr(float(d)))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_delays_csv(path: str) -> np.ndarray:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header[0].strip() != "delay_ns":
            raise ValueError(f"{path}: expected header 'delay_ns'")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append(float(row[0]))
            except ValueError:
                raise ValueError(f"{path}: malformed row at line {lineno}: {row!r}")
    return np.asarray(out, dtype=float)
