"""Experiment configuration: a flat INI-style key-value format with sections.

One config drives a full simulated run.  ``mode = cw`` runs the HBT
autocorrelation pipeline (needs [splitter] and [correlator] plus a
``duration_s``); ``mode = pulsed`` runs the gated lifetime pipeline (needs
[pulse] and [tac] plus ``n_pulses``).  Validation reports the offending
section and key.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field

from .detection import DetectorParams, GateSchedule
from .emitter import PulseSchedule
from .physics import EmitterParams, OpticsParams, PumpParams


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated parameters of one simulated experiment."""

    mode: str
    seed: int
    emitter: EmitterParams
    detector: DetectorParams
    duration_s: float | None = None
    n_pulses: int | None = None
    pulse: PulseSchedule | None = None
    gate: GateSchedule | None = None
    splitter: tuple[float, float] | None = None  # (split_a, transmission)
    correlator: tuple[float, float] | None = None  # (bin_width_ns, max_delay_ns)
    tac: tuple[float, float] | None = None  # (range_ns, bin_width_ns)
    background_fraction: float | None = None
    background_rate_hz: float | None = None
    detector_a: DetectorParams | None = None
    detector_b: DetectorParams | None = None
    pump: PumpParams | None = None
    optics: OpticsParams | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("cw", "pulsed"):
            raise ConfigError(f"[run] mode: must be 'cw' or 'pulsed', got {self.mode!r}")
        has_duration = self.duration_s is not None
        has_pulses = self.n_pulses is not None
        if has_duration == has_pulses:
            raise ConfigError(
                "[run] exactly one of duration_s (cw) or n_pulses (pulsed) must be set"
            )
        if self.mode == "cw":
            if not has_duration:
                raise ConfigError("[run] duration_s: required for mode = cw")
            if self.duration_s <= 0:
                raise ConfigError(f"[run] duration_s: must be > 0, got {self.duration_s}")
            if self.splitter is None:
                raise ConfigError("[splitter] section required for mode = cw")
            if self.correlator is None:
                raise ConfigError("[correlator] section required for mode = cw")
        else:
            if not has_pulses:
                raise ConfigError("[run] n_pulses: required for mode = pulsed")
            if self.n_pulses < 1:
                raise ConfigError(f"[run] n_pulses: must be >= 1, got {self.n_pulses}")
            if self.pulse is None:
                raise ConfigError("[pulse] section required for mode = pulsed")
            if self.tac is None:
                raise ConfigError("[tac] section required for mode = pulsed")
        if self.background_fraction is not None and not 0 <= self.background_fraction < 1:
            raise ConfigError(
                f"[background] fraction: must lie in [0, 1), got {self.background_fraction}"
            )
        if self.background_rate_hz is not None and self.background_rate_hz < 0:
            raise ConfigError(
                f"[background] rate_hz: must be >= 0, got {self.background_rate_hz}"
            )
        if self.background_fraction is not None and self.background_rate_hz is not None:
            raise ConfigError("[background] set either fraction or rate_hz, not both")

    def background_rate(self) -> float:
        """Background rate in Hz implied by the config (0 when unset).

        A ``fraction`` f is converted against the emitter's mean emission
        rate r = 1/(tau_abs + tau_life): rate = r f / (1 - f), so background
        events make up the fraction f of the merged stream on average.
        """
        if self.background_rate_hz is not None:
            return self.background_rate_hz
        if self.background_fraction is None or self.background_fraction == 0.0:
            return 0.0
        cycle = self.emitter.tau_abs + self.emitter.tau_life
        if math.isinf(cycle):
            return 0.0
        emission_rate = 1.0 / cycle
        f = self.background_fraction
        return emission_rate * f / (1.0 - f)

    def arm_detector(self, arm: str) -> DetectorParams:
        if arm == "a" and self.detector_a is not None:
            return self.detector_a
        if arm == "b" and self.detector_b is not None:
            return self.detector_b
        return self.detector

    def to_ini(self) -> str:
        """Serialize back to the INI format (re-parses to an equal config)."""
        cp = configparser.ConfigParser()
        cp["run"] = {"mode": self.mode, "seed": str(self.seed)}
        if self.duration_s is not None:
            cp["run"]["duration_s"] = repr(self.duration_s)
        if self.n_pulses is not None:
            cp["run"]["n_pulses"] = str(self.n_pulses)
        cp["emitter"] = {
            "tau_life_us": repr(self.emitter.tau_life * 1e6),
            "tau_abs_ns": repr(self.emitter.tau_abs * 1e9),
            "i0": repr(self.emitter.i0),
        }
        cp["detector"] = _detector_section(self.detector)
        if self.detector_a is not None:
            cp["detector.a"] = _detector_section(self.detector_a)
        if self.detector_b is not None:
            cp["detector.b"] = _detector_section(self.detector_b)
        if self.pulse is not None:
            cp["pulse"] = {
                "repetition_rate_hz": repr(self.pulse.repetition_rate),
                "pulse_width_ns": repr(self.pulse.pulse_width),
                "first_pulse_ns": repr(self.pulse.first_pulse_time),
            }
        if self.gate is not None:
            cp["gate"] = {
                "repetition_rate_hz": repr(self.gate.repetition_rate),
                "gate_width_us": repr(self.gate.gate_width * 1e-3),
                "phase_us": repr(self.gate.phase * 1e-3),
            }
        if self.splitter is not None:
            cp["splitter"] = {
                "split_a": repr(self.splitter[0]),
                "transmission": repr(self.splitter[1]),
            }
        if self.correlator is not None:
            cp["correlator"] = {
                "bin_width_ns": repr(self.correlator[0]),
                "max_delay_ns": repr(self.correlator[1]),
            }
        if self.tac is not None:
            cp["tac"] = {
                "range_us": repr(self.tac[0] * 1e-3),
                "bin_width_us": repr(self.tac[1] * 1e-3),
            }
        if self.background_fraction is not None:
            cp["background"] = {"fraction": repr(self.background_fraction)}
        elif self.background_rate_hz is not None:
            cp["background"] = {"rate_hz": repr(self.background_rate_hz)}
        if self.pump is not None:
            cp["pump"] = {
                "power_w": repr(self.pump.power),
                "beam_diameter_m": repr(self.pump.beam_diameter),
                "wavelength_m": repr(self.pump.wavelength),
                "linewidth_m": repr(self.pump.linewidth),
            }
        if self.optics is not None:
            cp["optics"] = {
                "numerical_aperture": repr(self.optics.numerical_aperture),
                "medium_index": repr(self.optics.medium_index),
                "fiber_index": repr(self.optics.fiber_index),
                "sides": self.optics.sides,
            }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _detector_section(d: DetectorParams) -> dict:
    return {
        "quantum_efficiency": repr(d.quantum_efficiency),
        "dark_rate_hz": repr(d.dark_rate),
        "dead_time_ns": repr(d.dead_time),
    }


class _Section:
    """Typed accessors over one config section with field-level errors."""

    def __init__(self, parser, name):
        self.name = name
        self.raw = dict(parser[name]) if parser.has_section(name) else None

    def __bool__(self):
        return self.raw is not None

    def get(self, key, kind=float, default=None, required=False):
        if self.raw is None or key not in self.raw:
            if required:
                raise ConfigError(f"[{self.name}] {key}: required key is missing")
            return default
        text = self.raw.pop(key)
        try:
            if kind is bool:
                return text.strip().lower() in ("1", "true", "yes", "on")
            return kind(text)
        except ValueError:
            raise ConfigError(
                f"[{self.name}] {key}: cannot parse {text!r} as {kind.__name__}"
            )

    def reject_unknown(self):
        if self.raw:
            key = sorted(self.raw)[0]
            raise ConfigError(f"[{self.name}] {key}: unknown key")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an INI config; raises ConfigError with the section
    and key of the first problem."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config does not parse: {exc}")

    run = _Section(parser, "run")
    if not run:
        raise ConfigError("[run] section is required")
    mode = run.get("mode", kind=str, required=True)
    seed = run.get("seed", kind=int, default=0)
    duration_s = run.get("duration_s", kind=float)
    n_pulses = run.get("n_pulses", kind=int)
    run.reject_unknown()

    emitter_sec = _Section(parser, "emitter")
    if not emitter_sec:
        raise ConfigError("[emitter] section is required")
    try:
        emitter = EmitterParams(
            tau_life=emitter_sec.get("tau_life_us", required=True) * 1e-6,
            tau_abs=emitter_sec.get("tau_abs_ns", required=True) * 1e-9,
            i0=emitter_sec.get("i0", default=1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[emitter] {exc}")
    emitter_sec.reject_unknown()

    detector = _parse_detector(parser, "detector", required=True)
    detector_a = _parse_detector(parser, "detector.a")
    detector_b = _parse_detector(parser, "detector.b")

    pulse = None
    pulse_sec = _Section(parser, "pulse")
    if pulse_sec:
        try:
            pulse = PulseSchedule(
                repetition_rate=pulse_sec.get("repetition_rate_hz", required=True),
                pulse_width=pulse_sec.get("pulse_width_ns", required=True),
                first_pulse_time=pulse_sec.get("first_pulse_ns", default=0.0),
            )
        except ValueError as exc:
            raise ConfigError(f"[pulse] {exc}")
        pulse_sec.reject_unknown()

    gate = None
    gate_sec = _Section(parser, "gate")
    if gate_sec:
        try:
            gate = GateSchedule(
                repetition_rate=gate_sec.get("repetition_rate_hz", required=True),
                gate_width=gate_sec.get("gate_width_us", required=True) * 1e3,
                phase=gate_sec.get("phase_us", default=0.0) * 1e3,
            )
        except ValueError as exc:
            raise ConfigError(f"[gate] {exc}")
        gate_sec.reject_unknown()

    splitter = None
    split_sec = _Section(parser, "splitter")
    if split_sec:
        split_a = split_sec.get("split_a", default=0.5)
        transmission = split_sec.get("transmission", default=1.0)
        if not 0 <= split_a <= 1:
            raise ConfigError(f"[splitter] split_a: must lie in [0, 1], got {split_a}")
        if not 0 <= transmission <= 1:
            raise ConfigError(
                f"[splitter] transmission: must lie in [0, 1], got {transmission}"
            )
        splitter = (split_a, transmission)
        split_sec.reject_unknown()

    correlator = None
    corr_sec = _Section(parser, "correlator")
    if corr_sec:
        bin_width = corr_sec.get("bin_width_ns", default=1.0)
        max_delay = corr_sec.get("max_delay_ns", default=50.0)
        if bin_width <= 0:
            raise ConfigError(f"[correlator] bin_width_ns: must be > 0, got {bin_width}")
        if max_delay <= 0:
            raise ConfigError(f"[correlator] max_delay_ns: must be > 0, got {max_delay}")
        correlator = (bin_width, max_delay)
        corr_sec.reject_unknown()

    tac = None
    tac_sec = _Section(parser, "tac")
    if tac_sec:
        range_ns = tac_sec.get("range_us", required=True) * 1e3
        tac_bin = tac_sec.get("bin_width_us", default=5.0) * 1e3
        if range_ns <= 0 or tac_bin <= 0:
            raise ConfigError("[tac] range_us and bin_width_us must be > 0")
        tac = (range_ns, tac_bin)
        tac_sec.reject_unknown()

    background_fraction = None
    background_rate = None
    bg_sec = _Section(parser, "background")
    if bg_sec:
        background_fraction = bg_sec.get("fraction")
        background_rate = bg_sec.get("rate_hz")
        bg_sec.reject_unknown()

    pump = None
    pump_sec = _Section(parser, "pump")
    if pump_sec:
        try:
            pump = PumpParams(
                power=pump_sec.get("power_w", required=True),
                beam_diameter=pump_sec.get("beam_diameter_m", required=True),
                wavelength=pump_sec.get("wavelength_m", default=808e-9),
                linewidth=pump_sec.get("linewidth_m", default=1e-9),
            )
        except ValueError as exc:
            raise ConfigError(f"[pump] {exc}")
        pump_sec.reject_unknown()

    optics = None
    optics_sec = _Section(parser, "optics")
    if optics_sec:
        try:
            optics = OpticsParams(
                numerical_aperture=optics_sec.get("numerical_aperture", default=0.5),
                medium_index=optics_sec.get("medium_index", default=1.0),
                fiber_index=optics_sec.get("fiber_index", default=1.45),
                sides=optics_sec.get("sides", kind=str, default="both"),
            )
        except ValueError as exc:
            raise ConfigError(f"[optics] {exc}")
        optics_sec.reject_unknown()

    return ExperimentConfig(
        mode=mode,
        seed=seed,
        emitter=emitter,
        detector=detector,
        duration_s=duration_s,
        n_pulses=n_pulses,
        pulse=pulse,
        gate=gate,
        splitter=splitter,
        correlator=correlator,
        tac=tac,
        background_fraction=background_fraction,
        background_rate_hz=background_rate,
        detector_a=detector_a,
        detector_b=detector_b,
        pump=pump,
        optics=optics,
    )


def _parse_detector(parser, section, required=False):
    sec = _Section(parser, section)
    if not sec:
        if required:
            raise ConfigError(f"[{section}] section is required")
        return None
    try:
        det = DetectorParams(
            quantum_efficiency=sec.get("quantum_efficiency", required=True),
            dark_rate=sec.get("dark_rate_hz", default=0.0),
            dead_time=sec.get("dead_time_ns", default=0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}")
    sec.reject_unknown()
    return det


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as f:
            return parse_config(f.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
