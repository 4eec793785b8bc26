"""Closed-form physics of a pumped two-level emitter in a fiber.

Pure, deterministic functions over small parameter records: exponential
fluorescence decay, the second-order autocorrelation model, pump/absorption
rate algebra, geometric collection efficiencies, and first-order uncertainty
propagation for ratio quantities.  All inputs are SI unless a parameter name
says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import PLANCK_H, SPEED_OF_LIGHT


@dataclass(frozen=True)
class EmitterParams:
    """Rates of the two-level emitter.

    tau_life: optical lifetime (s), mean dwell time in the excited state.
    tau_abs:  absorption time (s), mean time for a ground-state ion to absorb
              a pump photon.  May be math.inf to switch the pump off.
    i0:       fluorescence amplitude at zero delay (counts/s).
    """

    tau_life: float
    tau_abs: float
    i0: float = 1.0

    def __post_init__(self):
        if not self.tau_life > 0:
            raise ValueError(f"tau_life must be > 0, got {self.tau_life}")
        if not self.tau_abs > 0:
            raise ValueError(f"tau_abs must be > 0, got {self.tau_abs}")
        if not self.i0 >= 0:
            raise ValueError(f"i0 must be >= 0, got {self.i0}")


@dataclass(frozen=True)
class PumpParams:
    """Pump beam: power (W), beam diameter (m), wavelength (m), linewidth (m)."""

    power: float
    beam_diameter: float
    wavelength: float
    linewidth: float

    def __post_init__(self):
        for name in ("power", "beam_diameter", "wavelength", "linewidth"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class OpticsParams:
    """Collection geometry.

    numerical_aperture: N.A. of the collecting objective.
    medium_index:       refractive index of the medium around the emitter.
    fiber_index:        refractive index of the fiber that channels photons.
    sides:              'one' or 'both' fiber ends collected.
    """

    numerical_aperture: float
    medium_index: float = 1.0
    fiber_index: float = 1.45
    sides: str = "both"

    def __post_init__(self):
        if self.medium_index < 1:
            raise ValueError(f"medium_index must be >= 1, got {self.medium_index}")
        if self.fiber_index < 1:
            raise ValueError(f"fiber_index must be >= 1, got {self.fiber_index}")
        if not 0 <= self.numerical_aperture <= self.medium_index:
            raise ValueError(
                "numerical_aperture must lie in [0, medium_index], got "
                f"{self.numerical_aperture} with n={self.medium_index}"
            )
        if self.sides not in ("one", "both"):
            raise ValueError(f"sides must be 'one' or 'both', got {self.sides!r}")


@dataclass(frozen=True)
class Measured:
    """A value with a 1-sigma uncertainty (same units)."""

    value: float
    sigma: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    def __str__(self):
        return f"{self.value:g} +/- {self.sigma:g}"


def lifetime_intensity(t, p: EmitterParams):
    """Fluorescence intensity i0 * exp(-t / tau_life) at delay t (s).

    Accepts a scalar or array delay; rejects negative or non-finite delays.
    """
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("delay t must be finite")
    if np.any(t < 0):
        raise ValueError("delay t must be >= 0")
    out = p.i0 * np.exp(-t / p.tau_life)
    return float(out) if out.ndim == 0 else out


def g2_model(tau, g2_zero: float, p: EmitterParams):
    """Second-order autocorrelation of the two-level emitter at delay tau >= 0.

    g2(tau) = 1 - (1 - g2(0)) * exp(-(1/tau_abs + 1/tau_life) * tau).
    Equals ``g2_zero`` at tau = 0 and relaxes to 1 with rate
    1/tau_abs + 1/tau_life; callers mirror for negative delay.
    """
    if not 0 <= g2_zero <= 1:
        raise ValueError(f"g2_zero must lie in [0, 1], got {g2_zero}")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("delay tau must be >= 0 (mirror for negative delay)")
    rate = 1.0 / p.tau_abs + 1.0 / p.tau_life
    # algebraically 1 - (1 - g2_zero) exp(-rate tau), arranged so tau = 0
    # returns g2_zero exactly
    out = g2_zero + (1.0 - g2_zero) * -np.expm1(-rate * tau)
    return float(out) if out.ndim == 0 else out


def pump_intensity(power: float, beam_diameter: float) -> float:
    """Pump intensity (W/m^2) of power (W) focused to a spot of diameter (m)."""
    if power < 0:
        raise ValueError(f"power must be >= 0, got {power}")
    if not beam_diameter > 0:
        raise ValueError(f"beam_diameter must be > 0, got {beam_diameter}")
    return power / (math.pi * (beam_diameter / 2.0) ** 2)


def absorption_time(pump: PumpParams, intensity: float, tau_life: float) -> float:
    """Absorption time (s) of a resonantly pumped ion at the given intensity.

    tau_abs = 8 pi h c^2 linewidth tau_life / (wavelength^5 intensity); the
    result is exactly inversely proportional to the pump intensity.
    """
    if not intensity > 0:
        raise ValueError(f"intensity must be > 0, got {intensity}")
    if not tau_life > 0:
        raise ValueError(f"tau_life must be > 0, got {tau_life}")
    numerator = (
        8.0 * math.pi * PLANCK_H * SPEED_OF_LIGHT**2 * pump.linewidth * tau_life
    )
    return numerator / pump.wavelength**5 / intensity


def absorption_time_composed(pump: PumpParams, intensity: float, tau_life: float) -> float:
    """Absorption time (s) assembled from its three ingredients separately.

    Independent route kept as a consistency oracle: spectral energy density
    from the intensity, the stimulated-absorption coefficient from the
    spontaneous rate 1/tau_life, then tau_abs = 1 / (B * U).
    """
    if not intensity > 0:
        raise ValueError(f"intensity must be > 0, got {intensity}")
    if not tau_life > 0:
        raise ValueError(f"tau_life must be > 0, got {tau_life}")
    energy_density = intensity * pump.wavelength**2 / (SPEED_OF_LIGHT**2 * pump.linewidth)
    einstein_a = 1.0 / tau_life
    einstein_b = einstein_a * pump.wavelength**3 / (8.0 * math.pi * PLANCK_H)
    return 1.0 / (einstein_b * energy_density)


def objective_collection_efficiency(o: OpticsParams) -> float:
    """Fraction of an isotropic emission captured by an objective lens.

    Solid-angle cap of half-angle asin(N.A./n): eta = (1 - sqrt(1 - (N.A./n)^2)) / 2,
    between 0 and 0.5.
    """
    ratio = o.numerical_aperture / o.medium_index
    return 0.5 * (1.0 - math.sqrt(1.0 - ratio * ratio))


def channeling_efficiency(o: OpticsParams) -> float:
    """Fraction of an isotropic emission trapped into guided modes by total
    internal reflection at the fiber surface.

    (1 - 1/fiber_index) / 2 per collected fiber end.
    """
    per_side = 0.5 * (1.0 - 1.0 / o.fiber_index)
    return 2.0 * per_side if o.sides == "both" else per_side


def ratio_with_uncertainty(a: Measured, b: Measured) -> Measured:
    """a / b with the 1-sigma uncertainty propagated in quadrature.

    Assumes independent errors: sigma = |a/b| * sqrt((sa/a)^2 + (sb/b)^2).
    """
    if b.value == 0:
        raise ValueError("cannot take a ratio with zero denominator")
    value = a.value / b.value
    if a.value == 0:
        # relative error of a is undefined; only b contributes
        sigma = abs(a.sigma / b.value)
    else:
        sigma = abs(value) * math.hypot(a.sigma / a.value, b.sigma / b.value)
    return Measured(value, sigma)


def collection_efficiency_ratio(
    n_s: Measured, n_f: Measured, rate_ratio_f_over_s: Measured
) -> Measured:
    """Ratio of collection efficiencies of two excitation methods.

    Detected count rates n_s, n_f (Hz) and the emission-rate ratio
    (fast/slow method) combine as (n_s / n_f) * rate_ratio, with the
    uncertainty propagated in quadrature over all three inputs.
    """
    for name, m in (("n_s", n_s), ("n_f", n_f), ("rate_ratio", rate_ratio_f_over_s)):
        if not m.value > 0:
            raise ValueError(f"{name} must be > 0, got {m.value}")
    value = (n_s.value / n_f.value) * rate_ratio_f_over_s.value
    rel = math.sqrt(
        (n_s.sigma / n_s.value) ** 2
        + (n_f.sigma / n_f.value) ** 2
        + (rate_ratio_f_over_s.sigma / rate_ratio_f_over_s.value) ** 2
    )
    return Measured(value, value * rel)
