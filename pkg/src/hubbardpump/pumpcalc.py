"""Closed-form pump-field arithmetic: Peierls phase amplitude, Bessel-averaged
hopping, small-phase suppression, and pump-probe resolution helpers.

Physical constants are the exact SI-2019 values.  The in-repo oracle for the
zeroth Bessel function is its defining period average
(1/pi) integral_0^pi cos(x sin theta) d theta, evaluated by adaptive
quadrature; the fast path uses scipy.special.j0 and must agree to 1e-10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import scipy.integrate
import scipy.optimize
import scipy.special

ELEMENTARY_CHARGE = 1.602176634e-19  # C
HBAR_EV_S = 6.582119569e-16  # eV s
HBAR_J_S = 1.054571817e-34  # J s


@dataclass(frozen=True)
class PumpFieldParams:
    """Pump-pulse parameters in SI units (field V/m, spacing m, photon eV)."""

    field: float
    spacing: float
    photon_energy: float

    def __post_init__(self):
        if self.field < 0 or self.spacing <= 0 or self.photon_energy <= 0:
            raise ValueError("field must be >= 0; spacing and photon energy positive")


def phase_amplitude(p: PumpFieldParams) -> float:
    """Peak Peierls phase q * l * E / (hbar omega), dimensionless."""
    return p.spacing * p.field / p.photon_energy  # (eV/q units cancel the charge)


def phase_amplitude_si(p: PumpFieldParams) -> float:
    """Same quantity evaluated entirely in SI units (cross-check path)."""
    omega = p.photon_energy * ELEMENTARY_CHARGE / HBAR_J_S  # rad/s
    return ELEMENTARY_CHARGE * p.spacing * p.field / (HBAR_J_S * omega)


def bessel_j0(x: float) -> float:
    """Zeroth Bessel function of the first kind (series/polynomial path)."""
    return float(scipy.special.j0(x))


def bessel_j0_quadrature(x: float) -> float:
    """J_0(x) as the period average of cos(x sin theta) (oracle path)."""
    val, _ = scipy.integrate.quad(
        lambda theta: math.cos(x * math.sin(theta)), 0.0, math.pi,
        epsabs=1e-13, epsrel=1e-13, limit=200,
    )
    return val / math.pi


def effective_hopping(j0: float, phi_max: float) -> float:
    """Time-averaged hopping Jbar = J0 * J_0(phi_max)."""
    if phi_max < 0:
        raise ValueError("phi_max must be >= 0")
    return j0 * bessel_j0(phi_max)


def first_bessel_zero() -> float:
    """First root of J_0, bracketed in [2, 3], to 1e-10."""
    return float(
        scipy.optimize.brentq(bessel_j0, 2.0, 3.0, xtol=1e-12, rtol=8.9e-16)
    )


@dataclass(frozen=True)
class PhaseSuppression:
    """Relative hopping change at small Peierls phase."""

    approximate: float      # -phi_max^2 / 4
    exact: float            # J_0(phi_max) - 1
    error: float            # approximate - exact
    approximation_valid: bool  # phi_max <= 0.5


def small_phase_suppression(phi_max: float) -> PhaseSuppression:
    """Taylor estimate dJbar/J0 = -phi_max^2/4 next to the exact Bessel value."""
    approx = -(phi_max**2) / 4.0
    exact = bessel_j0(phi_max) - 1.0
    return PhaseSuppression(
        approximate=approx,
        exact=exact,
        error=approx - exact,
        approximation_valid=phi_max <= 0.5,
    )


def transient_hopping_factor(phi_max: float) -> float:
    """cos(phi_max): the instantaneous real part of J(t)/J0 at peak phase.

    Interpretation note: this is the momentary reduction, not the period
    average Jbar/J0."""
    return math.cos(phi_max)


def bandwidth_limit(delta_t_fwhm: float) -> float:
    """Minimal spectral width hbar * d_omega (eV) for a pulse of FWHM duration
    delta_t_fwhm (seconds), from the time-bandwidth product d_omega dt >= 4 ln 2."""
    if delta_t_fwhm <= 0:
        raise ValueError("pulse duration must be positive")
    return HBAR_EV_S * 4.0 * math.log(2.0) / delta_t_fwhm
