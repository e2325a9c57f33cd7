"""
Steady State Solver
Cubic equation for the mean nanobeam displacement, intracavity photon number and root classification
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Tuple, Union

import numpy as np

from errors import DegenerateCubicError, NoStableRootError
from params import HBAR, DerivedScalars, PhysicalParams, laser_frequency

logger = logging.getLogger(__name__)

NEWTON_STEPS = 2
REAL_ROOT_TOL = 1e-6


class RootClass(Enum):
    """Classification of a root of the steady-state cubic"""
    STABLE_REAL = "StableReal"
    UNSTABLE_COMPLEX_PAIR = "UnstableComplexPair"


@dataclass(frozen=True)
class SteadyState:
    """One root of the cubic with the cavity field it implies"""
    x_bar: complex                            # m
    x_bar_m: complex                          # x̄/x_ZPF
    alpha_bar_sq: Union[float, complex]       # |ᾱ|², real for StableReal roots
    alpha_bar: complex                        # sqrt(photons)
    classification: RootClass
    residual: float = 0.0
    bistable: bool = False

    @property
    def is_stable_real(self) -> bool:
        return self.classification is RootClass.STABLE_REAL


def _scaled_coefficients(p: PhysicalParams, d: DerivedScalars, detuning: float) -> Tuple[float, float, float]:
    """Monic cubic in x_ZPF units: y³ + b y² + c y − e = 0"""
    if d.g_m == 0:
        raise DegenerateCubicError("Optomechanical coupling g_M is zero; the cubic degenerates",
                                   field="g_m")
    omega_l = laser_frequency(p, detuning)
    b = 2.0 * detuning / d.g_m
    c = (4.0 * detuning ** 2 + p.kappa ** 2) / (4.0 * d.g_m ** 2)
    e = 4.0 * p.kappa * p.p_in / (HBAR * p.omega_m * omega_l * d.g_m)
    return b, c, e


def cubic_coefficients(p: PhysicalParams, d: DerivedScalars, detuning: float) -> np.ndarray:
    """Coefficients of the displacement cubic in metres, leading coefficient first"""
    b, c, e = _scaled_coefficients(p, d, detuning)
    x = d.x_zpf
    return np.array([1.0, b * x, c * x ** 2, -e * x ** 3])


def cubic_discriminant(p: PhysicalParams, d: DerivedScalars, detuning: float) -> float:
    """Positive for three distinct real roots, negative for one real root and a complex pair"""
    b, c, e = _scaled_coefficients(p, d, detuning)
    k = -e
    return 18.0 * b * c * k - 4.0 * b ** 3 * k + b ** 2 * c ** 2 - 4.0 * c ** 3 - 27.0 * k ** 2


def _cubic(y: complex, b: float, c: float, e: float) -> complex:
    return ((y + b) * y + c) * y - e


def _polish(y: complex, b: float, c: float, e: float) -> complex:
    for _ in range(NEWTON_STEPS):
        f = _cubic(y, b, c, e)
        df = (3.0 * y + 2.0 * b) * y + c
        if f == 0 or df == 0:
            break
        candidate = y - f / df
        if abs(_cubic(candidate, b, c, e)) > abs(f):
            break
        y = candidate
    return y


def _residual(y: complex, b: float, c: float, e: float) -> float:
    scale = max(abs(y) ** 3, abs(b) * abs(y) ** 2, abs(c) * abs(y), abs(e))
    return abs(_cubic(y, b, c, e)) / scale if scale > 0 else 0.0


def photon_number(p: PhysicalParams, d: DerivedScalars, detuning: float,
                  x_bar_m: Union[float, complex]) -> Union[float, complex]:
    """|ᾱ|² = 2κP_in / (ħω_ℓ[(Δ + g_M x̄_m)² + κ²/4])"""
    omega_l = laser_frequency(p, detuning)
    effective = detuning + d.g_m * x_bar_m
    return 2.0 * p.kappa * p.p_in / (HBAR * omega_l * (effective ** 2 + p.kappa ** 2 / 4.0))


def intracavity_amplitude(p: PhysicalParams, d: DerivedScalars, detuning: float,
                          x_bar_m: Union[float, complex]) -> complex:
    """ᾱ = ε_ℓ/(Δ̃ + iκ/2) with ε_ℓ = sqrt(2κP_in/(ħω_ℓ))"""
    drive = np.sqrt(2.0 * p.kappa * p.p_in / (HBAR * laser_frequency(p, detuning)))
    return complex(drive / (detuning + d.g_m * x_bar_m + 0.5j * p.kappa))


def _steady_state(p: PhysicalParams, d: DerivedScalars, detuning: float, y: complex,
                  classification: RootClass, residual: float) -> SteadyState:
    if classification is RootClass.STABLE_REAL:
        y_value: Union[float, complex] = float(y.real)
        n_photons: Union[float, complex] = float(photon_number(p, d, detuning, y_value))
    else:
        y_value = complex(y)
        n_photons = complex(photon_number(p, d, detuning, y_value))
    return SteadyState(
        x_bar=y_value * d.x_zpf,
        x_bar_m=y_value,
        alpha_bar_sq=n_photons,
        alpha_bar=intracavity_amplitude(p, d, detuning, y_value),
        classification=classification,
        residual=residual,
    )


def solve_cubic(p: PhysicalParams, d: DerivedScalars, detuning: float) -> List[SteadyState]:
    """All three roots: real ones first by magnitude, then the complex pair (Im > 0 first)"""
    b, c, e = _scaled_coefficients(p, d, detuning)
    raw = np.roots([1.0, b, c, -e])

    real_roots: List[complex] = []
    complex_roots: List[complex] = []
    for y in raw:
        y = _polish(complex(y), b, c, e)
        if abs(y.imag) <= REAL_ROOT_TOL * max(abs(y.real), 1.0):
            real_roots.append(complex(_polish(complex(y.real), b, c, e).real, 0.0))
        else:
            complex_roots.append(y)
    if len(complex_roots) == 1:
        # a lone complex root is a split near-double real root
        real_roots.append(complex(_polish(complex(complex_roots.pop().real), b, c, e).real, 0.0))

    roots: List[SteadyState] = []
    for y in sorted(real_roots, key=abs):
        roots.append(_steady_state(p, d, detuning, y, RootClass.STABLE_REAL, _residual(y, b, c, e)))
    if complex_roots:
        # conjugate pair from real coefficients; keep it exact
        upper = max(complex_roots, key=lambda z: z.imag)
        upper = complex(upper.real, abs(upper.imag))
        for y in (upper, upper.conjugate()):
            roots.append(_steady_state(p, d, detuning, y, RootClass.UNSTABLE_COMPLEX_PAIR,
                                       _residual(y, b, c, e)))

    logger.debug(f"Cubic at detuning {detuning:.6g} rad/s: "
                 f"{len(real_roots)} real root(s), {len(complex_roots)} complex")
    return roots


def select_operating_point(roots: List[SteadyState]) -> SteadyState:
    """The real root of smallest magnitude, flagged when several real roots coexist"""
    real = [r for r in roots if r.is_stable_real]
    if not real:
        raise NoStableRootError("No real steady-state root: the stable operating point is lost")
    chosen = min(real, key=lambda r: abs(r.x_bar))
    if len(real) > 1:
        logger.warning(f"Bistable regime: {len(real)} real roots, "
                       f"using the smallest x_bar = {chosen.x_bar.real:.6g} m")
        chosen = replace(chosen, bistable=True)
    return chosen


def operating_point(p: PhysicalParams, d: DerivedScalars, detuning: float) -> SteadyState:
    return select_operating_point(solve_cubic(p, d, detuning))
