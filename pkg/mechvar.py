"""
Mechanical Quadrature Variances
Position noise spectrum, closed-form and quadrature variances, uncertainty product and phonon number
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Tuple

from scipy.integrate import quad

from errors import ConfigError, ParametricInstabilityError, QuadratureError
from lindyn import EffectiveParams, response, susceptibility
from params import HBAR, K_B, PhysicalParams

logger = logging.getLogger(__name__)

QUAD_LIMIT = 400
# peak windows, in units of the effective linewidth
PEAK_WINDOWS = (0.5, 2.0, 10.0, 100.0, 1e3, 1e4)


class SpectrumMode(Enum):
    """Evaluation of the thermal coth factor"""
    EXACT = "exact"
    HIGH_TEMPERATURE = "high-t"


@dataclass(frozen=True)
class PositionSpectrumPoint:
    """S_x at one frequency; complex as written, variances use the real part"""
    omega: float
    s_x: complex
    thermal: float
    divergent: bool = False


@dataclass(frozen=True)
class MechanicalVariances:
    """Mechanical quadrature variances in units of the zero-point variance"""
    var_x: float
    var_p: float
    heisenberg_product: float
    n_eff: float
    a2: float
    a2_imag: float
    omega_eff_sq: float
    gamma_eff: float
    abs_error: float = 0.0

    @property
    def satisfies_uncertainty(self) -> bool:
        return self.heisenberg_product >= 1.0


def thermal_weight(p: PhysicalParams, omega: float, mode: SpectrumMode) -> Tuple[float, bool]:
    """Ω(1 + coth(ħΩ/2k_BT)), plus a flag when coth itself diverges at Ω = 0"""
    if mode is SpectrumMode.HIGH_TEMPERATURE:
        return omega + 2.0 * K_B * p.temperature / HBAR, False
    if p.temperature == 0:
        return (2.0 * omega if omega > 0 else 0.0), False
    if omega == 0:
        return 2.0 * K_B * p.temperature / HBAR, True
    x = HBAR * abs(omega) / (2.0 * K_B * p.temperature)
    # coth x − 1 = 2/(e^{2x} − 1)
    excess = 2.0 / math.expm1(2.0 * x) if 2.0 * x < 700.0 else 0.0
    if omega > 0:
        return omega * (2.0 + excess), False
    return abs(omega) * excess, False


def _spectrum(p: PhysicalParams, ep: EffectiveParams, omega: float,
              mode: SpectrumMode) -> PositionSpectrumPoint:
    a1 = response(p, ep, omega).a1
    optical = a1 * ep.g_eff ** 2 * p.omega_m ** 2 * (p.kappa / 2.0) * complex(
        ep.delta_tilde ** 2 - omega ** 2 + p.kappa ** 2 / 4.0, -p.kappa * ep.delta_tilde)
    weight, divergent = thermal_weight(p, omega, mode)
    thermal = 2.0 * p.gamma_m * p.omega_m * weight
    return PositionSpectrumPoint(omega=omega, s_x=optical + thermal, thermal=thermal,
                                 divergent=divergent)


def position_spectrum(p: PhysicalParams, ep: EffectiveParams, omega: float,
                      mode: SpectrumMode = SpectrumMode.EXACT) -> PositionSpectrumPoint:
    point = _spectrum(p, ep, omega, mode)
    if point.divergent:
        logger.warning("coth(hbar*Omega/2k_BT) diverges at Omega = 0; "
                       "returning the finite limit of Omega*coth")
    return point


def _assemble(var_x: float, var_p: float, a2: complex, omega_eff_sq: float,
              gamma_eff: float, abs_error: float = 0.0) -> MechanicalVariances:
    product = var_x * var_p
    if product < 1.0:
        logger.debug(f"Uncertainty product below one: {product:.6g}")
    return MechanicalVariances(
        var_x=var_x,
        var_p=var_p,
        heisenberg_product=product,
        n_eff=(var_x + var_p) / 4.0 - 0.5,
        a2=a2.real,
        a2_imag=a2.imag,
        omega_eff_sq=omega_eff_sq,
        gamma_eff=gamma_eff,
        abs_error=abs_error,
    )


def a2_coefficient(p: PhysicalParams, ep: EffectiveParams) -> complex:
    """Optical back-action plus high-temperature thermal drive, evaluated at Ω ≈ Ω_m"""
    om2 = p.omega_m ** 2
    detuning_term = ep.delta_tilde ** 2 / om2 + p.kappa ** 2 / (4.0 * om2) - 1.0
    optical = (ep.g_eff ** 2 / om2) * p.kappa * complex(
        detuning_term, -p.kappa * ep.delta_tilde / om2) / (detuning_term ** 2 + p.kappa ** 2 / om2)
    return optical + 4.0 * p.gamma_m * (1.0 + 2.0 * K_B * p.temperature / (HBAR * p.omega_m))


def variances_closed_form(p: PhysicalParams, ep: EffectiveParams) -> MechanicalVariances:
    """
    Quasi-resonant ⟨δx_m²⟩ and ⟨δp_m²⟩ with Γ_eff and Ω_eff taken at Ω_m.
    Raises ParametricInstabilityError for Γ_eff <= 0 and StaticInstabilityError for Ω_eff² <= 0.
    """
    sus = susceptibility(p, ep, p.omega_m)
    if sus.gamma_eff <= 0:
        raise ParametricInstabilityError(
            f"Effective damping is not positive: Gamma_eff = {sus.gamma_eff:.6g} rad/s",
            gamma_eff=sus.gamma_eff)
    a2 = a2_coefficient(p, ep)
    var_x = p.omega_m ** 2 * a2.real / (4.0 * sus.gamma_eff * sus.omega_eff_sq)
    var_p = a2.real / (4.0 * sus.gamma_eff)
    return _assemble(var_x, var_p, a2, sus.omega_eff_sq, sus.gamma_eff)


def _breakpoints(p: PhysicalParams, ep: EffectiveParams, omega_max: float) -> List[float]:
    resonant = response(p, ep, p.omega_m)
    width = max(abs(resonant.gamma_eff), p.gamma_m, 1e-12 * p.omega_m)
    centers = [p.omega_m, abs(ep.delta_tilde)]
    if resonant.omega_eff_sq > 0:
        centers.append(math.sqrt(resonant.omega_eff_sq))

    points = {0.0, omega_max}
    for center in centers:
        points.add(center)
        for k in PEAK_WINDOWS:
            points.update((center - k * width, center + k * width))
    points.update((abs(ep.delta_tilde) - p.kappa, abs(ep.delta_tilde) + p.kappa))
    return sorted(x for x in points if 0.0 <= x <= omega_max)


def _integrate(integrand: Callable[[float], float], points: List[float],
               rel_tol: float) -> Tuple[float, float]:
    total, error = 0.0, 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        if hi <= lo:
            continue
        result = quad(integrand, lo, hi, epsabs=0.0, epsrel=rel_tol,
                      limit=QUAD_LIMIT, full_output=1)
        total += result[0]
        error += result[1]
    return total, error


def variances_by_quadrature(p: PhysicalParams, ep: EffectiveParams, omega_max: float,
                            rel_tol: float = 1e-8,
                            mode: SpectrumMode = SpectrumMode.EXACT) -> MechanicalVariances:
    """Integrate |χ_eff|² Re S_x over [−omega_max, omega_max], folding Ω and −Ω together"""
    if omega_max < 10.0 * max(p.omega_m, p.kappa):
        raise ConfigError(f"omega_max must be at least 10*max(omega_m, kappa), got {omega_max:.6g}",
                          field="omega_max")
    if not 1e-10 <= rel_tol <= 1e-2:
        raise ConfigError(f"rel_tol must lie in [1e-10, 1e-2], got {rel_tol!r}", field="rel_tol")

    def folded(omega: float) -> float:
        chi_sq = abs(response(p, ep, omega).chi) ** 2
        s_re = _spectrum(p, ep, omega, mode).s_x.real + _spectrum(p, ep, -omega, mode).s_x.real
        return chi_sq * s_re

    points = _breakpoints(p, ep, omega_max)
    x_total, x_err = _integrate(folded, points, rel_tol)
    p_total, p_err = _integrate(lambda w: (w / p.omega_m) ** 2 * folded(w), points, rel_tol)

    var_x, var_p = x_total / (2.0 * math.pi), p_total / (2.0 * math.pi)
    abs_error = max(x_err, p_err) / (2.0 * math.pi)
    achieved = max(x_err / abs(x_total) if x_total else math.inf,
                   p_err / abs(p_total) if p_total else math.inf)
    if not achieved <= rel_tol:
        raise QuadratureError(f"Quadrature did not converge: relative error {achieved:.3g} "
                              f"exceeds {rel_tol:.3g}", achieved_rel_error=achieved)
    logger.info(f"Quadrature over {len(points) - 1} segments: var_x={var_x:.6g}, "
                f"var_p={var_p:.6g}, rel. error {achieved:.2g}")

    resonant = response(p, ep, p.omega_m)
    return _assemble(var_x, var_p, complex(4.0 * resonant.gamma_eff * var_p, 0.0),
                     resonant.omega_eff_sq, resonant.gamma_eff, abs_error)


def mean_energy(p: PhysicalParams, mv: MechanicalVariances) -> float:
    """E = ħΩ_m(n_eff + 1/2), joules"""
    return HBAR * p.omega_m * (mv.n_eff + 0.5)


def vacuum_tail_bound(p: PhysicalParams, omega_max: float) -> float:
    """Excess of the T = 0 exact-mode var_p from its 1/Ω tail up to omega_max"""
    return 2.0 * p.gamma_m / (math.pi * p.omega_m) * math.log(omega_max / p.omega_m)


def compare_with_quadrature(p: PhysicalParams, ep: EffectiveParams, omega_max: float,
                            rel_tol: float = 1e-8, mode: SpectrumMode = SpectrumMode.EXACT,
                            tolerance: float = 0.1) -> Tuple[MechanicalVariances, MechanicalVariances, float]:
    """Closed form against the integral oracle; the largest relative deviation is returned"""
    closed = variances_closed_form(p, ep)
    integral = variances_by_quadrature(p, ep, omega_max, rel_tol, mode)
    deviation = max(abs(integral.var_x / closed.var_x - 1.0), abs(integral.var_p / closed.var_p - 1.0))
    if deviation > tolerance:
        logger.warning(f"Closed form and quadrature differ by {deviation:.1%}: "
                       "outside the quasi-resonant regime")
    return closed, integral, deviation
