"""
Linearized Fluctuation Dynamics
Effective parameters, 4x4 drift matrix, dynamical stability and effective mechanical susceptibility
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from errors import ConfigError, StaticInstabilityError, UnstableOperatingPointError
from params import DerivedScalars, PhysicalParams
from steadystate import SteadyState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EffectiveParams:
    """Linearization products around one operating point"""
    g_eff: float        # G = g_M |ᾱ|, rad/s
    beta: float         # geometrical nonlinearity
    eta: float          # optical nonlinearity
    delta_tilde: float  # Δ̃ = Δ + ηΩ_m, rad/s
    detuning: float     # Δ, rad/s

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta!r}", field="beta")
        if self.g_eff < 0:
            raise ConfigError(f"g_eff must be >= 0, got {self.g_eff!r}", field="g_eff")


def effective_params(p: PhysicalParams, d: DerivedScalars, ss: SteadyState,
                     detuning: float) -> EffectiveParams:
    if not ss.is_stable_real:
        raise UnstableOperatingPointError(
            f"Refusing to linearize around the complex root x_bar = {ss.x_bar}")
    x_m = float(np.real(ss.x_bar_m))
    eta = d.g_m * x_m / p.omega_m
    return EffectiveParams(
        g_eff=d.g_m * float(np.sqrt(max(float(np.real(ss.alpha_bar_sq)), 0.0))),
        beta=3.0 * p.beta_prime * d.x_zpf ** 2 * x_m ** 2 / p.omega_m ** 2,
        eta=eta,
        delta_tilde=(detuning / p.omega_m + eta) * p.omega_m,
        detuning=detuning,
    )


def override_nonlinearities(ep: EffectiveParams, omega_m: float, detuning: Optional[float] = None,
                            beta: Optional[float] = None, eta: Optional[float] = None) -> EffectiveParams:
    """Move Δ, β or η while keeping G; Δ̃ follows Δ/Ω_m + η without re-solving the steady state"""
    detuning = ep.detuning if detuning is None else detuning
    eta = ep.eta if eta is None else eta
    return replace(
        ep,
        beta=ep.beta if beta is None else beta,
        eta=eta,
        detuning=detuning,
        delta_tilde=(detuning / omega_m + eta) * omega_m,
    )


@dataclass(frozen=True)
class DriftMatrix:
    """A of du/dt = A u + n, rows and columns ordered (δx_m, δp_m, δI, δφ)"""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.shape != (4, 4):
            raise ConfigError(f"Drift matrix must be 4x4, got {entries.shape}", field="entries")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))


def drift_matrix(p: PhysicalParams, ep: EffectiveParams) -> DriftMatrix:
    """Drift matrix at one operating point; β softens the mechanical spring"""
    om, g, dt, half_kappa = p.omega_m, ep.g_eff, ep.delta_tilde, p.kappa / 2.0
    return DriftMatrix(np.array([
        [0.0, om, 0.0, 0.0],
        [om * (ep.beta - 1.0), -p.gamma_m, g, 0.0],
        [0.0, 0.0, -half_kappa, -dt],
        [g, 0.0, dt, -half_kappa],
    ]))


def frequency_matrix(p: PhysicalParams, ep: EffectiveParams, omega: float) -> np.ndarray:
    """B(Ω) of the Fourier-space dynamics B u + n = 0"""
    m = drift_matrix(p, ep).entries.astype(complex)
    # diagonal is iΩ plus the damping already present in A
    return m + 1j * omega * np.eye(4)


def characteristic_polynomial(m: DriftMatrix) -> np.ndarray:
    """Coefficients [1, a1, a2, a3, a4] of det(λI − A) by Faddeev-LeVerrier"""
    a = m.entries
    n = a.shape[0]
    coefficients = [1.0]
    work = np.eye(n)
    for k in range(1, n + 1):
        product = a @ work
        c_k = -np.trace(product) / k
        coefficients.append(float(c_k))
        work = product + c_k * np.eye(n)
    return np.array(coefficients)


def routh_table(coefficients: Sequence[float]) -> np.ndarray:
    """Numeric Routh array of a polynomial, leading coefficient first"""
    coefficients = np.asarray(coefficients, dtype=float)
    n = len(coefficients) - 1
    width = n // 2 + 1
    table = np.zeros((n + 1, width))
    table[0, :len(coefficients[0::2])] = coefficients[0::2]
    table[1, :len(coefficients[1::2])] = coefficients[1::2]
    for j in range(2, n + 1):
        pivot = table[j - 1, 0]
        if pivot == 0:
            # zero pivot: marginal or unstable, nothing sensible below
            table[j:, 0] = 0.0
            break
        for i in range(width - 1):
            table[j, i] = (pivot * table[j - 2, i + 1] - table[j - 2, 0] * table[j - 1, i + 1]) / pivot
    return table


def routh_hurwitz_stable(coefficients: Sequence[float]) -> bool:
    """All roots in the open left half plane iff the first Routh column is strictly positive"""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients[0] < 0:
        coefficients = -coefficients
    return bool(np.all(routh_table(coefficients)[:, 0] > 0))


@dataclass(frozen=True)
class StabilityReport:
    """Linear-stability verdict of a drift matrix"""
    stable: bool
    margin: float              # −max Re λ
    eigenvalues: np.ndarray
    routh_hurwitz: bool


def is_dynamically_stable(m: DriftMatrix) -> StabilityReport:
    """Eigenvalue verdict and margin, with the Routh-Hurwitz test alongside"""
    coefficients = characteristic_polynomial(m)
    eigenvalues = np.roots(coefficients)
    margin = float(-np.max(eigenvalues.real))
    return StabilityReport(
        stable=margin > 0,
        margin=margin,
        eigenvalues=np.sort_complex(eigenvalues),
        routh_hurwitz=routh_hurwitz_stable(coefficients),
    )


@dataclass(frozen=True)
class Susceptibility:
    """Effective mechanical response at one frequency"""
    omega: float
    chi: complex
    omega_eff_sq: float
    gamma_eff: float
    a1: float


def response(p: PhysicalParams, ep: EffectiveParams, omega: float) -> Susceptibility:
    """χ_eff without the buckling check, for integrands that scan far from resonance"""
    detuning_term = ep.delta_tilde ** 2 + p.kappa ** 2 / 4.0 - omega ** 2
    a1 = 1.0 / (detuning_term ** 2 + p.kappa ** 2 * omega ** 2)
    omega_eff_sq = p.omega_m ** 2 * (
        1.0 + a1 * ep.g_eff ** 2 * (ep.delta_tilde / p.omega_m) * detuning_term - ep.beta)
    gamma_eff = p.gamma_m - a1 * ep.g_eff ** 2 * p.omega_m * ep.delta_tilde * p.kappa
    chi = 1.0 / complex(omega_eff_sq - omega ** 2, -omega * gamma_eff)
    return Susceptibility(omega=omega, chi=chi, omega_eff_sq=omega_eff_sq,
                          gamma_eff=gamma_eff, a1=a1)


def susceptibility(p: PhysicalParams, ep: EffectiveParams, omega: float) -> Susceptibility:
    result = response(p, ep, omega)
    if result.omega_eff_sq <= 0:
        raise StaticInstabilityError(
            f"Effective spring constant is not positive: Omega_eff^2 = {result.omega_eff_sq:.6g}",
            omega=omega, omega_eff_sq=result.omega_eff_sq)
    return result
