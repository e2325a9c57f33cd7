"""
Optical Output Quadratures
Intracavity and output quadrature responses, output spectra, output variances and the output field
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from errors import ConfigError
from lindyn import EffectiveParams, Susceptibility, response
from mechvar import MechanicalVariances, PositionSpectrumPoint, SpectrumMode, position_spectrum
from params import DerivedScalars, PhysicalParams


class AlphaInConvention(Enum):
    """c-number input amplitude entering the output field"""
    ZERO = "zero"
    DRIVE_NORMALIZED = "drive_normalized"  # α^in = ε^in/√κ


@dataclass(frozen=True)
class QuadratureResponse:
    """Transfer coefficients of one quadrature on (δx_m, δφ^in, δI^in)"""
    dx_m: complex
    dphi_in: complex
    di_in: complex


@dataclass(frozen=True)
class OutputSpectraPoint:
    """Output intensity and phase spectra with every intermediate coefficient"""
    omega: float
    s_i_out: complex
    s_phi_out: complex
    A: float
    B: float
    C: float
    D: float
    E: float
    a: float
    b: float
    c: float
    d: float
    a3: complex

    @property
    def s_i_out_real(self) -> float:
        return self.s_i_out.real

    @property
    def s_phi_out_real(self) -> float:
        return self.s_phi_out.real


@dataclass(frozen=True)
class OutputVariances:
    var_i_out: float
    var_phi_out: float
    delta_i_out: float    # sqrt(var_i_out), the plotted mean square fluctuation
    delta_phi_out: float

    @property
    def intensity_squeezed(self) -> bool:
        return self.delta_i_out < 1.0


@dataclass(frozen=True)
class OutputField:
    alpha_out: complex
    a4: float
    a5: float
    alpha_in: float


def a3_factor(p: PhysicalParams, ep: EffectiveParams, omega: float) -> complex:
    """[(−iΩ + κ/2)² + Δ̃²]⁻¹"""
    return 1.0 / (complex(p.kappa / 2.0, -omega) ** 2 + ep.delta_tilde ** 2)


def intracavity_quadratures(p: PhysicalParams, ep: EffectiveParams,
                            omega: float) -> Tuple[QuadratureResponse, QuadratureResponse]:
    """(δI, δφ) inside the cavity"""
    a3 = a3_factor(p, ep, omega)
    root_kappa = math.sqrt(p.kappa)
    z = complex(p.kappa / 2.0, -omega)
    intensity = QuadratureResponse(
        dx_m=-a3 * ep.delta_tilde * ep.g_eff,
        dphi_in=a3 * ep.delta_tilde * root_kappa,
        di_in=-a3 * root_kappa * z,
    )
    phase = QuadratureResponse(
        dx_m=a3 * ep.g_eff * z,
        dphi_in=a3 * root_kappa * z,
        di_in=a3 * ep.delta_tilde * root_kappa,
    )
    return intensity, phase


def output_quadratures(p: PhysicalParams, ep: EffectiveParams,
                       omega: float) -> Tuple[QuadratureResponse, QuadratureResponse]:
    """(δI^out, δφ^out) of the reflected beam"""
    a3 = a3_factor(p, ep, omega)
    root_kappa = math.sqrt(p.kappa)
    z = complex(p.kappa / 2.0, -omega)
    w = omega ** 2 + p.kappa ** 2 / 4.0 - ep.delta_tilde ** 2
    intensity = QuadratureResponse(
        dx_m=-a3 * ep.delta_tilde * root_kappa * ep.g_eff,
        dphi_in=a3 * ep.delta_tilde * p.kappa,
        di_in=-a3 * w,
    )
    phase = QuadratureResponse(
        dx_m=a3 * root_kappa * ep.g_eff * z,
        dphi_in=a3 * w,
        di_in=a3 * ep.delta_tilde * p.kappa,
    )
    return intensity, phase


def input_output(alpha_in: complex, alpha_cavity: complex, kappa: float) -> complex:
    return -alpha_in + math.sqrt(kappa) * alpha_cavity


def output_spectra(p: PhysicalParams, ep: EffectiveParams, sus: Susceptibility,
                   spectrum: PositionSpectrumPoint) -> OutputSpectraPoint:
    if sus.omega != spectrum.omega:
        raise ConfigError(f"Susceptibility at {sus.omega!r} and spectrum at {spectrum.omega!r} "
                          "must share one frequency", field="omega")
    omega, a1, kappa = sus.omega, sus.a1, p.kappa
    dt, g2, om = ep.delta_tilde, ep.g_eff ** 2, p.omega_m
    spring = sus.omega_eff_sq - omega ** 2
    damping = sus.gamma_eff
    w = omega ** 2 + kappa ** 2 / 4.0 - dt ** 2
    v = dt ** 2 + kappa ** 2 / 4.0 - omega ** 2

    a = a1 ** 2 * kappa * (dt * v - omega * w)
    b = a1 ** 2 * (v * w + dt * kappa ** 2 * omega)
    c = 2.0 * (omega - dt) * w + kappa ** 2 * dt
    d = 2.0 * dt * (omega - dt) - w

    A = a * dt * g2 * om * kappa * spring * (dt - omega)
    B = b * dt * g2 * om * kappa * omega * damping * (dt - omega)
    C = dt * g2 * (kappa ** 2 / 4.0) * om * (2.0 * b * spring - 2.0 * a * omega * damping)
    D = (spring * v + kappa * omega ** 2 * damping) * (c / 2.0 - omega * d) * kappa * a1
    E = (kappa * spring - damping * v) * (omega * c + kappa ** 2 / 2.0 * d) * omega * a1

    mechanical = abs(sus.chi) ** 2 * spectrum.s_x
    input_floor = a1 / 2.0 * w ** 2 + a1 * dt ** 2 * kappa ** 2
    s_i = a1 * dt ** 2 * g2 * kappa * mechanical + input_floor + A - B - C
    s_phi = (a1 * g2 * kappa * (kappa ** 2 / 4.0 + omega ** 2) * mechanical
             + input_floor + g2 * kappa * om * (D + E))

    return OutputSpectraPoint(
        omega=omega, s_i_out=complex(s_i), s_phi_out=complex(s_phi),
        A=A, B=B, C=C, D=D, E=E, a=a, b=b, c=c, d=d,
        a3=a3_factor(p, ep, omega),
    )


def output_spectra_at(p: PhysicalParams, ep: EffectiveParams, omega: float,
                      mode: SpectrumMode = SpectrumMode.EXACT) -> OutputSpectraPoint:
    return output_spectra(p, ep, response(p, ep, omega), position_spectrum(p, ep, omega, mode))


def output_variances(p: PhysicalParams, ep: EffectiveParams, mv: MechanicalVariances) -> OutputVariances:
    """Quasi-resonant output variances; κ enters the prefactor in rad/s"""
    om2 = p.omega_m ** 2
    detuning_sq = ep.delta_tilde ** 2 / om2
    half_kappa_sq = p.kappa ** 2 / (4.0 * om2)
    denominator = (detuning_sq + half_kappa_sq - 1.0) ** 2 + p.kappa ** 2 / om2
    coupling = (ep.g_eff ** 2 / om2) * p.kappa / denominator

    var_i = detuning_sq * coupling * mv.var_x
    var_phi = (1.0 + half_kappa_sq) * coupling * mv.var_x
    return OutputVariances(
        var_i_out=var_i,
        var_phi_out=var_phi,
        delta_i_out=math.sqrt(var_i),
        delta_phi_out=math.sqrt(var_phi),
    )


def output_field(p: PhysicalParams, d: DerivedScalars, ep: EffectiveParams, detuning: float,
                 convention: AlphaInConvention = AlphaInConvention.ZERO) -> OutputField:
    """Mean reflected amplitude α^out = (a₄ + i a₅)/(offset² + κ²/4Ω_m²)"""
    offset = detuning / p.omega_m + ep.eta - 1.0
    half_kappa_sq = p.kappa ** 2 / (4.0 * p.omega_m ** 2)
    root_kappa = math.sqrt(p.kappa)
    eps = d.epsilon_in
    alpha_in = 0.0 if convention is AlphaInConvention.ZERO else eps / root_kappa

    a4 = half_kappa_sq * alpha_in + offset * (offset * alpha_in + root_kappa / p.omega_m * eps)
    a5 = offset * (p.kappa / p.omega_m) * alpha_in - p.kappa * root_kappa / (2.0 * p.omega_m ** 2) * eps
    return OutputField(
        alpha_out=complex(a4, a5) / (offset ** 2 + half_kappa_sq),
        a4=a4,
        a5=a5,
        alpha_in=alpha_in,
    )
