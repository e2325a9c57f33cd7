"""
Mean-Field Time Evolution
Noise-free integration of the nonlinear optomechanical equations in dimensionless time
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from errors import ConfigError, IntegrationError
from lindyn import DriftMatrix
from params import HBAR, DerivedScalars, PhysicalParams, laser_frequency
from steadystate import operating_point

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12
GROWTH_FACTOR = 10.0
WINDOW_FRACTION = 0.1


class TrajectoryStatus(Enum):
    """Outcome of one integration"""
    STABLE = "stable"
    GROWING = "growing"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class TrajectoryState:
    t: float        # s
    x_m: float
    p_m: float
    alpha: complex


@dataclass
class Trajectory:
    """Sampled trajectory and the verdict on its long-time behavior"""
    states: List[TrajectoryState] = field(default_factory=list)
    status: TrajectoryStatus = TrajectoryStatus.STABLE
    message: str = ""

    @property
    def final(self) -> TrajectoryState:
        return self.states[-1]

    @property
    def is_stable(self) -> bool:
        return self.status is TrajectoryStatus.STABLE

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        t = np.array([s.t for s in self.states])
        x = np.array([s.x_m for s in self.states])
        p = np.array([s.p_m for s in self.states])
        alpha = np.array([s.alpha for s in self.states])
        return t, x, p, alpha

    def to_frame(self) -> pd.DataFrame:
        t, x, p, alpha = self.arrays()
        return pd.DataFrame({
            "t": t,
            "x_m": x,
            "p_m": p,
            "alpha_re": alpha.real,
            "alpha_im": alpha.imag,
            "alpha_abs_sq": np.abs(alpha) ** 2,
        })


def drive_amplitude(p: PhysicalParams, detuning: float) -> float:
    """ε_ℓ = sqrt(2κP_in/(ħω_ℓ)), the drive whose fixed point is the steady-state cubic"""
    return float(np.sqrt(2.0 * p.kappa * p.p_in / (HBAR * laser_frequency(p, detuning))))


def fixed_point_state(p: PhysicalParams, d: DerivedScalars, detuning: float) -> TrajectoryState:
    """Operating point of the cubic; the β″ force shifts the true fixed point slightly"""
    ss = operating_point(p, d, detuning)
    return TrajectoryState(t=0.0, x_m=float(np.real(ss.x_bar_m)), p_m=0.0, alpha=ss.alpha_bar)


def _growth_detected(x: np.ndarray) -> bool:
    window = max(2, int(WINDOW_FRACTION * len(x)))
    early = np.ptp(x[:window])
    late = np.ptp(x[-window:])
    floor = 1e-6 * max(1.0, abs(float(np.mean(x[-window:]))))
    return bool(late > GROWTH_FACTOR * early and late > floor)


def integrate(p: PhysicalParams, d: DerivedScalars, detuning: float, initial: TrajectoryState,
              t_end: float, rel_tol: float = 1e-8, samples: int = 2001) -> Trajectory:
    """RK45 in τ = Ω_m t; divergence and envelope growth are reported, not raised"""
    if not 1e-12 <= rel_tol <= 1e-4:
        raise ConfigError(f"rel_tol must lie in [1e-12, 1e-4], got {rel_tol!r}", field="rel_tol")
    if not t_end > 0:
        raise ConfigError(f"t_end must be > 0, got {t_end!r}", field="t_end")
    if samples < 2:
        raise ConfigError(f"samples must be >= 2, got {samples!r}", field="samples")

    om = p.omega_m
    gamma = p.gamma_m / om
    half_kappa = p.kappa / (2.0 * om)
    delta = detuning / om
    g = d.g_m / om
    cubic = p.beta_prime * d.x_zpf ** 2 / om ** 2
    drive = drive_amplitude(p, detuning) / om

    def rhs(tau, y):
        x, pm, ar, ai = y
        shift = delta + g * x
        return [
            pm,
            -x - gamma * pm + 2.0 * g * (ar * ar + ai * ai) + cubic * x ** 3,
            -half_kappa * ar - shift * ai,
            shift * ar - half_kappa * ai - drive,
        ]

    def escape(tau, y):
        return DIVERGENCE_LIMIT - np.max(np.abs(y))
    escape.terminal = True
    escape.direction = -1

    tau0 = initial.t * om
    tau_end = tau0 + t_end * om
    y0 = [initial.x_m, initial.p_m, initial.alpha.real, initial.alpha.imag]
    sol = solve_ivp(rhs, (tau0, tau_end), y0, method="RK45",
                    t_eval=np.linspace(tau0, tau_end, samples),
                    rtol=rel_tol, atol=rel_tol * 1e-3, events=escape)
    if sol.status == -1:
        raise IntegrationError(f"Integration failed: {sol.message}. Reduce the kappa*dt scale "
                               "by shortening t_end or relaxing rel_tol", detuning=detuning)

    ts, ys = sol.t, sol.y
    if sol.status == 1 and len(sol.t_events[0]):
        ts = np.append(ts, sol.t_events[0][-1])
        ys = np.hstack([ys, sol.y_events[0][-1][:, None]])
    states = [TrajectoryState(t=tau / om, x_m=float(y[0]), p_m=float(y[1]), alpha=complex(y[2], y[3]))
              for tau, y in zip(ts, ys.T)]

    if sol.status == 1 or not np.all(np.isfinite(ys)):
        status, message = TrajectoryStatus.DIVERGED, f"state exceeded {DIVERGENCE_LIMIT:g}"
    elif _growth_detected(ys[0]):
        status, message = TrajectoryStatus.GROWING, "mechanical oscillation envelope grows"
    else:
        status, message = TrajectoryStatus.STABLE, "trajectory settled"
    if status is not TrajectoryStatus.STABLE:
        logger.warning(f"Unstable trajectory at detuning {detuning:.6g} rad/s: {message}")
    logger.info(f"Integrated {len(states)} samples over {t_end:.3g} s, status {status.value}")
    return Trajectory(states=states, status=status, message=message)


def propagate_linear(m: DriftMatrix, u0: Sequence[float], times: Sequence[float]) -> np.ndarray:
    """Exact solution u(t) = exp(At) u0 of the linearized dynamics"""
    u0 = np.asarray(u0, dtype=float)
    return np.array([expm(m.entries * t) @ u0 for t in times])


def envelope_decay_rate(trajectory: Trajectory, center: Tuple[float, float] = (0.0, 0.0),
                        start_fraction: float = 0.0) -> float:
    """Exponential rate fitted to the mechanical deviation from `center`, in 1/s"""
    t, x, p, _ = trajectory.arrays()
    start = int(start_fraction * len(t))
    radius = np.hypot(x[start:] - center[0], p[start:] - center[1])
    mask = radius > 0
    slope = np.polyfit(t[start:][mask], np.log(radius[mask]), 1)[0]
    return float(-slope)
