import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from lindyn import EffectiveParams, effective_params  # noqa: E402
from params import PhysicalParams, derive_scalars, load_params_file  # noqa: E402
from steadystate import operating_point  # noqa: E402

REFERENCE_CONFIG = ROOT / "configs" / "reference.json"

# Weakly coupled, strongly damped oscillator in rad/s (g_M/Ω_m ≈ 0.39)
SYNTHETIC = dict(
    omega_m=1e6,
    gamma_m=5e4,
    kappa=5e5,
    omega_c=1.2e15,
    omega_l=1.2e15 - 1e6,
    mass=1e-15,
    cavity_length=1e-3,
    beta_prime=0.0,
    p_in=1e-15,
    temperature=0.0,
)


def make_params(**changes) -> PhysicalParams:
    values = dict(SYNTHETIC)
    values.update(changes)
    return PhysicalParams(**values)


def bare_effective(g_eff=0.0, beta=0.0, delta_tilde=-1e6, eta=0.0) -> EffectiveParams:
    """Effective parameters placed by hand, with Δ chosen so that Δ̃ = Δ + ηΩ_m for Ω_m = 1e6"""
    return EffectiveParams(g_eff=g_eff, beta=beta, eta=eta, delta_tilde=delta_tilde,
                           detuning=delta_tilde - eta * 1e6)


@pytest.fixture(scope="session")
def reference():
    return load_params_file(REFERENCE_CONFIG)


@pytest.fixture(scope="session")
def reference_derived(reference):
    return derive_scalars(reference)


@pytest.fixture(scope="session")
def reference_effective(reference, reference_derived):
    ss = operating_point(reference, reference_derived, reference.detuning)
    return effective_params(reference, reference_derived, ss, reference.detuning)


@pytest.fixture
def synthetic():
    return make_params()
