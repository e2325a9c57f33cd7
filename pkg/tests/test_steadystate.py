"""
Unit tests for the steady-state cubic
"""
import logging
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_params
from errors import DegenerateCubicError, NoStableRootError
from params import HBAR, derive_scalars, laser_frequency
from steadystate import (RootClass, cubic_coefficients, cubic_discriminant, intracavity_amplitude,
                         operating_point, photon_number, select_operating_point, solve_cubic)

REAL_ROOT = 1.27957e-13
COMPLEX_ROOT = complex(-1.08996e-8, 7.414e-10)


def _bistable_params():
    """Δ = −3κ with the drive chosen so that D = 2κ³ in the scaled cubic"""
    p = make_params(kappa=1e5)
    d = derive_scalars(p)
    detuning = -3.0 * p.kappa
    omega_l = laser_frequency(p, detuning)
    p_in = p.kappa ** 2 * HBAR * p.omega_m * omega_l / (2.0 * d.g_m ** 2)
    return p.with_overrides(detuning=detuning, p_in=p_in), detuning


class TestReferenceRoots:
    """Roots at Δ = Ω_m, P_in = 1 mW"""

    def test_three_roots(self, reference, reference_derived):
        roots = solve_cubic(reference, reference_derived, reference.detuning)
        assert len(roots) == 3
        assert [r.classification for r in roots] == [
            RootClass.STABLE_REAL, RootClass.UNSTABLE_COMPLEX_PAIR, RootClass.UNSTABLE_COMPLEX_PAIR]

    def test_root_values(self, reference, reference_derived):
        real, upper, lower = solve_cubic(reference, reference_derived, reference.detuning)
        assert real.x_bar == pytest.approx(REAL_ROOT, rel=0.02)
        assert upper.x_bar.real == pytest.approx(COMPLEX_ROOT.real, rel=0.02)
        assert upper.x_bar.imag == pytest.approx(COMPLEX_ROOT.imag, rel=0.02)
        assert lower.x_bar == upper.x_bar.conjugate()

    def test_residuals(self, reference, reference_derived):
        for root in solve_cubic(reference, reference_derived, reference.detuning):
            assert root.residual <= 1e-10

    def test_operating_point_is_small_real_root(self, reference, reference_derived):
        ss = operating_point(reference, reference_derived, reference.detuning)
        assert ss.is_stable_real
        assert not ss.bistable
        assert ss.x_bar == pytest.approx(REAL_ROOT, rel=0.02)

    def test_self_consistency(self, reference, reference_derived):
        d = reference_derived
        ss = operating_point(reference, d, reference.detuning)
        implied = 2.0 * d.g_m / reference.omega_m * ss.alpha_bar_sq
        assert abs(ss.x_bar_m - implied) / max(1.0, abs(ss.x_bar_m)) <= 1e-8

    def test_amplitude_matches_photon_number(self, reference, reference_derived):
        ss = operating_point(reference, reference_derived, reference.detuning)
        assert abs(ss.alpha_bar) ** 2 == pytest.approx(ss.alpha_bar_sq, rel=1e-12)

    def test_negative_discriminant(self, reference, reference_derived):
        assert cubic_discriminant(reference, reference_derived, reference.detuning) < 0


class TestVieta:
    """Symmetric functions of the roots against the coefficients"""

    @pytest.mark.parametrize("seed", range(10))
    def test_random_draws(self, reference, seed):
        rng = np.random.default_rng(seed)
        for _ in range(1000):
            scale = 10.0 ** rng.uniform(-3, 3, size=4)
            p = reference.with_overrides(
                p_in=reference.p_in * scale[0],
                kappa=reference.kappa * scale[1],
                mass=reference.mass * scale[2],
                detuning=reference.detuning * rng.uniform(-3, 3),
            )
            d = derive_scalars(p)
            roots = np.array([r.x_bar for r in solve_cubic(p, d, p.detuning)], dtype=complex)
            _, b, c, e = cubic_coefficients(p, d, p.detuning)
            x3 = max(abs(roots)) ** 3
            assert abs(roots.sum() + b) <= 1e-8 * max(abs(roots).max(), abs(b))
            assert abs(np.prod(roots) + e) <= 1e-8 * x3
            assert all(r.residual <= 1e-10 for r in solve_cubic(p, d, p.detuning))
            assert abs(np.prod(roots).imag) <= 1e-8 * x3


class TestEdgeCases:
    def test_undriven_cavity(self, synthetic):
        p = synthetic.with_overrides(p_in=0.0)
        d = derive_scalars(p)
        roots = solve_cubic(p, d, p.detuning)
        zero = roots[0]
        assert zero.x_bar == 0.0
        assert zero.alpha_bar_sq == 0.0
        assert zero.alpha_bar == 0j

    def test_degenerate_coupling(self, synthetic):
        d = replace(derive_scalars(synthetic), g_m=0.0)
        with pytest.raises(DegenerateCubicError):
            solve_cubic(synthetic, d, synthetic.detuning)

    def test_no_real_root(self):
        with pytest.raises(NoStableRootError):
            select_operating_point([])

    def test_conjugate_pair_is_exact(self, reference, reference_derived):
        _, upper, lower = solve_cubic(reference, reference_derived, reference.detuning)
        assert upper.x_bar_m == lower.x_bar_m.conjugate()

    def test_bistable_selection(self, caplog):
        p, detuning = _bistable_params()
        d = derive_scalars(p)
        assert cubic_discriminant(p, d, detuning) > 0
        roots = solve_cubic(p, d, detuning)
        assert all(r.is_stable_real for r in roots)
        with caplog.at_level(logging.WARNING):
            chosen = select_operating_point(roots)
        assert chosen.bistable
        assert abs(chosen.x_bar) == min(abs(r.x_bar) for r in roots)
        assert "Bistable" in caplog.text


class TestPhotonNumber:
    def test_undriven(self, synthetic):
        d = derive_scalars(synthetic)
        assert photon_number(synthetic.with_overrides(p_in=0.0), d, synthetic.detuning, 0.3) == 0.0

    def test_resonance_maximum(self, synthetic):
        d = derive_scalars(synthetic)
        x_m = -synthetic.detuning / d.g_m
        omega_l = laser_frequency(synthetic, synthetic.detuning)
        expected = 8.0 * synthetic.p_in / (HBAR * omega_l * synthetic.kappa)
        assert photon_number(synthetic, d, synthetic.detuning, x_m) == pytest.approx(expected, rel=1e-12)

    def test_decreasing_in_effective_detuning(self, synthetic):
        d = derive_scalars(synthetic)
        kappa = synthetic.kappa
        near = photon_number(synthetic, d, kappa, 0.0)
        far = photon_number(synthetic, d, 2.0 * kappa, 0.0)
        assert far < near

    def test_amplitude_modulus(self, synthetic):
        d = derive_scalars(synthetic)
        alpha = intracavity_amplitude(synthetic, d, synthetic.detuning, 0.01)
        assert abs(alpha) ** 2 == pytest.approx(photon_number(synthetic, d, synthetic.detuning, 0.01),
                                                rel=1e-12)

    def test_nondecreasing_in_power(self, reference, reference_derived):
        previous_n, previous_x = 0.0, 0.0
        for p_in in np.linspace(1e-5, 1e-3, 50):
            p = reference.with_overrides(p_in=float(p_in))
            ss = operating_point(p, reference_derived, p.detuning)
            assert ss.alpha_bar_sq >= previous_n
            assert ss.x_bar >= previous_x
            previous_n, previous_x = ss.alpha_bar_sq, ss.x_bar
