"""
Unit tests for the sweep engine, the figure presets and the nonlinearity table
"""
import io
import math

import numpy as np
import pytest

from errors import BudgetExceededError, ConfigError
from mechvar import variances_closed_form
from sweep import (FIGURE_SPECS, Axis, AxisName, Method, Observable, Sideband, Spacing, SweepSpec,
                   evaluate_point, figure_spec, grid_points, mirror_sideband, nonlinearities_at,
                   resolve_operating_point, run_sweep, solved_range, table1_ranges, write_csv)

# printed endpoints per detuning ratio: (eta_min, eta_max, beta_min, beta_max)
TABLE1_PRINTED = {
    0.0: (2.54e-3, 6.79e-2, 7.87e-6, 5.72e-4),
    1.0: (1.17e-5, 1.0, 1.66e-10, 1.22),
}


def _detuning_spec(observable=Observable.VAR_X, count=5, **changes):
    values = dict(observable=observable,
                  axes=(Axis(AxisName.DETUNING_RATIO, 0.5, 1.5, count),),
                  fixed={"eta": 0.0, "beta": 0.1},
                  sideband=Sideband.COOLING)
    values.update(changes)
    return SweepSpec(**values)


def _first_crossing(x, y, level=1.0):
    """Linear interpolation of the first upward crossing of `level` along x"""
    for i in range(len(x) - 1):
        if y[i] < level <= y[i + 1]:
            return x[i] + (level - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    return math.nan


@pytest.fixture(scope="module")
def figures(reference):
    return {name: run_sweep(reference, spec).frame for name, spec in FIGURE_SPECS.items()}


class TestAxis:
    def test_linear_values(self):
        assert Axis(AxisName.BETA, 0.0, 1.0, 5).values().tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_log_values(self):
        values = Axis(AxisName.P_IN, 1e-6, 1e-3, 4, Spacing.LOG).values()
        np.testing.assert_allclose(values, [1e-6, 1e-5, 1e-4, 1e-3], rtol=1e-12)

    def test_list_axis(self):
        axis = Axis.from_values("eta", (0.04, 0.0))
        assert (axis.count, axis.min, axis.max) == (2, 0.0, 0.04)
        assert axis.values().tolist() == [0.04, 0.0]
        assert Axis.from_values(AxisName.BETA, [0.3]).count == 1

    @pytest.mark.parametrize("kwargs", [
        dict(name=AxisName.BETA, min=0.0, max=1.0, count=1),
        dict(name=AxisName.BETA, min=1.0, max=1.0, count=3),
        dict(name=AxisName.BETA, min=-0.1, max=1.0, count=3),
        dict(name=AxisName.P_IN, min=0.0, max=1e-3, count=3, spacing=Spacing.LOG),
        dict(name=AxisName.ETA, spacing=Spacing.LIST),
    ])
    def test_invalid_axis(self, kwargs):
        with pytest.raises(ConfigError):
            Axis(**kwargs)


class TestSweepSpec:
    def test_columns(self):
        spec = _detuning_spec(Observable.DELTA_I_OUT)
        assert spec.columns == ["detuning_ratio", "var_i_out", "delta_i_out", "stable", "error_code"]

    @pytest.mark.parametrize("changes", [
        dict(axes=()),
        dict(axes=(Axis(AxisName.BETA, 0.0, 1.0, 2),) * 2),
        dict(fixed={"colour": 1.0}),
        dict(fixed={"detuning_ratio": 1.0}),
        dict(workers=0),
        dict(max_points=0),
    ])
    def test_invalid_spec(self, changes):
        with pytest.raises(ConfigError):
            _detuning_spec(**changes)

    @pytest.mark.parametrize("fixed", [{"beta": 0.1}, {"eta": 0.0}])
    def test_self_consistent_excludes_nonlinearities(self, fixed):
        with pytest.raises(ConfigError):
            _detuning_spec(fixed=fixed, self_consistent=True)

    def test_self_consistent_point_rejects_overrides(self, reference):
        with pytest.raises(ConfigError):
            resolve_operating_point(reference, {"beta": 0.1}, self_consistent=True)

    def test_budget(self, reference):
        spec = SweepSpec(Observable.VAR_P, (Axis(AxisName.DETUNING_RATIO, 0.5, 1.5, 10),
                                            Axis(AxisName.BETA, 0.0, 0.5, 10)), max_points=99)
        with pytest.raises(BudgetExceededError) as info:
            run_sweep(reference, spec)
        assert info.value.details["points"] == 100

    def test_unknown_figure(self):
        with pytest.raises(ConfigError):
            figure_spec("fig6")

    def test_figure_options(self):
        assert figure_spec("fig1", workers=3).workers == 3
        assert figure_spec("fig1") is FIGURE_SPECS["fig1"]


class TestOperatingPoint:
    def test_mirror_sideband(self, reference_effective):
        mirrored = mirror_sideband(reference_effective)
        assert mirrored.delta_tilde == -reference_effective.delta_tilde
        assert mirrored.eta == -reference_effective.eta
        assert mirrored.g_eff == reference_effective.g_eff
        assert mirror_sideband(mirrored) == reference_effective

    def test_override_keeps_coupling(self, reference, reference_effective):
        op = resolve_operating_point(reference, {"detuning_ratio": 0.5, "beta": 0.2, "eta": 0.01})
        assert op.model.g_eff == reference_effective.g_eff
        assert op.model.beta == 0.2
        assert op.model.delta_tilde == pytest.approx(0.51 * reference.omega_m, rel=1e-14)
        assert op.model == op.field

    def test_cooling_maps_model_only(self, reference):
        op = resolve_operating_point(reference, {"eta": 0.01}, sideband=Sideband.COOLING)
        assert op.model == mirror_sideband(op.field)

    def test_self_consistent_solves_at_detuning(self, reference):
        op = resolve_operating_point(reference, {"detuning_ratio": 0.5}, self_consistent=True)
        assert op.field.detuning == pytest.approx(0.5 * reference.omega_m, rel=1e-15)
        assert op.field.eta > 0.0

    def test_unknown_key(self, reference):
        with pytest.raises(ConfigError):
            resolve_operating_point(reference, {"wavelength": 1.0})


class TestRunSweep:
    def test_row_major_order(self, reference):
        spec = SweepSpec(Observable.OMEGA_EFF, (Axis.from_values(AxisName.BETA, (0.1, 0.2)),
                                                Axis(AxisName.DETUNING_RATIO, 0.5, 1.5, 3)))
        result = run_sweep(reference, spec)
        assert result.column("beta").tolist() == [0.1, 0.1, 0.1, 0.2, 0.2, 0.2]
        assert result.column("detuning_ratio").tolist() == [0.5, 1.0, 1.5] * 2
        assert [p["beta"] for p in grid_points(spec)] == result.column("beta").tolist()

    def test_single_point_matches_direct_call(self, reference):
        spec = SweepSpec(Observable.VAR_X, (Axis.from_values(AxisName.BETA, [0.39]),),
                         fixed={"detuning_ratio": 1.0, "eta": 0.0}, sideband=Sideband.COOLING)
        row = run_sweep(reference, spec).rows[0]
        op = resolve_operating_point(reference, {"beta": 0.39, "detuning_ratio": 1.0, "eta": 0.0},
                                     sideband=Sideband.COOLING)
        assert row["var_x"] == variances_closed_form(op.params, op.model).var_x
        assert row["stable"]
        assert row["error_code"] == ""

    def test_failed_points_are_rows(self, reference):
        spec = SweepSpec(Observable.VAR_X, (Axis.from_values(AxisName.BETA, (0.1, 1.5)),),
                         fixed={"detuning_ratio": 1.0, "eta": 0.0}, sideband=Sideband.COOLING)
        result = run_sweep(reference, spec)
        assert result.failed == 1
        good, bad = result.rows
        assert good["error_code"] == ""
        assert math.isnan(bad["var_x"])
        assert not bad["stable"]
        assert bad["error_code"] == "static_instability"

    def test_printed_sideband_anti_damps(self, reference):
        row = evaluate_point(reference, _detuning_spec(sideband=Sideband.PRINTED), {"detuning_ratio": 1.0})
        assert row["error_code"] == "parametric_instability"
        assert not row["stable"]

    def test_stability_margin_observable(self, reference):
        row = evaluate_point(reference, _detuning_spec(Observable.STABILITY_MARGIN), {"detuning_ratio": 1.0})
        assert row["stability_margin"] > 0
        assert row["stable"]

    def test_both_intensity_columns(self, reference):
        result = run_sweep(reference, _detuning_spec(Observable.VAR_I_OUT))
        np.testing.assert_allclose(result.column("delta_i_out") ** 2, result.column("var_i_out"), rtol=1e-12)

    def test_quadrature_method(self, reference):
        fixed, point = {"eta": 0.0, "beta": 0.0}, {"detuning_ratio": 1.0}
        closed = evaluate_point(reference, _detuning_spec(Observable.VAR_P, fixed=fixed), point)
        integral = evaluate_point(reference, _detuning_spec(Observable.VAR_P, method=Method.QUADRATURE,
                                                            fixed=fixed), point)
        assert integral["var_p"] == pytest.approx(closed["var_p"], rel=0.1)

    def test_deterministic_csv(self, reference):
        spec = _detuning_spec(count=21)
        first, second = io.StringIO(), io.StringIO()
        write_csv(run_sweep(reference, spec), first)
        write_csv(run_sweep(reference, spec), second)
        assert first.getvalue() == second.getvalue()

    def test_csv_format(self, reference, tmp_path):
        spec = SweepSpec(Observable.VAR_X, (Axis.from_values(AxisName.BETA, (0.1, 1.5)),),
                         fixed={"detuning_ratio": 1.0, "eta": 0.0}, sideband=Sideband.COOLING)
        target = tmp_path / "sweep.csv"
        write_csv(run_sweep(reference, spec), target)
        data = target.read_bytes()
        assert b"\r\n" not in data
        lines = data.decode("utf-8").splitlines()
        assert lines[0] == "beta,var_x,stable,error_code"
        assert lines[2].startswith("1.5,nan,False,static_instability")

    def test_parallel_matches_serial(self, reference):
        spec = _detuning_spec(count=16)
        serial = run_sweep(reference, spec).frame
        parallel = run_sweep(reference, _detuning_spec(count=16, workers=2)).frame
        assert serial.equals(parallel)


class TestFigures:
    """Figure presets on the pinned reference configuration"""

    def test_fig1_momentum_squeezing(self, figures):
        frame = figures["fig1"]
        assert len(frame) == 191
        assert frame["var_p"].min() == pytest.approx(0.6362, abs=0.01)
        at_one = frame.loc[np.isclose(frame["detuning_ratio"], 1.0), "var_p"].item()
        assert at_one == pytest.approx(0.6362, abs=0.01)

    @pytest.mark.parametrize("beta, expected", [(0.1, 0.707), (0.39, 1.043)])
    def test_fig2_position(self, figures, beta, expected):
        frame = figures["fig2"]
        row = frame[np.isclose(frame["beta"], beta) & np.isclose(frame["detuning_ratio"], 1.0)]
        assert row["var_x"].item() == pytest.approx(expected, rel=0.05)

    def test_fig2_position_unsqueezed_at_large_beta(self, figures):
        frame = figures["fig2"]
        var_x = frame.loc[np.isclose(frame["beta"], 0.88), "var_x"]
        assert len(var_x) == 201
        assert var_x.min() > 1.0

    def test_fig3_argmin_near_sideband(self, figures):
        frame = figures["fig3"]
        for eta, group in frame.groupby("eta"):
            argmin = group.loc[group["var_x"].idxmin(), "detuning_ratio"]
            assert 0.9 <= argmin <= 1.0
            assert argmin == pytest.approx(1.0 - eta, abs=0.01)

    def test_fig3_nondecreasing_in_eta(self, figures):
        frame = figures["fig3"]
        at_one = frame[np.isclose(frame["detuning_ratio"], 1.0)].sort_values("eta")["var_x"].to_numpy()
        assert np.all(np.diff(at_one) >= 0)

    def test_fig3_unsqueezing_threshold(self, reference):
        spec = SweepSpec(Observable.VAR_X, (Axis(AxisName.ETA, 0.0, 0.1, 201),),
                         fixed={"detuning_ratio": 1.0, "beta": 0.1}, sideband=Sideband.COOLING)
        frame = run_sweep(reference, spec).frame
        crossing = _first_crossing(frame["eta"].to_numpy(), frame["var_x"].to_numpy())
        assert crossing == pytest.approx(0.042, abs=0.01)

    def test_fig4_intensity_squeezing_window(self, figures):
        frame = figures["fig4"]
        eta, delta = frame["eta"].to_numpy(), frame["delta_i_out"].to_numpy()
        assert delta[np.isclose(eta, 0.0)].item() == pytest.approx(0.0, abs=1e-12)
        positive = _first_crossing(eta[eta >= 0], delta[eta >= 0])
        negative = _first_crossing(-eta[eta <= 0][::-1], delta[eta <= 0][::-1])
        assert positive == pytest.approx(7.44e-5, rel=0.2)
        assert negative == pytest.approx(7.44e-5, rel=0.2)
        inside = np.abs(eta) <= 0.9 * min(positive, negative)
        assert np.all(delta[inside] < 1.0)

    def test_fig5_output_peak_moves_left(self, figures):
        frame = figures["fig5"]
        argmax = []
        for eta, group in frame.groupby("eta"):
            peak = group.loc[group["alpha_out_abs"].idxmax(), "detuning_ratio"]
            assert peak == pytest.approx(1.0 - eta, abs=1e-9)
            argmax.append(peak)
        assert all(b < a for a, b in zip(argmax[:-1], argmax[1:]))

    def test_fig5_decreasing_at_sideband(self, figures):
        frame = figures["fig5"]
        at_one = frame[np.isclose(frame["detuning_ratio"], 1.0)].sort_values("eta")["alpha_out_abs"]
        assert np.all(np.diff(at_one.to_numpy()) < 0)


class TestTable1:
    def test_listed_endpoints(self, reference):
        matched, mismatched = 0, []
        for entry in table1_ranges(reference):
            printed = TABLE1_PRINTED[entry.detuning_ratio]
            computed = (entry.eta_min, entry.eta_max, entry.beta_min, entry.beta_max)
            for label, got, want in zip(("eta_min", "eta_max", "beta_min", "beta_max"), computed, printed):
                if got == pytest.approx(want, rel=0.05):
                    matched += 1
                else:
                    mismatched.append((entry.detuning_ratio, label))
        assert matched == 7
        assert mismatched == [(0.0, "beta_max")]

    def test_inconsistent_beta_endpoint(self, reference):
        at_zero = table1_ranges(reference)[0]
        assert at_zero.detuning_ratio == 0.0
        assert at_zero.beta_max == pytest.approx(5.654e-3, rel=0.01)

    def test_solved_range(self, reference):
        solved = solved_range(reference, 1.0)
        assert solved.x_bar_min == pytest.approx(1.27957e-13, rel=0.02)
        assert solved.x_bar_max == pytest.approx(1.08996e-8, rel=0.02)
        assert solved.eta_max == pytest.approx(1.0, rel=0.05)

    def test_zero_displacement(self, reference, reference_derived):
        assert nonlinearities_at(reference, reference_derived, 0.0) == (0.0, 0.0)

    def test_sign_of_displacement_ignored(self, reference, reference_derived):
        assert nonlinearities_at(reference, reference_derived, -1e-9) == \
            nonlinearities_at(reference, reference_derived, 1e-9)
