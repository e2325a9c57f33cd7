"""
Parameter Sweep Engine
Grid evaluation of any scalar observable over detuning, nonlinearities, power and temperature
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import partial
from pathlib import Path
from typing import IO, Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from errors import BudgetExceededError, ConfigError, PhysicsDomainError
from lindyn import (EffectiveParams, drift_matrix, effective_params, is_dynamically_stable,
                    override_nonlinearities, susceptibility)
from mechvar import MechanicalVariances, SpectrumMode, variances_by_quadrature, variances_closed_form
from optout import AlphaInConvention, output_field, output_variances
from params import DerivedScalars, PhysicalParams, derive_scalars
from steadystate import SteadyState, operating_point, solve_cubic

logger = logging.getLogger(__name__)

DEFAULT_MAX_POINTS = 250_000
# quadrature cutoff in units of max(Ω_m, κ)
QUAD_OMEGA_FACTOR = 20.0
QUAD_REL_TOL = 1e-6


class Observable(Enum):
    """Scalar computed at every grid point"""
    VAR_X = "var_x"
    VAR_P = "var_p"
    VAR_I_OUT = "var_i_out"
    VAR_PHI_OUT = "var_phi_out"
    DELTA_I_OUT = "delta_i_out"
    ALPHA_OUT_ABS = "alpha_out_abs"
    OMEGA_EFF = "omega_eff"
    GAMMA_EFF = "gamma_eff"
    STABILITY_MARGIN = "stability_margin"
    HEISENBERG_PRODUCT = "heisenberg_product"
    N_EFF = "n_eff"


class AxisName(Enum):
    DETUNING_RATIO = "detuning_ratio"
    BETA = "beta"
    ETA = "eta"
    P_IN = "p_in"
    TEMPERATURE = "temperature"


class Spacing(Enum):
    LINEAR = "linear"
    LOG = "log"
    LIST = "list"


class Sideband(Enum):
    """Sign convention of the mechanical sideband"""
    PRINTED = "printed"
    COOLING = "cooling"  # evaluate the variance chain at (−Δ, −η, −Δ̃)


class Method(Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"


NONLINEARITY_AXES = frozenset({AxisName.BETA.value, AxisName.ETA.value})


@dataclass(frozen=True)
class Axis:
    """One sweep dimension: an evenly spaced range or an explicit list"""
    name: AxisName
    min: float = 0.0
    max: float = 0.0
    count: int = 0
    spacing: Spacing = Spacing.LINEAR
    points: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.spacing is Spacing.LIST:
            if not self.points:
                raise ConfigError(f"Axis {self.name.value} lists no values", field=self.name.value)
            object.__setattr__(self, "points", tuple(float(v) for v in self.points))
            object.__setattr__(self, "count", len(self.points))
            object.__setattr__(self, "min", min(self.points))
            object.__setattr__(self, "max", max(self.points))
        else:
            if self.count < 2:
                raise ConfigError(f"Axis {self.name.value} needs count >= 2, got {self.count}",
                                  field=self.name.value)
            if not self.min < self.max:
                raise ConfigError(f"Axis {self.name.value} needs min < max, got "
                                  f"[{self.min!r}, {self.max!r}]", field=self.name.value)
            if self.spacing is Spacing.LOG and self.min <= 0:
                raise ConfigError(f"Log axis {self.name.value} needs min > 0", field=self.name.value)
        if self.name in (AxisName.BETA, AxisName.P_IN, AxisName.TEMPERATURE) and self.min < 0:
            raise ConfigError(f"Axis {self.name.value} must be non-negative", field=self.name.value)

    @classmethod
    def from_values(cls, name: Union[AxisName, str], values: Sequence[float]) -> "Axis":
        return cls(name=AxisName(name), spacing=Spacing.LIST, points=tuple(values))

    def values(self) -> np.ndarray:
        if self.spacing is Spacing.LIST:
            return np.array(self.points, dtype=float)
        if self.spacing is Spacing.LOG:
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """Observable, one or two axes and the evaluation options shared by every point"""
    observable: Observable
    axes: Tuple[Axis, ...]
    fixed: Mapping[str, float] = field(default_factory=dict)
    mode: SpectrumMode = SpectrumMode.EXACT
    self_consistent: bool = False
    sideband: Sideband = Sideband.PRINTED
    alpha_in: AlphaInConvention = AlphaInConvention.ZERO
    method: Method = Method.CLOSED_FORM
    reference_detuning_ratio: Optional[float] = None
    workers: int = 1
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "fixed", {k: float(v) for k, v in dict(self.fixed).items()})
        if not 1 <= len(self.axes) <= 2:
            raise ConfigError(f"A sweep takes one or two axes, got {len(self.axes)}", field="axes")
        names = [axis.name.value for axis in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError(f"Duplicate sweep axis: {names}", field="axes")
        known = {a.value for a in AxisName}
        for key in self.fixed:
            if key not in known:
                raise ConfigError(f"Unknown fixed value: {key}", field=key)
            if key in names:
                raise ConfigError(f"{key} is both fixed and swept", field=key)
        if self.self_consistent and NONLINEARITY_AXES & (set(names) | set(self.fixed)):
            raise ConfigError("Self-consistent sweeps derive beta and eta from the steady state; "
                              "they cannot be swept or fixed", field="self_consistent")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}", field="workers")
        if self.max_points < 1:
            raise ConfigError(f"max_points must be >= 1, got {self.max_points}", field="max_points")

    @property
    def axis_names(self) -> List[str]:
        return [axis.name.value for axis in self.axes]

    @property
    def total_points(self) -> int:
        return math.prod(axis.count for axis in self.axes)

    @property
    def value_columns(self) -> List[str]:
        if self.observable in (Observable.VAR_I_OUT, Observable.DELTA_I_OUT):
            return [Observable.VAR_I_OUT.value, Observable.DELTA_I_OUT.value]
        return [self.observable.value]

    @property
    def columns(self) -> List[str]:
        return self.axis_names + self.value_columns + ["stable", "error_code"]

    def to_dict(self) -> Dict[str, Any]:
        """Echo of the sweep settings for JSON reports"""
        return {
            "observable": self.observable.value,
            "axes": [{"name": a.name.value, "min": a.min, "max": a.max, "count": a.count,
                      "spacing": a.spacing.value, "points": list(a.points)} for a in self.axes],
            "fixed": dict(self.fixed),
            "mode": self.mode.value,
            "self_consistent": self.self_consistent,
            "sideband": self.sideband.value,
            "alpha_in": self.alpha_in.value,
            "method": self.method.value,
            "reference_detuning_ratio": self.reference_detuning_ratio,
            "workers": self.workers,
            "max_points": self.max_points,
        }


@dataclass(frozen=True)
class OperatingPoint:
    """Everything one grid point needs downstream of the config"""
    params: PhysicalParams
    derived: DerivedScalars
    steady: SteadyState
    model: EffectiveParams   # after the sideband mapping; drives variances and stability
    field: EffectiveParams   # as resolved; drives the output field


def mirror_sideband(ep: EffectiveParams) -> EffectiveParams:
    return replace(ep, detuning=-ep.detuning, eta=-ep.eta, delta_tilde=-ep.delta_tilde)


def resolve_operating_point(p: PhysicalParams, values: Mapping[str, float],
                            self_consistent: bool = False, sideband: Sideband = Sideband.PRINTED,
                            reference_detuning_ratio: Optional[float] = None) -> OperatingPoint:
    """Steady state and effective parameters at one combination of axis values

    In override mode G comes from the operating point at the reference detuning and
    Δ, β, η are then placed by hand; self-consistent mode re-solves the cubic at Δ.
    """
    unknown = set(values) - {a.value for a in AxisName}
    if unknown:
        raise ConfigError(f"Unknown operating-point key: {sorted(unknown)[0]}", field=sorted(unknown)[0])
    changes = {k: values[k] for k in (AxisName.P_IN.value, AxisName.TEMPERATURE.value) if k in values}
    params = p.with_overrides(**changes) if changes else p
    d = derive_scalars(params)
    ratio = values.get(AxisName.DETUNING_RATIO.value, params.detuning / params.omega_m)
    detuning = ratio * params.omega_m

    if self_consistent:
        if NONLINEARITY_AXES & set(values):
            raise ConfigError("beta and eta cannot be set in self-consistent mode",
                              field="self_consistent")
        ss = operating_point(params, d, detuning)
        ep = effective_params(params, d, ss, detuning)
    else:
        if reference_detuning_ratio is None:
            reference = params.detuning
        else:
            reference = reference_detuning_ratio * params.omega_m
        ss = operating_point(params, d, reference)
        base = effective_params(params, d, ss, reference)
        ep = override_nonlinearities(base, params.omega_m, detuning=detuning,
                                     beta=values.get(AxisName.BETA.value),
                                     eta=values.get(AxisName.ETA.value))

    model = mirror_sideband(ep) if sideband is Sideband.COOLING else ep
    return OperatingPoint(params=params, derived=d, steady=ss, model=model, field=ep)


def _variances(op: OperatingPoint, spec: SweepSpec) -> MechanicalVariances:
    if spec.method is Method.QUADRATURE:
        omega_max = QUAD_OMEGA_FACTOR * max(op.params.omega_m, op.params.kappa)
        return variances_by_quadrature(op.params, op.model, omega_max, QUAD_REL_TOL, spec.mode)
    return variances_closed_form(op.params, op.model)


def _observe(op: OperatingPoint, spec: SweepSpec, margin: float) -> Dict[str, float]:
    observable = spec.observable
    if observable is Observable.ALPHA_OUT_ABS:
        result = output_field(op.params, op.derived, op.field, op.field.detuning, spec.alpha_in)
        return {observable.value: abs(result.alpha_out)}
    if observable is Observable.STABILITY_MARGIN:
        return {observable.value: margin}
    if observable in (Observable.OMEGA_EFF, Observable.GAMMA_EFF):
        sus = susceptibility(op.params, op.model, op.params.omega_m)
        if observable is Observable.OMEGA_EFF:
            return {observable.value: math.sqrt(sus.omega_eff_sq)}
        return {observable.value: sus.gamma_eff}

    mv = _variances(op, spec)
    if observable is Observable.VAR_X:
        return {observable.value: mv.var_x}
    if observable is Observable.VAR_P:
        return {observable.value: mv.var_p}
    if observable is Observable.HEISENBERG_PRODUCT:
        return {observable.value: mv.heisenberg_product}
    if observable is Observable.N_EFF:
        return {observable.value: mv.n_eff}
    out = output_variances(op.params, op.model, mv)
    if observable is Observable.VAR_PHI_OUT:
        return {observable.value: out.var_phi_out}
    return {Observable.VAR_I_OUT.value: out.var_i_out, Observable.DELTA_I_OUT.value: out.delta_i_out}


def evaluate_point(p: PhysicalParams, spec: SweepSpec, values: Mapping[str, float]) -> Dict[str, Any]:
    """One sweep row; physics-domain failures become NaN with their error code"""
    row: Dict[str, Any] = {name: float(values[name]) for name in spec.axis_names}
    merged = dict(spec.fixed)
    merged.update(row)
    try:
        op = resolve_operating_point(p, merged, spec.self_consistent, spec.sideband,
                                     spec.reference_detuning_ratio)
        report = is_dynamically_stable(drift_matrix(op.params, op.model))
        row.update(_observe(op, spec, report.margin))
        row["stable"] = report.stable
        row["error_code"] = ""
    except PhysicsDomainError as e:
        logger.debug(f"Rejected point {row}: {e}")
        row.update({column: math.nan for column in spec.value_columns})
        row["stable"] = False
        row["error_code"] = e.code
    return row


@dataclass
class SweepResult:
    """Rows of a sweep in row-major axis order"""
    spec: SweepSpec
    frame: pd.DataFrame

    @property
    def rows(self) -> List[Dict[str, Any]]:
        return self.frame.to_dict(orient="records")

    @property
    def failed(self) -> int:
        return int((self.frame["error_code"] != "").sum())

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy()


def grid_points(spec: SweepSpec) -> List[Dict[str, float]]:
    grids = [axis.values() for axis in spec.axes]
    return [{name: float(v) for name, v in zip(spec.axis_names, combo)}
            for combo in itertools.product(*grids)]


def run_sweep(p: PhysicalParams, spec: SweepSpec, progress: bool = False) -> SweepResult:
    """Evaluate every grid point; physics errors become error_code rows instead of aborting"""
    total = spec.total_points
    if total > spec.max_points:
        raise BudgetExceededError(f"Sweep has {total} points, budget is {spec.max_points}",
                                  points=total, max_points=spec.max_points)
    points = grid_points(spec)
    logger.info(f"Sweeping {spec.observable.value} over {total} point(s) "
                f"with {spec.workers} worker(s)")

    evaluate = partial(evaluate_point, p, spec)
    bar = dict(total=total, desc=f"sweep {spec.observable.value}", disable=not progress, leave=False)
    if spec.workers > 1:
        chunksize = max(1, total // (spec.workers * 8))
        with ProcessPoolExecutor(max_workers=spec.workers) as executor:
            # map keeps submission order regardless of completion order
            rows = list(tqdm(executor.map(evaluate, points, chunksize=chunksize), **bar))
    else:
        rows = [evaluate(values) for values in tqdm(points, **bar)]

    frame = pd.DataFrame(rows, columns=spec.columns)
    result = SweepResult(spec=spec, frame=frame)
    if result.failed:
        logger.info(f"{result.failed} of {total} point(s) failed")
    return result


def write_csv(result: SweepResult, target: Union[str, Path, IO[str]]) -> None:
    """17 significant digits, LF line endings, NaN spelled `nan`"""
    result.frame.to_csv(target, index=False, float_format="%.17g", lineterminator="\n",
                        na_rep="nan", encoding="utf-8")


# Displacement endpoints x̄ (m) per detuning ratio Δ/Ω_m
TABLE1_DISPLACEMENTS: Dict[float, Tuple[float, float]] = {
    0.0: (2.77e-11, 7.42e-10),
    1.0: (1.27e-13, 1.09e-8),
}


@dataclass(frozen=True)
class NonlinearityRange:
    detuning_ratio: float
    x_bar_min: float
    x_bar_max: float
    eta_min: float
    eta_max: float
    beta_min: float
    beta_max: float


def nonlinearities_at(p: PhysicalParams, d: DerivedScalars, x_bar: float) -> Tuple[float, float]:
    """(η, β) implied by a mean displacement in metres"""
    x_m = abs(x_bar) / d.x_zpf
    eta = d.g_m * x_m / p.omega_m
    beta = 3.0 * p.beta_prime * d.x_zpf ** 2 * x_m ** 2 / p.omega_m ** 2
    return eta, beta


def _range(p: PhysicalParams, d: DerivedScalars, ratio: float, lo: float, hi: float) -> NonlinearityRange:
    eta_lo, beta_lo = nonlinearities_at(p, d, lo)
    eta_hi, beta_hi = nonlinearities_at(p, d, hi)
    return NonlinearityRange(
        detuning_ratio=ratio, x_bar_min=lo, x_bar_max=hi,
        eta_min=min(eta_lo, eta_hi), eta_max=max(eta_lo, eta_hi),
        beta_min=min(beta_lo, beta_hi), beta_max=max(beta_lo, beta_hi),
    )


def table1_ranges(p: PhysicalParams,
                  displacements: Mapping[float, Tuple[float, float]] = TABLE1_DISPLACEMENTS
                  ) -> List[NonlinearityRange]:
    d = derive_scalars(p)
    return [_range(p, d, ratio, lo, hi) for ratio, (lo, hi) in sorted(displacements.items())]


def solved_range(p: PhysicalParams, detuning_ratio: float) -> NonlinearityRange:
    """Range spanned by |Re x̄| over all three roots of the cubic at Δ/Ω_m"""
    d = derive_scalars(p)
    roots = solve_cubic(p, d, detuning_ratio * p.omega_m)
    magnitudes = sorted({abs(float(np.real(r.x_bar))) for r in roots})
    return _range(p, d, detuning_ratio, magnitudes[0], magnitudes[-1])


FIGURE_SPECS: Dict[str, SweepSpec] = {
    "fig1": SweepSpec(
        observable=Observable.VAR_P,
        axes=(Axis(AxisName.DETUNING_RATIO, 0.1, 2.0, 191),),
        fixed={"eta": 0.0},
        sideband=Sideband.COOLING,
    ),
    "fig2": SweepSpec(
        observable=Observable.VAR_X,
        axes=(Axis.from_values(AxisName.BETA, (0.1, 0.39, 0.88)),
              Axis(AxisName.DETUNING_RATIO, 0.5, 1.5, 201)),
        fixed={"eta": 0.0},
        sideband=Sideband.COOLING,
    ),
    "fig3": SweepSpec(
        observable=Observable.VAR_X,
        axes=(Axis.from_values(AxisName.ETA, (0.0, 0.02, 0.04, 0.06, 0.08)),
              Axis(AxisName.DETUNING_RATIO, 0.8, 1.2, 401)),
        fixed={"beta": 0.1},
        sideband=Sideband.COOLING,
    ),
    "fig4": SweepSpec(
        observable=Observable.DELTA_I_OUT,
        axes=(Axis(AxisName.ETA, -2e-4, 2e-4, 401),),
        fixed={"detuning_ratio": 0.0, "p_in": 3e-5, "beta": 5.72e-4},
        sideband=Sideband.COOLING,
        reference_detuning_ratio=0.0,
    ),
    "fig5": SweepSpec(
        observable=Observable.ALPHA_OUT_ABS,
        axes=(Axis.from_values(AxisName.ETA, (0.0, 0.25, 0.5, 0.75, 1.0)),
              Axis(AxisName.DETUNING_RATIO, 0.0, 2.0, 401)),
        sideband=Sideband.COOLING,
    ),
}


def figure_spec(name: str, **changes: Any) -> SweepSpec:
    """Preset for one figure, optionally with options such as workers replaced"""
    try:
        spec = FIGURE_SPECS[name]
    except KeyError:
        raise ConfigError(f"Unknown figure: {name}; choose from {sorted(FIGURE_SPECS)}",
                          field="figure") from None
    return replace(spec, **changes) if changes else spec
