"""Config-driven task dispatch: validated run configurations in, result
tables and self-judging checks out.

Every *-check task carries its tolerance with it and reports pass/fail
per check, so a run is reproducible and judgeable from its output alone.
Tables never hold complex cells; complex quantities are split into
paired _re/_im columns when the table is built.
"""

from __future__ import annotations

import math
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import __version__
from .opalg import (
    BasisSpec,
    OperatorMatrix,
    StateVector,
    build_xp,
    general_expm,
    interior_norm,
)
from .nhqcore import (
    eta_inner,
    probability_density,
    PositionGrid,
    quasi_hermiticity_residual,
    similarity_transform,
    state_from_hermitian,
    to_hermitian,
)
from .models import (
    CubicSpec,
    MetricCase,
    SwansonSpec,
    cubic_H,
    cubic_metric,
    cubic_XP_series,
    cubic_h_series,
    spectrum,
    swanson_H,
    swanson_h,
    swanson_metric,
    swanson_observables,
)
from .gaugeem import (
    PlaneWave,
    PolyFn,
    PulseSpec,
    Route,
    cubic_h2_monomials,
    function_of_X,
    gauge_covariance_residual,
    h_picture_eigensystem,
    minimal_substitution,
    phase_transform,
    transition_rate,
)

__all__ = [
    "RunConfig",
    "ResultTable",
    "CheckResult",
    "RunOutcome",
    "run_task",
    "fit_order",
    "table_to_csv",
    "outcome_to_json_dict",
]

TASKS = ("spectrum", "metric-check", "observables", "gauge-check", "series-scan", "rates")

EXPONENTIAL_CHECK_MARGIN_DIVISOR = 8  # margin = 3 * dim / 8 for expm-identity checks


class SwansonParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    m1: float = 1.0
    epsilon: float = 0.4
    omega: float = 1.0
    metric_case: Literal["case_i", "case_ii", "both"] = "case_i"


class CubicParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    g: float = 0.02


class BasisParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    N: int = 64
    margin: int = 8


class PulseParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    amplitude: float = 1.0
    center: float = 1.0
    width: float = 1.0e6


class TaskParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    levels: int = 20
    transitions: list[tuple[int, int]] = Field(default_factory=lambda: [(1, 0)])
    pulse: PulseParams = Field(default_factory=PulseParams)
    e_charge: float = 1.0
    route: Literal["HPicture", "hPicture"] = "hPicture"
    g_list: list[float] = Field(default_factory=lambda: [0.04, 0.02, 0.01])
    min_order: float = 2.7
    alpha: list[float] = Field(default_factory=lambda: [0.0, 0.0, 0.1])
    potential: list[float] = Field(default_factory=lambda: [0.0, 0.3])
    phase_quadratic: float = 0.1
    plane_wave_k: float = 0.5
    threshold: float = 1.0e-10

    @field_validator("g_list")
    @classmethod
    def _positive_gs(cls, v):
        if any(g <= 0 for g in v):
            raise ValueError("g_list entries must be positive")
        return v


class OutputParams(BaseModel):
    model_config = ConfigDict(extra="forbid")
    format: Literal["csv", "json"] = "json"
    path: Optional[str] = None


class RunConfig(BaseModel):
    """Validated description of one toolkit run."""

    model_config = ConfigDict(extra="forbid")

    model: Literal["swanson", "cubic"]
    task: Literal[
        "spectrum", "metric-check", "observables", "gauge-check", "series-scan", "rates"
    ]
    params: dict[str, Any] = Field(default_factory=dict)
    basis: BasisParams = Field(default_factory=BasisParams)
    task_params: TaskParams = Field(default_factory=TaskParams)
    output: OutputParams = Field(default_factory=OutputParams)

    @model_validator(mode="after")
    def _validate_params(self):
        if self.model == "swanson":
            parsed = SwansonParams(**self.params)
            SwansonSpec(
                m1=parsed.m1, epsilon=parsed.epsilon, omega=parsed.omega,
                metric_case=MetricCase.CASE_I_QX,
            )
        else:
            parsed = CubicParams(**self.params)
        if self.task in ("series-scan",) and self.model != "cubic":
            raise ValueError("series-scan is defined for the cubic model only")
        if self.task in ("metric-check", "series-scan") and self.model == "cubic":
            if len(self.task_params.g_list) < 3:
                raise ValueError("order fits need at least three couplings")
        return self

    def swanson_params(self) -> SwansonParams:
        return SwansonParams(**self.params)

    def cubic_params(self) -> CubicParams:
        return CubicParams(**self.params)


class ColumnSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    dtype: Literal["int", "float", "str"]


class ResultTable(BaseModel):
    model_config = ConfigDict(extra="forbid")
    columns: list[ColumnSpec]
    rows: list[list[Any]]
    metadata: dict[str, Any]

    @model_validator(mode="after")
    def _consistent_rows(self):
        ncol = len(self.columns)
        for r in self.rows:
            if len(r) != ncol:
                raise ValueError("row length does not match column count")
        return self

    def same_data(self, other: "ResultTable") -> bool:
        """Equality of columns and rows, ignoring metadata (timestamps)."""
        return self.columns == other.columns and self.rows == other.rows


class CheckResult(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    residual: float
    threshold: float
    passed: bool
    comparison: Literal["upper", "lower"] = "upper"


class RunOutcome(BaseModel):
    model_config = ConfigDict(extra="forbid")
    table: ResultTable
    checks: list[CheckResult]

    @property
    def exit_code(self) -> int:
        return 0 if all(c.passed for c in self.checks) else 3


def fit_order(g_values: list[float], residuals: list[float]) -> float:
    """Least-squares slope of log(residual) against log(g).

    Residuals that are exactly zero (or negative) mean the identity held
    exactly; the order is reported as the +inf sentinel.
    """
    if len(g_values) < 3 or len(g_values) != len(residuals):
        raise ValueError("fit_order needs >= 3 (g, residual) pairs")
    if any(g <= 0 for g in g_values):
        raise ValueError("couplings must be positive")
    if any(r <= 0 for r in residuals):
        return math.inf
    slope = np.polyfit(np.log(g_values), np.log(residuals), 1)[0]
    return float(slope)


def _metadata(config: RunConfig) -> dict[str, Any]:
    import datetime

    return {
        "config": config.model_dump(mode="json"),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _check(name, residual, threshold, comparison="upper") -> CheckResult:
    passed = residual < threshold if comparison == "upper" else residual >= threshold
    return CheckResult(
        name=name, residual=float(residual), threshold=float(threshold),
        passed=bool(passed), comparison=comparison,
    )


def _swanson_cases(p: SwansonParams) -> list[MetricCase]:
    if p.metric_case == "both":
        return [MetricCase.CASE_I_QX, MetricCase.CASE_II_QP]
    return [MetricCase.CASE_I_QX if p.metric_case == "case_i" else MetricCase.CASE_II_QP]


def _spec_for(p: SwansonParams, case: MetricCase) -> SwansonSpec:
    return SwansonSpec(m1=p.m1, epsilon=p.epsilon, omega=p.omega, metric_case=case)


def _task_spectrum(config: RunConfig, basis: BasisSpec) -> RunOutcome:
    levels = config.task_params.levels
    if config.model == "swanson":
        p = config.swanson_params()
        H = swanson_H(_spec_for(p, _swanson_cases(p)[0]), basis)
    else:
        H = cubic_H(CubicSpec(g=config.cubic_params().g), basis)
    report = spectrum(H, min(levels, basis.dim // 3))
    rows = [
        [n, float(w.real), float(w.imag)]
        for n, w in enumerate(report.eigenvalues[:levels])
    ]
    table = ResultTable(
        columns=[
            ColumnSpec(name="n", dtype="int"),
            ColumnSpec(name="energy_re", dtype="float"),
            ColumnSpec(name="energy_im", dtype="float"),
        ],
        rows=rows,
        metadata=_metadata(config),
    )
    return RunOutcome(table=table, checks=[])


def _task_metric_check(config: RunConfig, basis: BasisSpec) -> RunOutcome:
    tp = config.task_params
    checks: list[CheckResult] = []
    rows: list[list[Any]] = []
    if config.model == "swanson":
        p = config.swanson_params()
        for case in _swanson_cases(p):
            s = _spec_for(p, case)
            H = swanson_H(s, basis)
            m = swanson_metric(s, basis)
            res = quasi_hermiticity_residual(H, m, basis.margin)
            rows.append([case.value, float(p.epsilon), res, math.nan])
            checks.append(_check(f"quasi_hermiticity_{case.value}", res, tp.threshold))
    else:
        residuals = []
        for g in tp.g_list:
            c = CubicSpec(g=g)
            H = cubic_H(c, basis)
            m = cubic_metric(c, basis)
            res = quasi_hermiticity_residual(H, m, margin=9)
            residuals.append(res)
        order = fit_order(tp.g_list, residuals)
        for g, res in zip(tp.g_list, residuals):
            rows.append(["cubic", float(g), res, order])
        checks.append(_check("quasi_hermiticity_order", order, tp.min_order, "lower"))
    table = ResultTable(
        columns=[
            ColumnSpec(name="case", dtype="str"),
            ColumnSpec(name="parameter", dtype="float"),
            ColumnSpec(name="residual", dtype="float"),
            ColumnSpec(name="fitted_order", dtype="float"),
        ],
        rows=rows,
        metadata=_metadata(config),
    )
    return RunOutcome(table=table, checks=checks)


def _task_observables(config: RunConfig, basis: BasisSpec) -> RunOutcome:
    tp = config.task_params
    checks: list[CheckResult] = []
    rows: list[list[Any]] = []
    eye = OperatorMatrix.identity(basis)
    if config.model == "swanson":
        p = config.swanson_params()
        for case in _swanson_cases(p):
            s = _spec_for(p, case)
            pair = swanson_observables(s, basis)
            m = pair.metric
            x, pm = build_xp(basis, s.m1, s.omega)
            rx = interior_norm(
                similarity_transform(x, m, 0.5) - pair.X, basis.margin
            )
            rp = interior_norm(
                similarity_transform(pm, m, 0.5) - pair.P, basis.margin
            )
            rc = interior_norm(pair.X.commutator(pair.P) - 1j * eye, basis.margin)
            for name, res in (("X_similarity", rx), ("P_similarity", rp), ("commutator", rc)):
                rows.append([case.value, name, res, math.nan])
                checks.append(_check(f"{name}_{case.value}", res, tp.threshold))
    else:
        res_x, res_p = [], []
        for g in tp.g_list:
            c = CubicSpec(g=g)
            pair = cubic_XP_series(c, basis)
            m = pair.metric
            x, pm = build_xp(basis, 1.0, 1.0)
            res_x.append(interior_norm(pair.X - similarity_transform(x, m, 0.5), 9))
            res_p.append(interior_norm(pair.P - similarity_transform(pm, m, 0.5), 9))
        ox = fit_order(tp.g_list, res_x)
        op = fit_order(tp.g_list, res_p)
        for g, rx, rp in zip(tp.g_list, res_x, res_p):
            rows.append(["cubic", f"X_series@g={g}", rx, ox])
            rows.append(["cubic", f"P_series@g={g}", rp, op])
        checks.append(_check("X_series_order", ox, tp.min_order, "lower"))
        checks.append(_check("P_series_order", op, tp.min_order, "lower"))
    table = ResultTable(
        columns=[
            ColumnSpec(name="case", dtype="str"),
            ColumnSpec(name="identity", dtype="str"),
            ColumnSpec(name="residual", dtype="float"),
            ColumnSpec(name="fitted_order", dtype="float"),
        ],
        rows=rows,
        metadata=_metadata(config),
    )
    return RunOutcome(table=table, checks=checks)


def _task_gauge_check(config: RunConfig, basis: BasisSpec) -> RunOutcome:
    """Gauge covariance, probability/density invariance, plane-wave similarity.

    The pointwise density check is only emitted for the position-type
    metric (case i): with a momentum-type generator the mapped state runs
    through the expanding metric factor and the direct density evaluation
    is float-noise-limited near 1e-7, below the check's resolving power.
    """
    if config.model != "swanson":
        raise ValueError("gauge-check is defined for the swanson model")
    tp = config.task_params
    p = config.swanson_params()
    case = _swanson_cases(p)[0]
    s = _spec_for(p, case)
    pair = swanson_observables(s, basis)
    m = pair.metric
    x, _ = build_xp(basis, s.m1, s.omega)
    alpha = PolyFn(tuple(tp.alpha))
    potential = PolyFn(tuple(tp.potential))

    res_cov = gauge_covariance_residual(alpha, potential, tp.e_charge, pair, m, basis.margin)

    # probability and density drift under the quadratic phase
    quad = PolyFn((0.0, 0.0, tp.phase_quadratic))
    _, phis = h_picture_eigensystem(swanson_H(s, basis), m)
    psi0 = state_from_hermitian(phis[0], m)
    n0 = np.sqrt(abs(eta_inner(psi0, psi0, m)))
    psi0 = StateVector(psi0.amplitudes / n0, basis)
    psi1 = phase_transform(psi0, quad, tp.e_charge, pair)
    drift = abs(eta_inner(psi1, psi1, m) - eta_inner(psi0, psi0, m))

    checks = [
        _check("gauge_covariance", res_cov, 1e-8),
        _check("probability_drift", drift, 1e-10),
    ]
    if case is MetricCase.CASE_I_QX:
        grid = PositionGrid.uniform(-8.0, 8.0, 0.01)
        dens0 = probability_density(psi0, m, grid, s.m1, s.omega)
        dens1 = probability_density(psi1, m, grid, s.m1, s.omega)
        res_dens = float(np.abs(dens1 - dens0).max())
        checks.append(_check("density_drift", res_dens, 1e-8))

    # plane-wave function of X against its direct exponential
    k = tp.plane_wave_k
    margin_exp = 3 * basis.dim // EXPONENTIAL_CHECK_MARGIN_DIVISOR
    fX = function_of_X(PlaneWave(k), m, x)
    direct = general_expm(1j * k * pair.X)
    res_fx = interior_norm(fX - direct, margin_exp)
    checks.append(_check("plane_wave_similarity", res_fx, 1e-8))
    rows = [[c.name, c.residual, c.threshold, str(c.passed)] for c in checks]
    table = ResultTable(
        columns=[
            ColumnSpec(name="check", dtype="str"),
            ColumnSpec(name="residual", dtype="float"),
            ColumnSpec(name="threshold", dtype="float"),
            ColumnSpec(name="passed", dtype="str"),
        ],
        rows=rows,
        metadata=_metadata(config),
    )
    return RunOutcome(table=table, checks=checks)


def _task_series_scan(config: RunConfig, basis: BasisSpec) -> RunOutcome:
    tp = config.task_params
    x, pm = build_xp(basis, 1.0, 1.0)
    families: dict[str, list[float]] = {
        "quasi_hermiticity": [],
        "X_series": [],
        "P_series": [],
        "h_series": [],
        "rewriting_identity": [],
    }
    for g in tp.g_list:
        c = CubicSpec(g=g)
        H = cubic_H(c, basis)
        m = cubic_metric(c, basis)
        pair = cubic_XP_series(c, basis)
        families["quasi_hermiticity"].append(quasi_hermiticity_residual(H, m, margin=9))
        families["X_series"].append(
            interior_norm(pair.X - similarity_transform(x, m, 0.5), 9)
        )
        families["P_series"].append(
            interior_norm(pair.P - similarity_transform(pm, m, 0.5), 9)
        )
        h2 = cubic_h_series(c, basis)
        families["h_series"].append(interior_norm(h2 - to_hermitian(H, m), 12))
        h2_sub = minimal_substitution(cubic_h2_monomials(g), pair, 0.0)
        families["rewriting_identity"].append(interior_norm(H - h2_sub, 15))

    rows: list[list[Any]] = []
    checks: list[CheckResult] = []
    for fam, residuals in families.items():
        order = fit_order(tp.g_list, residuals)
        for g, res in zip(tp.g_list, residuals):
            rows.append([fam, float(g), res, order])
        checks.append(_check(f"{fam}_order", order, tp.min_order, "lower"))
    table = ResultTable(
        columns=[
            ColumnSpec(name="family", dtype="str"),
            ColumnSpec(name="g", dtype="float"),
            ColumnSpec(name="residual", dtype="float"),
            ColumnSpec(name="fitted_order", dtype="float"),
        ],
        rows=rows,
        metadata=_metadata(config),
    )
    return RunOutcome(table=table, checks=checks)


def _task_rates(config: RunConfig, basis: BasisSpec) -> RunOutcome:
    tp = config.task_params
    pulse = PulseSpec(
        amplitude=tp.pulse.amplitude, center=tp.pulse.center, width=tp.pulse.width
    )
    route = Route.H_PICTURE if tp.route == "HPicture" else Route.h_PICTURE
    rows: list[list[Any]] = []
    if config.model == "swanson":
        p = config.swanson_params()
        for case in _swanson_cases(p):
            s = _spec_for(p, case)
            H = swanson_H(s, basis)
            pair = swanson_observables(s, basis)
            _, mu = swanson_h(s, basis)
            for (i, j) in tp.transitions:
                r = transition_rate(H, i, j, pair, pair.metric, mu, tp.e_charge, pulse, route)
                rows.append([
                    "swanson", case.value, i, j, r.omega_ij,
                    r.element.real, r.element.imag, r.effective_mass, r.rate,
                    r.route.value,
                ])
    else:
        c = CubicSpec(g=config.cubic_params().g)
        H = cubic_H(c, basis)
        pair = cubic_XP_series(c, basis)
        for (i, j) in tp.transitions:
            r = transition_rate(H, i, j, pair, pair.metric, 1.0, tp.e_charge, pulse, route)
            rows.append([
                "cubic", "perturbative", i, j, r.omega_ij,
                r.element.real, r.element.imag, r.effective_mass, r.rate,
                r.route.value,
            ])
    table = ResultTable(
        columns=[
            ColumnSpec(name="model", dtype="str"),
            ColumnSpec(name="metric_case", dtype="str"),
            ColumnSpec(name="i", dtype="int"),
            ColumnSpec(name="j", dtype="int"),
            ColumnSpec(name="omega_ij", dtype="float"),
            ColumnSpec(name="element_re", dtype="float"),
            ColumnSpec(name="element_im", dtype="float"),
            ColumnSpec(name="mu", dtype="float"),
            ColumnSpec(name="rate", dtype="float"),
            ColumnSpec(name="route", dtype="str"),
        ],
        rows=rows,
        metadata=_metadata(config),
    )
    return RunOutcome(table=table, checks=[])


_TASK_FNS = {
    "spectrum": _task_spectrum,
    "metric-check": _task_metric_check,
    "observables": _task_observables,
    "gauge-check": _task_gauge_check,
    "series-scan": _task_series_scan,
    "rates": _task_rates,
}


def run_task(config: RunConfig) -> RunOutcome:
    """Dispatch a validated config to its task implementation."""
    basis = BasisSpec(dim=config.basis.N, margin=config.basis.margin)
    return _TASK_FNS[config.task](config, basis)


def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def table_to_csv(table: ResultTable) -> str:
    """CSV serialization: 17 significant digits, '.' decimal separator."""
    lines = [",".join(c.name for c in table.columns)]
    for row in table.rows:
        cells = []
        for c, v in zip(table.columns, row):
            if c.dtype == "float":
                cells.append(_fmt_float(float(v)))
            elif c.dtype == "int":
                cells.append(str(int(v)))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def outcome_to_json_dict(config: RunConfig, outcome: RunOutcome) -> dict[str, Any]:
    """Top-level JSON document: {config, results, checks}."""
    return {
        "config": config.model_dump(mode="json"),
        "results": {
            "columns": [c.model_dump() for c in outcome.table.columns],
            "rows": outcome.table.rows,
            "metadata": outcome.table.metadata,
        },
        "checks": [
            {
                "name": c.name,
                "residual": c.residual,
                "threshold": c.threshold,
                "pass": c.passed,
            }
            for c in outcome.checks
        ],
    }
