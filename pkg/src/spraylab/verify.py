"""Identity suite, theorem fixtures, and a finite-difference oracle.

Every registered check recomputes one relation by two independent routes
and reports the raw residual together with the magnitude of the compared
terms, so thresholds are relative with a small absolute floor for
quantities that vanish identically.  Tolerances come in two tiers: jet
identities hold to rounding, while anything that feeds on a quadrature
volume form inherits the quadrature error instead.

A suite run never aborts on a failing point; domain and budget errors at
a single point are recorded as infinite residuals and the run continues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import catalog
from .catalog import MetricSpec
from .errors import ConfigError, SprayLabError
from .geometry import (DEFAULT_DEGREE, FinslerMetric, MetricFrame, MetricSpray,
                       PerturbedSpray, Spray, SprayStack, TangentPoint,
                       stack_for, tensor_values)
from .jets import Jet
from .measures import MeasureStack, VolumeForm
from .projective import (ProjectiveStack, einstein_wo_check, volume_change)

__all__ = [
    "Tolerances",
    "CheckResult",
    "CheckAggregate",
    "SuiteReport",
    "IdentityCheck",
    "REGISTRY",
    "identity_suite",
    "theorem_check",
    "theorem_names",
    "fd_oracle",
    "as_volume",
]


@dataclass(frozen=True)
class Tolerances:
    """Relative thresholds per tier plus the shared absolute floor."""

    jet: float = 1e-7
    quad: float = 1e-4
    floor: float = 1e-9

    def pick(self, quadrature: bool) -> float:
        return self.quad if quadrature else self.jet


@dataclass(frozen=True)
class CheckResult:
    check: str
    point: TangentPoint
    residual: float
    scale: float
    tolerance: float
    floor: float
    passed: bool


@dataclass(frozen=True)
class CheckAggregate:
    """One check over many points, reduced to its worst offender."""

    check: str
    points: int
    max_residual: float
    scale: float
    tolerance: float
    floor: float
    worst_point: TangentPoint | None
    passed: bool


@dataclass(frozen=True)
class SuiteReport:
    metric: str
    volume: str
    seed: int | None
    degree: int
    tolerances: Tolerances
    checks: tuple[CheckAggregate, ...]
    results: tuple[CheckResult, ...]
    passed: bool

    def failures(self) -> list[CheckAggregate]:
        return [agg for agg in self.checks if not agg.passed]


def _maxabs(*arrays) -> float:
    out = 0.0
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size:
            out = max(out, float(np.abs(a).max()))
    return out


def _result(check: str, point, residual, scale, tolerance, floor) -> CheckResult:
    residual = float(residual)
    scale = float(scale)
    passed = residual <= tolerance * scale + floor
    return CheckResult(check, point, residual, scale, tolerance, floor, passed)


def _ratio(r: CheckResult) -> float:
    return r.residual / (r.tolerance * r.scale + r.floor)


def _aggregate(check: str, results: list[CheckResult], tolerance, floor) -> CheckAggregate:
    if not results:
        return CheckAggregate(check, 0, 0.0, 0.0, tolerance, floor, None, True)
    worst = max(results, key=_ratio)
    passed = all(r.passed for r in results)
    return CheckAggregate(
        check, len(results), worst.residual, worst.scale, tolerance, floor,
        worst.point, passed,
    )


def _uses_quadrature(volume: VolumeForm | None) -> bool:
    if volume is None:
        return False
    if volume.kind == "busemann-hausdorff":
        return True
    if volume.kind == "scaled":
        return _uses_quadrature(volume.base or VolumeForm.coordinate())
    return False


def as_volume(spec, nodes: int = 64) -> VolumeForm:
    """Coerce a volume description (None, name, explicit:<expr>) to a form."""
    if spec is None:
        return VolumeForm.coordinate()
    if isinstance(spec, VolumeForm):
        return spec
    if isinstance(spec, str):
        if spec == "coordinate":
            return VolumeForm.coordinate()
        if spec in ("busemann-hausdorff", "bh"):
            return VolumeForm.busemann_hausdorff(nodes)
        if spec.startswith("explicit:"):
            return VolumeForm.explicit(spec.split(":", 1)[1])
        raise ConfigError(
            f"unknown volume {spec!r}; use coordinate, busemann-hausdorff, "
            "or explicit:<sigma expression>"
        )
    raise ConfigError("volume must be a VolumeForm, a recognized name, or None")


def _split(obj) -> tuple[Spray, FinslerMetric | None]:
    if isinstance(obj, FinslerMetric):
        return obj.spray(), obj
    if isinstance(obj, Spray):
        return obj, obj.metric
    raise ConfigError(f"expected a metric or spray, got {type(obj).__name__}")


def _oneform(entries) -> np.ndarray:
    entries = list(entries)
    out = np.empty(len(entries), dtype=object)
    for k, jet in enumerate(entries):
        out[k] = jet
    return out


# -- shared per-point state ----------------------------------------------------


class CheckContext:
    """Lazy jets shared by all checks at one (spray, volume, point)."""

    def __init__(self, spray: Spray, metric, volume: VolumeForm,
                 point: TangentPoint, degree: int):
        self.spray = spray
        self.metric = metric
        self.volume = volume
        self.point = point
        self.degree = degree
        self.n = point.dim

    @cached_property
    def y(self) -> np.ndarray:
        return self.point.y_array()

    @cached_property
    def frame(self) -> MetricFrame:
        return MetricFrame(self.metric, self.point, self.degree)

    @cached_property
    def stack(self) -> SprayStack:
        if self.metric is not None and isinstance(self.spray, MetricSpray):
            return self.frame.stack
        return stack_for(self.spray, self.point, self.degree)

    @cached_property
    def measure(self) -> MeasureStack:
        return MeasureStack(self.stack, self.volume, self.metric)

    @cached_property
    def proj(self) -> ProjectiveStack:
        return ProjectiveStack(self.measure)

    @cached_property
    def rik_obj(self) -> np.ndarray:
        n = self.n
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for k in range(n):
                out[i, k] = self.stack.Rik[i][k]
        return out

    @cached_property
    def r_vform(self) -> np.ndarray:
        """One-form of vertical derivatives of the Ricci scalar."""
        n = self.n
        return _oneform(self.stack.Rscalar.deriv(n + k) for k in range(n))

    @cached_property
    def r_hcov(self) -> np.ndarray:
        """Second horizontal covariant derivative matrix of the Ricci scalar."""
        st = self.stack
        form = _oneform(st.hderiv(st.Rscalar, k) for k in range(self.n))
        return st.hcov_values(form, contra=0)

    @cached_property
    def s_vderivs(self) -> np.ndarray:
        n = self.n
        return np.array([self.measure.S.deriv(n + k).value() for k in range(n)])

    @cached_property
    def weyl_jets(self) -> np.ndarray:
        """Weyl tensor as base-ring jets (trace-adjusted curvature plus chi)."""
        n = self.n
        st = self.stack
        chi = self.measure.chi_jets
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for k in range(n):
                out[i, k] = st.T[i, k] + (3.0 / (n + 1.0)) * st.y_jets[i] * chi[k]
        return out

    @cached_property
    def base_pieces(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """R_{|k}, R_{.k|m} y^m, chi_{k|m} y^m along the base spray."""
        st = self.stack
        first = st.hcov_scalar_values(st.Rscalar)
        second = st.hcov_values(self.r_vform, contra=0) @ self.y
        third = st.hcov_values(_oneform(self.measure.chi_jets), contra=0) @ self.y
        return first, second, third

    @cached_property
    def rik_div(self) -> np.ndarray:
        """R^m_{k|m} along the base spray."""
        return np.einsum("mkm->k", self.stack.hcov_values(self.rik_obj, contra=1))


# -- registered identities -----------------------------------------------------


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    fn: Callable[[CheckContext], tuple[float, float]]
    uses_measure: bool = False
    needs_metric: bool = False
    min_dim: int = 2
    only_dim: int | None = None
    riemannian_only: bool = False

    def applies(self, ctx: CheckContext) -> bool:
        if self.needs_metric and ctx.metric is None:
            return False
        if ctx.n < self.min_dim:
            return False
        if self.only_dim is not None and ctx.n != self.only_dim:
            return False
        if self.riemannian_only and not isinstance(
            ctx.metric, (catalog.Euclidean, catalog.Riemannian)
        ):
            return False
        return True


def _euler_metric(ctx):
    n = ctx.n
    F = ctx.frame.F
    lhs = sum(ctx.point.y[m] * F.deriv(n + m).value() for m in range(n))
    return abs(lhs - F.value()), abs(F.value())


def _euler_fundamental(ctx):
    lhs = ctx.frame.g_values @ ctx.y
    return _maxabs(lhs - ctx.frame.ylow), _maxabs(lhs, ctx.frame.ylow)


def _euler_spray(ctx):
    st = ctx.stack
    G = np.array([g.value() for g in st.G])
    lhs = st.N_values @ ctx.y
    return _maxabs(lhs - 2.0 * G), _maxabs(lhs, 2.0 * G)


def _euler_nonlinear(ctx):
    st = ctx.stack
    lhs = np.einsum("ijk,k->ij", st.Gamma_values, ctx.y)
    return _maxabs(lhs - st.N_values), _maxabs(lhs, st.N_values)


def _berwald_y_kill(ctx):
    st = ctx.stack
    con = np.einsum("ijkl,l->ijk", st.B_values, ctx.y)
    return _maxabs(con), _maxabs(st.B_values) * _maxabs(ctx.y) * ctx.n


def _rik_y_kill(ctx):
    st = ctx.stack
    return _maxabs(st.Rik_values @ ctx.y), _maxabs(st.Rik_values) * _maxabs(ctx.y) * ctx.n


def _r3_antisymmetric(ctx):
    r3 = tensor_values(ctx.stack.R3)
    return _maxabs(r3 + r3.transpose(0, 2, 1)), _maxabs(r3)


def _r3_contract(ctx):
    st = ctx.stack
    lhs = np.einsum("ikl,l->ik", tensor_values(st.R3), ctx.y)
    return _maxabs(lhs - st.Rik_values), _maxabs(lhs, st.Rik_values)


def _r4_contract(ctx):
    st = ctx.stack
    r3 = tensor_values(st.R3)
    lhs = np.einsum("jikl,j->ikl", tensor_values(st.R4), ctx.y)
    return _maxabs(lhs - r3), _maxabs(lhs, r3)


def _t_traceless(ctx):
    tv = ctx.stack.T_values
    return abs(float(np.trace(tv))), _maxabs(tv) * ctx.n


def _t_y_kill(ctx):
    tv = ctx.stack.T_values
    return _maxabs(tv @ ctx.y), _maxabs(tv) * _maxabs(ctx.y) * ctx.n


def _riemannian_berwald(ctx):
    st = ctx.stack
    return _maxabs(st.B_values), 1.0 + _maxabs(st.Gamma_values)


def _y_parallel(ctx):
    st = ctx.stack
    cov = st.hcov_values(_oneform(st.y_jets), contra=1)
    return _maxabs(cov), _maxabs(st.N_values) + _maxabs(ctx.y)


def _ricci_exchange_1(ctx):
    st, n = ctx.stack, ctx.n
    f = st.Rscalar
    lhs = np.array(
        [[st.hderiv(f, m).deriv(n + k).value() for k in range(n)] for m in range(n)]
    )
    rhs = st.hcov_values(ctx.r_vform, contra=0)
    return _maxabs(lhs - rhs.T), _maxabs(lhs, rhs)


def _ricci_exchange_2(ctx):
    st, n = ctx.stack, ctx.n
    cov = ctx.r_hcov
    fv = np.array([st.Rscalar.deriv(n + l).value() for l in range(n)])
    rhs = np.einsum("l,lkm->km", fv, tensor_values(st.R3))
    return _maxabs(cov - cov.T - rhs), _maxabs(cov, rhs)


def _ricci_exchange_3(ctx):
    st, n = ctx.stack, ctx.n
    f = st.Rscalar
    lhs = ctx.r_hcov @ ctx.y
    f0 = sum((st.hderiv(f, m) * st.y_jets[m] for m in range(n)), st.ring.zero())
    mid = np.array([st.hderiv_value(f0, k) for k in range(n)])
    fv = np.array([f.deriv(n + l).value() for l in range(n)])
    rhs = fv @ st.Rik_values
    return _maxabs(lhs - mid - rhs), _maxabs(lhs, mid, rhs)


def _bianchi_contracted(ctx):
    st = ctx.stack
    rikcov = st.hcov_values(ctx.rik_obj, contra=1)
    r3cov = st.hcov_values(st.R3, contra=1)
    term = np.einsum("ipkl,l->ikp", r3cov, ctx.y)
    lhs = rikcov - rikcov.transpose(0, 2, 1) + term
    return _maxabs(lhs), _maxabs(rikcov, term)


def _s_homogeneous(ctx):
    n = ctx.n
    S = ctx.measure.S
    lhs = float(ctx.y @ ctx.s_vderivs)
    return abs(lhs - S.value()), max(abs(lhs), abs(S.value()))


def _tau_homogeneous(ctx):
    n = ctx.n
    t = ctx.measure.tau
    lhs = sum(ctx.point.y[m] * t.deriv(n + m).value() for m in range(n))
    return abs(lhs - 2.0 * t.value()), max(abs(lhs), 2.0 * abs(t.value()))


def _chi_y_kill(ctx):
    chi = ctx.measure.chi_values("fromR")
    return abs(float(chi @ ctx.y)), _maxabs(chi) * _maxabs(ctx.y) * ctx.n


def _chi_routes(ctx):
    vals = [ctx.measure.chi_values(route) for route in MeasureStack.CHI_ROUTES]
    res = max(
        _maxabs(vals[i] - vals[j])
        for i in range(len(vals))
        for j in range(i + 1, len(vals))
    )
    return res, _maxabs(*vals)


def _s_volume_change(ctx):
    n = ctx.n
    change = volume_change("0.1*x1*x2", ctx.measure)
    tilde = VolumeForm.scaled(ctx.volume, "0.1*x1*x2", sign=-1)
    s_tilde = MeasureStack(ctx.stack, tilde, ctx.metric).S.value()
    lhs = ctx.measure.S.value()
    rhs = s_tilde - (n + 1.0) * change.f0
    scale = max(abs(lhs), abs(s_tilde), (n + 1.0) * abs(change.f0))
    return abs(lhs - rhs), scale


def _hat_ricci_scalar(ctx):
    lhs = ctx.proj.Rhat.value()
    rhs = ctx.stack.Rscalar.value() + ctx.measure.tau.value()
    return abs(lhs - rhs), max(abs(lhs), abs(ctx.stack.Rscalar.value()),
                               abs(ctx.measure.tau.value()))


def _hat_ricci_tensor(ctx):
    n = ctx.n
    tau = ctx.measure.tau
    taud = np.array([tau.deriv(n + k).value() for k in range(n)])
    chi = ctx.measure.chi_values("fromR")
    rhs = (
        ctx.stack.Rik_values
        + tau.value() * np.eye(n)
        + np.outer(ctx.y, -0.5 * taud + (3.0 / (n + 1.0)) * chi)
    )
    lhs = ctx.proj.hat.Rik_values
    return _maxabs(lhs - rhs), _maxabs(lhs, ctx.stack.Rik_values) + abs(tau.value())


def _chi_compact_form(ctx):
    n = ctx.n
    st = ctx.stack
    S0 = ctx.measure.S0
    sk = np.array([st.hderiv_value(ctx.measure.S, k) for k in range(n)])
    lhs = np.array([0.5 * (S0.deriv(n + k).value() - 2.0 * sk[k]) for k in range(n)])
    rhs = ctx.measure.chi_values("fromR")
    return _maxabs(lhs - rhs), _maxabs(lhs, rhs, sk)


def _chi_curvature_trace(ctx):
    n = ctx.n
    st = ctx.stack
    lhs = np.array(
        [sum(st.Rik[m][i].deriv(n + m).value() for m in range(n)) for i in range(n)]
    )
    chi = ctx.measure.chi_values("fromR")
    rv = np.array([st.Rscalar.deriv(n + i).value() for i in range(n)])
    rhs = -3.0 * chi - 0.5 * (n - 1.0) * rv
    return _maxabs(lhs - rhs), _maxabs(lhs, rhs)


def _hat_s_zero(ctx):
    s_hat = ctx.proj.hat_measure.S.value()
    scale = max(abs(ctx.measure.S.value()), abs(float(np.trace(ctx.stack.N_values))))
    return abs(s_hat), scale


def _hat_chi_zero(ctx):
    chi_hat = ctx.proj.hat_measure.chi_values("fromR")
    return _maxabs(chi_hat), _maxabs(ctx.proj.hat.Rik_values)


def _hat_nonlinear(ctx):
    n = ctx.n
    S = ctx.measure.S
    rhs = ctx.stack.N_values - (
        S.value() * np.eye(n) + np.outer(ctx.y, ctx.s_vderivs)
    ) / (n + 1.0)
    lhs = ctx.proj.hat.N_values
    return _maxabs(lhs - rhs), _maxabs(lhs, ctx.stack.N_values)


def _hat_berwald(ctx):
    n = ctx.n
    S = ctx.measure.S
    sd = ctx.s_vderivs
    sdd = np.array(
        [[S.deriv(n + k).deriv(n + j).value() for j in range(n)] for k in range(n)]
    )
    corr = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                corr[i, j, k] = sd[k] * (i == j) + sd[j] * (i == k) + sdd[k, j] * ctx.y[i]
    rhs = ctx.stack.Gamma_values - corr / (n + 1.0)
    lhs = ctx.proj.hat.Gamma_values
    return _maxabs(lhs - rhs), _maxabs(lhs, ctx.stack.Gamma_values)


def _transfer_residual(ctx, f: Jet) -> tuple[float, float]:
    # f_{||k} = f_{|k} + Y(f) S_{.k}/(n+1) + S f_{.k}/(n+1)
    n = ctx.n
    st = ctx.stack
    S = ctx.measure.S
    Yf = st.euler_field(f).value()
    lhs = np.array([ctx.proj.hat.hderiv(f, k).value() for k in range(n)])
    rhs = np.array(
        [
            st.hderiv_value(f, k)
            + (Yf * ctx.s_vderivs[k] + S.value() * f.deriv(n + k).value()) / (n + 1.0)
            for k in range(n)
        ]
    )
    return _maxabs(lhs - rhs), _maxabs(lhs, rhs)


def _hat_scalar_transfer(ctx):
    return _transfer_residual(ctx, ctx.stack.Ric)


def _hat_frame_transfer(ctx):
    st = ctx.stack
    trace_n = sum((st.N[m][m] for m in range(1, ctx.n)), st.N[0][0])
    return _transfer_residual(ctx, trace_n)


def _weyl_routes(ctx):
    a = ctx.proj.weyl_values("viaHat")
    b = ctx.proj.weyl_values("viaChi")
    return _maxabs(a - b), _maxabs(a, b)


def _weyl_traceless(ctx):
    wv = ctx.proj.weyl_values("viaHat")
    return abs(float(np.trace(wv))), _maxabs(wv) * ctx.n


def _weyl_y_kill(ctx):
    wv = ctx.proj.weyl_values("viaHat")
    return _maxabs(wv @ ctx.y), _maxabs(wv) * _maxabs(ctx.y) * ctx.n


def _weyl_2d(ctx):
    wv = ctx.proj.weyl_values("viaHat")
    return _maxabs(wv), _maxabs(ctx.stack.Rik_values) + abs(ctx.stack.Rscalar.value())


def _wo_routes(ctx):
    routes = ["definition", "viaBase", "divR"]
    if ctx.n >= 3:
        routes.append("divW")
    vals = [ctx.proj.wo_values(route) for route in routes]
    res = max(
        _maxabs(vals[i] - vals[j])
        for i in range(len(vals))
        for j in range(i + 1, len(vals))
    )
    return res, _maxabs(*vals)


def _wo_rewrite(ctx):
    # W^o_k = (3 Rhat_{||k} - (Rhat_{||m} y^m)_{.k}) / 2
    n = ctx.n
    hat = ctx.proj.hat
    hk = [hat.hderiv(ctx.proj.Rhat, k) for k in range(n)]
    h0 = sum((hk[m] * hat.y_jets[m] for m in range(1, n)), hk[0] * hat.y_jets[0])
    alt = 0.5 * (
        3.0 * np.array([jet.value() for jet in hk])
        - np.array([h0.deriv(n + k).value() for k in range(n)])
    )
    wo = ctx.proj.wo_values("definition")
    return _maxabs(alt - wo), _maxabs(alt, wo)


def _wo_y_kill(ctx):
    wo = ctx.proj.wo_values("definition")
    return abs(float(wo @ ctx.y)), _maxabs(wo) * _maxabs(ctx.y) * ctx.n


def _ricci_divergence(ctx):
    n = ctx.n
    first, second, third = ctx.base_pieces
    lhs = first - 0.5 * second - (third + ctx.rik_div) / (n - 1.0)
    return _maxabs(lhs), _maxabs(first, 0.5 * second, third / (n - 1.0),
                                 ctx.rik_div / (n - 1.0))


def _weyl_divergence(ctx):
    n = ctx.n
    lhs = np.einsum("mkm->k", ctx.stack.hcov_values(ctx.weyl_jets, contra=1))
    first, second, third = ctx.base_pieces
    rhs = (n - 2.0) * (first - 0.5 * second - third / (n + 1.0))
    return _maxabs(lhs - rhs), _maxabs(lhs, rhs)


def _perturbation_forms(n: int):
    def mk(m):
        return lambda xs: 0.01 * (m + 1) + 0.05 * xs[(m + 1) % n]

    return [mk(m) for m in range(n)]


def _projective_invariance(ctx):
    pert = PerturbedSpray(ctx.spray, _perturbation_forms(ctx.n))
    pstack = stack_for(pert, ctx.point, ctx.degree)
    pproj = ProjectiveStack(MeasureStack(pstack, ctx.volume, ctx.metric))
    w0 = ctx.proj.weyl_values("viaHat")
    w1 = pproj.weyl_values("viaHat")
    wo0 = ctx.proj.wo_values("definition")
    wo1 = pproj.wo_values("definition")
    res = max(_maxabs(w1 - w0), _maxabs(wo1 - wo0))
    return res, _maxabs(w0, w1, wo0, wo1)


def _flatness_equivalence(ctx):
    # W^o_k = W^m_k f_m  iff  W^m_{k|m} = (n-2) W^m_k Xi_{.m}
    # with Xi_{.m} = S_{.m}/(n+1) + f_m; the gaps are proportional by n-2.
    n = ctx.n
    change = volume_change("0.1*x1*x2", ctx.measure)
    wv = ctx.proj.weyl_values("viaHat")
    wo = ctx.proj.wo_values("definition")
    b_gap = wo - wv.T @ change.fm
    xi = ctx.s_vderivs / (n + 1.0) + change.fm
    c_lhs = np.einsum("mkm->k", ctx.stack.hcov_values(ctx.weyl_jets, contra=1))
    c_rhs = (n - 2.0) * (wv.T @ xi)
    c_gap = c_lhs - c_rhs
    res = _maxabs(c_gap - (n - 2.0) * b_gap)
    return res, _maxabs(c_lhs, c_rhs, (n - 2.0) * b_gap)


REGISTRY: tuple[IdentityCheck, ...] = (
    IdentityCheck("euler-metric", _euler_metric, needs_metric=True),
    IdentityCheck("euler-fundamental", _euler_fundamental, needs_metric=True),
    IdentityCheck("euler-spray", _euler_spray),
    IdentityCheck("euler-nonlinear", _euler_nonlinear),
    IdentityCheck("berwald-y-kill", _berwald_y_kill),
    IdentityCheck("rik-y-kill", _rik_y_kill),
    IdentityCheck("r3-antisymmetric", _r3_antisymmetric),
    IdentityCheck("r3-contract", _r3_contract),
    IdentityCheck("r4-contract", _r4_contract),
    IdentityCheck("t-traceless", _t_traceless),
    IdentityCheck("t-y-kill", _t_y_kill),
    IdentityCheck("riemannian-berwald", _riemannian_berwald,
                  needs_metric=True, riemannian_only=True),
    IdentityCheck("y-parallel", _y_parallel),
    IdentityCheck("ricci-exchange-1", _ricci_exchange_1),
    IdentityCheck("ricci-exchange-2", _ricci_exchange_2),
    IdentityCheck("ricci-exchange-3", _ricci_exchange_3),
    IdentityCheck("bianchi-contracted", _bianchi_contracted),
    IdentityCheck("s-homogeneous", _s_homogeneous, uses_measure=True),
    IdentityCheck("tau-homogeneous", _tau_homogeneous, uses_measure=True),
    IdentityCheck("chi-y-kill", _chi_y_kill),
    IdentityCheck("chi-routes", _chi_routes, uses_measure=True),
    IdentityCheck("s-volume-change", _s_volume_change, uses_measure=True),
    IdentityCheck("hat-ricci-scalar", _hat_ricci_scalar, uses_measure=True),
    IdentityCheck("hat-ricci-tensor", _hat_ricci_tensor, uses_measure=True),
    IdentityCheck("chi-compact-form", _chi_compact_form, uses_measure=True),
    IdentityCheck("chi-curvature-trace", _chi_curvature_trace),
    IdentityCheck("hat-s-zero", _hat_s_zero, uses_measure=True),
    IdentityCheck("hat-chi-zero", _hat_chi_zero, uses_measure=True),
    IdentityCheck("hat-nonlinear", _hat_nonlinear, uses_measure=True),
    IdentityCheck("hat-berwald", _hat_berwald, uses_measure=True),
    IdentityCheck("hat-scalar-transfer", _hat_scalar_transfer, uses_measure=True),
    IdentityCheck("hat-frame-transfer", _hat_frame_transfer, uses_measure=True),
    IdentityCheck("weyl-routes", _weyl_routes, uses_measure=True),
    IdentityCheck("weyl-traceless", _weyl_traceless, uses_measure=True),
    IdentityCheck("weyl-y-kill", _weyl_y_kill, uses_measure=True),
    IdentityCheck("weyl-2d", _weyl_2d, uses_measure=True, only_dim=2),
    IdentityCheck("wo-routes", _wo_routes, uses_measure=True),
    IdentityCheck("wo-rewrite", _wo_rewrite, uses_measure=True),
    IdentityCheck("wo-y-kill", _wo_y_kill, uses_measure=True),
    IdentityCheck("ricci-divergence", _ricci_divergence),
    IdentityCheck("weyl-divergence", _weyl_divergence, min_dim=3),
    IdentityCheck("projective-invariance", _projective_invariance, uses_measure=True),
    IdentityCheck("flatness-equivalence", _flatness_equivalence,
                  uses_measure=True, min_dim=3),
)


def check_names() -> list[str]:
    return [check.name for check in REGISTRY]


# -- suite runner ---------------------------------------------------------------


def _resolve_points(obj, points, seed, box):
    if isinstance(points, int):
        return catalog.sample(obj, count=points, seed=seed, box=box), seed
    pts = [p if isinstance(p, TangentPoint) else TangentPoint(*p) for p in points]
    return pts, None


def identity_suite(spec, volume=None, points=20, tolerances=None, *,
                   seed=0, degree=DEFAULT_DEGREE, box=None,
                   checks=None) -> SuiteReport:
    """Run every applicable registered identity at sampled points.

    ``spec`` may be a family name, a MetricSpec, a metric, or a spray;
    ``points`` is a sample count or an explicit list of tangent points.
    A failing point never aborts the run: domain or budget errors are
    recorded as infinite residuals on the affected checks.  The default
    jet degree is the smallest that feeds every registered identity.
    """
    obj = catalog.build(spec) if isinstance(spec, (str, MetricSpec)) else spec
    spray, metric = _split(obj)
    volume = as_volume(volume)
    tolerances = tolerances if tolerances is not None else Tolerances()
    pts, seed = _resolve_points(obj, points, seed, box)
    selected = list(REGISTRY if checks is None else
                    [c for c in REGISTRY if c.name in set(checks)])
    if checks is not None and len(selected) < len(set(checks)):
        known = {c.name for c in REGISTRY}
        missing = sorted(set(checks) - known)
        raise ConfigError(f"unknown checks: {', '.join(missing)}")

    quad = _uses_quadrature(volume)
    per_check: dict[str, list[CheckResult]] = {c.name: [] for c in selected}
    for point in pts:
        ctx = CheckContext(spray, metric, volume, point, degree)
        for check in selected:
            if not check.applies(ctx):
                continue
            tol = tolerances.pick(quad and check.uses_measure)
            try:
                residual, scale = check.fn(ctx)
            except ConfigError:
                raise
            except (SprayLabError, FloatingPointError):
                residual, scale = math.inf, 1.0
            per_check[check.name].append(
                _result(check.name, point, residual, scale, tol, tolerances.floor)
            )

    aggregates = []
    results: list[CheckResult] = []
    for check in selected:
        tol = tolerances.pick(quad and check.uses_measure)
        aggregates.append(_aggregate(check.name, per_check[check.name],
                                     tol, tolerances.floor))
        results.extend(per_check[check.name])
    return SuiteReport(
        metric=getattr(obj, "name", str(obj)),
        volume=volume.describe(),
        seed=seed,
        degree=degree,
        tolerances=tolerances,
        checks=tuple(aggregates),
        results=tuple(results),
        passed=all(agg.passed for agg in aggregates),
    )


# -- theorem fixtures -------------------------------------------------------------


def _wo_with_scale(proj: ProjectiveStack) -> tuple[np.ndarray, float]:
    """W^o by definition plus the magnitude of its two constituent terms."""
    hat = proj.hat
    n = proj.n
    first = hat.hcov_scalar_values(proj.Rhat)
    rv = _oneform(hat.vderiv(proj.Rhat, k) for k in range(n))
    second = hat.hcov_values(rv, contra=0) @ proj.point.y_array()
    return first - 0.5 * second, _maxabs(first, 0.5 * second)


def _theorem_volumes(override, nodes):
    if override is not None:
        return [as_volume(override, nodes)]
    return [
        VolumeForm.coordinate(),
        VolumeForm.explicit("exp(0.1*x2)"),
        VolumeForm.busemann_hausdorff(nodes),
    ]


def _thm12(opts, tol):
    """Scalar-curvature spray: W^o vanishes for every volume form."""
    metric = catalog.build(MetricSpec("funk", 3))
    pts = catalog.sample(metric, count=opts.get("points") or 20, seed=opts["seed"])
    results = []
    for vol in _theorem_volumes(opts.get("volume"), opts["nodes"]):
        t = tol.pick(_uses_quadrature(vol))
        label = f"thm12:funk:{vol.kind}"
        for point in pts:
            ms = MeasureStack(stack_for(metric.spray(), point, opts["degree"]),
                              vol, metric)
            wo, scale = _wo_with_scale(ProjectiveStack(ms))
            results.append(_result(label, point, _maxabs(wo), scale, t, tol.floor))
    return results, "coordinate, explicit, busemann-hausdorff"


def _thm15(opts, tol):
    """Einstein with constant S-curvature: W^o vanishes under the BH form."""
    count = opts.get("points") or 6
    nodes = opts["nodes"]
    results = []
    vol = VolumeForm.busemann_hausdorff(nodes)
    t = tol.pick(True)

    funk = catalog.build(MetricSpec("funk", 3))
    for point in catalog.sample(funk, count=count, seed=opts["seed"]):
        frame = MetricFrame(funk, point, opts["degree"])
        ms = MeasureStack(frame.stack, vol, funk)
        s_val = ms.S.value()
        f_val = frame.F.value()
        results.append(_result("thm15:funk:constant-s", point,
                               abs(s_val - 2.0 * f_val),
                               max(abs(s_val), 2.0 * f_val), t, tol.floor))
        wo, scale = _wo_with_scale(ProjectiveStack(ms))
        results.append(_result("thm15:funk:wo-zero", point,
                               _maxabs(wo), scale, t, tol.floor))

    ball = catalog.build(MetricSpec("hyperbolic-ball", 3))
    for point in catalog.sample(ball, count=count, seed=opts["seed"] + 1):
        st = stack_for(ball.spray(), point, opts["degree"])
        ms = MeasureStack(st, vol, ball)
        scale_s = max(abs(float(np.trace(st.N_values))), 1.0)
        results.append(_result("thm15:hyperbolic:constant-s", point,
                               abs(ms.S.value()), scale_s, t, tol.floor))
        wo, scale = _wo_with_scale(ProjectiveStack(ms))
        results.append(_result("thm15:hyperbolic:wo-zero", point,
                               _maxabs(wo), scale, t, tol.floor))
    return results, vol.describe()


def _cor14(opts, tol):
    """In dimension two W^o does not depend on the volume form."""
    metric = catalog.build(MetricSpec("conformal-flat-2d", 2))
    pts = catalog.sample(metric, count=opts.get("points") or 12, seed=opts["seed"])
    volumes = _theorem_volumes(opts.get("volume"), opts["nodes"])
    if len(volumes) < 2:
        volumes.append(VolumeForm.coordinate()
                       if volumes[0].kind != "coordinate"
                       else VolumeForm.explicit("exp(0.1*x2)"))
    quad = any(_uses_quadrature(v) for v in volumes)
    t = tol.pick(quad)
    results = []
    for point in pts:
        st = stack_for(metric.spray(), point, opts["degree"])
        wos = []
        for vol in volumes:
            ms = MeasureStack(st, vol, metric)
            wos.append(ProjectiveStack(ms).wo_values("definition"))
        res = max(
            _maxabs(wos[i] - wos[j])
            for i in range(len(wos))
            for j in range(i + 1, len(wos))
        )
        results.append(_result("cor14:volume-independence", point, res,
                               _maxabs(*wos), t, tol.floor))
    return results, ", ".join(v.describe() for v in volumes)


def _cor33(opts, tol):
    """Constant flag curvature surfaces have W^o = 0."""
    count = opts.get("points") or 8
    results = []
    volumes = [VolumeForm.coordinate(), VolumeForm.busemann_hausdorff(opts["nodes"])]
    for family, offset in (("round-sphere", 0), ("hyperbolic-ball", 1)):
        metric = catalog.build(MetricSpec(family, 2))
        pts = catalog.sample(metric, count=count, seed=opts["seed"] + offset)
        for point in pts:
            st = stack_for(metric.spray(), point, opts["degree"])
            for vol in volumes:
                t = tol.pick(_uses_quadrature(vol))
                ms = MeasureStack(st, vol, metric)
                wo, scale = _wo_with_scale(ProjectiveStack(ms))
                scale = max(scale, abs(st.Rscalar.value()))
                results.append(_result(f"cor33:{family}:{vol.kind}", point,
                                       _maxabs(wo), scale, t, tol.floor))
    return results, "coordinate, busemann-hausdorff"


def _prop32(opts, tol):
    """Einstein surface under BH: W^o_k = F^3 (theta/F)_{.k}."""
    count = opts.get("points") or 8
    t = tol.pick(True)
    results = []
    for family in ("conformal-flat-2d", "round-sphere"):
        metric = catalog.build(MetricSpec(family, 2))
        pts = catalog.sample(metric, count=count, seed=opts["seed"])
        for point in pts:
            check = einstein_wo_check(metric, point, degree=opts["degree"],
                                      nodes=opts["nodes"])
            scale = _maxabs(check.wo, check.predicted)
            results.append(_result(f"prop32:{family}", point, check.residual,
                                   scale, t, tol.floor))
    return results, "busemann-hausdorff"


def _thm43(opts, tol):
    """The two volume-flatness conditions fail or hold together."""
    metric = catalog.build(MetricSpec("randers", 3))
    pts = catalog.sample(metric, count=opts.get("points") or 6, seed=opts["seed"])
    volume = as_volume(opts.get("volume"), opts["nodes"])
    quad = _uses_quadrature(volume)
    t = tol.pick(quad)
    n = metric.dim
    results = []
    for f in ("0.1*x1*x2", "0.05*x3", None):
        label = f"thm43:f={f or '0'}"
        for point in pts:
            ctx = CheckContext(metric.spray(), metric, volume, point, opts["degree"])
            change = volume_change(f, ctx.measure)
            wv = ctx.proj.weyl_values("viaHat")
            wo = ctx.proj.wo_values("definition")
            b_gap = wo - wv.T @ change.fm
            xi = ctx.s_vderivs / (n + 1.0) + change.fm
            c_lhs = np.einsum("mkm->k",
                              ctx.stack.hcov_values(ctx.weyl_jets, contra=1))
            c_gap = c_lhs - (n - 2.0) * (wv.T @ xi)
            res = _maxabs(c_gap - (n - 2.0) * b_gap)
            scale = _maxabs(c_lhs, (n - 2.0) * b_gap, (n - 2.0) * (wv.T @ xi))
            results.append(_result(label, point, res, scale, t, tol.floor))
    return results, volume.describe()


def _ex17(opts, tol):
    """Fourth-root metric with flat factors: everything vanishes."""
    metric = catalog.build(MetricSpec("fourth-root", 4, {"c": 0.5}))
    nodes = opts.get("nodes") or 16
    vol = VolumeForm.busemann_hausdorff(min(nodes, 16))
    t = tol.pick(True)
    pts = catalog.sample(metric, count=opts.get("points") or 5, seed=opts["seed"])
    results = []
    for point in pts:
        st = stack_for(metric.spray(), point, opts["degree"])
        results.append(_result("ex17:berwald-flat", point, _maxabs(st.B_values),
                               1.0 + _maxabs(st.Gamma_values), t, tol.floor))
        results.append(_result("ex17:ricci-flat", point, _maxabs(st.Rik_values),
                               1.0 + _maxabs(st.N_values), t, tol.floor))
        ms = MeasureStack(st, vol, metric)
        results.append(_result("ex17:s-zero", point, abs(ms.S.value()),
                               1.0, t, tol.floor))
        wo, scale = _wo_with_scale(ProjectiveStack(ms))
        results.append(_result("ex17:wo-zero", point, _maxabs(wo),
                               max(scale, 1.0), t, tol.floor))
    return results, vol.describe()


def _ex45(opts, tol):
    """Square metric with the quadratic conformal factor.

    The metric is Ricci-flat and of scalar curvature, hence W^o vanishes
    for every volume form, and its S-curvature is not isotropic.  The
    stronger gate - a catalog volume form making the projective spray
    Ricci-flat - fails at every tried volume, and that failure is
    reported as a failing aggregate rather than suppressed.
    """
    metric = catalog.build(MetricSpec("square-metric", 3))
    pts = catalog.sample(metric, count=opts.get("points") or 4, seed=opts["seed"])
    nodes = min(opts["nodes"], 32)
    results = []
    gate_vols = [
        VolumeForm.coordinate(),
        VolumeForm.explicit("exp(0.1*x1)"),
        VolumeForm.busemann_hausdorff(nodes),
    ]
    for point in pts:
        frame = MetricFrame(metric, point, opts["degree"])
        st = frame.stack
        fsq = frame.fsq.value()
        ms = MeasureStack(st, VolumeForm.coordinate(), metric)
        wv = ProjectiveStack(ms).weyl_values("viaChi")
        results.append(_result("ex45:scalar-curvature", point, _maxabs(wv),
                               fsq, tol.pick(False), tol.floor))
        for vol in (gate_vols[0], gate_vols[2]):
            t = tol.pick(_uses_quadrature(vol))
            msv = MeasureStack(st, vol, metric)
            wo = ProjectiveStack(msv).wo_values("definition")
            results.append(_result(f"ex45:wo-zero:{vol.kind}", point, _maxabs(wo),
                                   fsq ** 1.5, t, tol.floor))
        rhat_best = math.inf
        scale_best = 1.0
        for vol in gate_vols:
            msv = MeasureStack(st, vol, metric)
            rhat = abs(ProjectiveStack(msv).Rhat.value())
            if rhat < rhat_best:
                rhat_best = rhat
                scale_best = max(abs(st.Rscalar.value()), abs(msv.tau.value()))
        results.append(_result("ex45:projective-ricci-flat-gate", point,
                               rhat_best, scale_best, tol.pick(True), tol.floor))

    x = pts[0].x
    dirs = [(1.0, 0.4, -0.3), (-0.5, 1.0, 0.8), (0.2, -0.9, 1.0)]
    ratios = []
    for y in dirs:
        frame = MetricFrame(metric, TangentPoint(x, y), 4)
        ms = MeasureStack(frame.stack, VolumeForm.busemann_hausdorff(nodes), metric)
        ratios.append(ms.S.value() / frame.F.value())
    spread = max(ratios) - min(ratios)
    results.append(_result("ex45:anisotropic-s", pts[0],
                           max(0.0, 0.01 - spread), 1.0,
                           tol.pick(True), tol.floor))
    return results, "coordinate, explicit, busemann-hausdorff"


_THEOREMS: dict[str, tuple[Callable, str]] = {
    "thm12": (_thm12, "scalar-curvature spray has W^o = 0 for every volume"),
    "thm15": (_thm15, "Einstein + constant S under BH volume has W^o = 0"),
    "cor14": (_cor14, "surfaces: W^o does not depend on the volume form"),
    "cor33": (_cor33, "constant flag curvature surfaces have W^o = 0"),
    "prop32": (_prop32, "Einstein surface: W^o matches F^3 (theta/F)_{.k}"),
    "thm43": (_thm43, "the two volume-flatness conditions are equivalent"),
    "ex17": (_ex17, "fourth-root metric with flat factors is fully flat"),
    "ex45": (_ex45, "square metric is BWeyl-flat but fails the Ricci gate"),
}


def theorem_names() -> list[str]:
    return list(_THEOREMS)


def theorem_summary(name: str) -> str:
    if name not in _THEOREMS:
        raise ConfigError(
            f"unknown theorem {name!r}; available: {', '.join(_THEOREMS)}"
        )
    return _THEOREMS[name][1]


def theorem_check(name: str, *, points=None, seed=0, degree=DEFAULT_DEGREE,
                  nodes=64, volume=None, tolerances=None) -> SuiteReport:
    """Run one named conclusion on its designated catalog fixture(s)."""
    if name not in _THEOREMS:
        raise ConfigError(
            f"unknown theorem {name!r}; available: {', '.join(_THEOREMS)}"
        )
    tol = tolerances if tolerances is not None else Tolerances()
    opts = {"points": points, "seed": seed, "degree": degree,
            "nodes": nodes, "volume": volume}
    fn, _ = _THEOREMS[name]
    results, volume_desc = fn(opts, tol)

    order: list[str] = []
    grouped: dict[str, list[CheckResult]] = {}
    for r in results:
        if r.check not in grouped:
            grouped[r.check] = []
            order.append(r.check)
        grouped[r.check].append(r)
    aggregates = tuple(
        _aggregate(label, grouped[label], grouped[label][0].tolerance, tol.floor)
        for label in order
    )
    return SuiteReport(
        metric=name,
        volume=volume_desc,
        seed=seed,
        degree=degree,
        tolerances=tol,
        checks=aggregates,
        results=tuple(results),
        passed=all(agg.passed for agg in aggregates),
    )


# -- finite-difference oracle ----------------------------------------------------

# fourth-order central stencils on offsets -2h .. 2h
_C1 = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))
_C2 = ((-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0))


def fd_oracle(field, point: TangentPoint, alpha, step: float = 1e-2) -> float:
    """Central finite difference of ``field`` at ``point``.

    ``field`` maps a tangent point to a float; ``alpha`` is a multi-index
    of length 2n over the slots (x^1..x^n, y^1..y^n) with total order at
    most two.  Fourth-order stencils keep the truncation error near
    step^4 so jet values can be checked to 1e-5 relative at step 1e-2.
    """
    alpha = tuple(int(a) for a in alpha)
    n = point.dim
    if len(alpha) != 2 * n:
        raise ConfigError(f"alpha must have length {2 * n} (x then y slots)")
    if any(a < 0 for a in alpha):
        raise ConfigError("alpha entries must be non-negative")
    order = sum(alpha)
    if order > 2:
        raise ConfigError("finite-difference oracle supports total order <= 2")

    def shifted(offsets: dict) -> float:
        xs = list(point.x)
        ys = list(point.y)
        for slot, off in offsets.items():
            if slot < n:
                xs[slot] += off
            else:
                ys[slot - n] += off
        return float(field(TangentPoint(tuple(xs), tuple(ys))))

    if order == 0:
        return shifted({})
    slots = [i for i, a in enumerate(alpha) for _ in range(a)]
    if order == 1:
        (a,) = slots
        return sum(c * shifted({a: k * step}) for k, c in _C1) / (12.0 * step)
    a, b = slots
    if a == b:
        total = sum(c * shifted({a: k * step}) for k, c in _C2)
        return total / (12.0 * step * step)
    acc = 0.0
    for ka, ca in _C1:
        for kb, cb in _C1:
            acc += ca * cb * shifted({a: ka * step, b: kb * step})
    return acc / (144.0 * step * step)
