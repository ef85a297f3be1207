"""Projective spray, Weyl tensor, and the four Berwald-Weyl routes.

The routes act as each other's oracles: `definition` runs entirely on the
hat connection, `viaBase` entirely on the base connection, and the two
divergence forms mix jets and connection values differently, so agreement
is a strong end-to-end check.  Closed-form anchors: scalar-curvature
metrics (Funk, square metric) must give W = 0 and W^o = 0 for any volume,
constant-curvature surfaces give W^o = 0, and the Einstein-surface
formula is compared against an analytic Gauss-curvature oracle.
"""

import itertools

import numpy as np
import pytest

from spraylab import jets
from spraylab.catalog import Randers, build
from spraylab.errors import AdmissibilityError, ConfigError, DegreeBudgetError
from spraylab.geometry import (
    MetricFrame,
    PerturbedSpray,
    TangentPoint,
    stack_for,
    tensor_values,
)
from spraylab.measures import MeasureStack, VolumeForm
from spraylab.projective import (
    ProjectiveStack,
    berwald_weyl,
    bweyl_residual,
    einstein_wo_check,
    projective_eval,
    projective_spray,
    projective_stack,
    volume_change_wo,
    weyl,
)

PT3 = TangentPoint((0.11, -0.07, 0.15), (0.9, -0.4, 0.7))
PT2 = TangentPoint((0.2, -0.3), (1.1, 0.4))
PT_FUNK = TangentPoint((0.12, -0.2, 0.05), (0.7, 0.3, -0.5))


def volumes3():
    return [
        VolumeForm.coordinate(),
        VolumeForm.explicit("exp(0.1*x2)"),
        VolumeForm.busemann_hausdorff(nodes=48),
    ]


def randers_stack(volume):
    return projective_stack(build("randers"), volume, PT3)


def oneform(entries):
    out = np.empty(len(entries), dtype=object)
    for k, jet in enumerate(entries):
        out[k] = jet
    return out


def rik_array(stack):
    n = stack.n
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for k in range(n):
            out[i, k] = stack.Rik[i][k]
    return out


def s_vderivs(measure):
    n = measure.n
    return np.array([measure.S.deriv(n + m).value() for m in range(n)])


# -- hat spray ------------------------------------------------------------------


def test_euclidean_hat_spray_vanishes():
    ps = projective_stack(build("euclidean"), VolumeForm.coordinate(), PT3)
    for jet in ps.Ghat:
        np.testing.assert_allclose(jet.coeffs, 0.0, atol=1e-15)


@pytest.mark.parametrize("volume", volumes3(), ids=lambda v: v.kind)
def test_hat_s_curvature_and_chi_vanish(volume):
    ps = randers_stack(volume)
    scale = abs(ps.measure.S.value()) + 1.0
    assert abs(ps.hat_measure.S.value()) <= 1e-12 * scale
    np.testing.assert_allclose(ps.hat_measure.chi_values("fromR"), 0.0, atol=1e-12)


def test_hat_nonlinear_connection_formula():
    ps = randers_stack(VolumeForm.explicit("exp(0.1*x2)"))
    n, y = ps.n, ps.point.y_array()
    sm = s_vderivs(ps.measure)
    frac = 1.0 / (n + 1.0)
    expected = (
        ps.base.N_values
        - frac * ps.measure.S.value() * np.eye(n)
        - frac * np.outer(y, sm)
    )
    np.testing.assert_allclose(ps.hat.N_values, expected, atol=1e-9)


def test_hat_berwald_connection_formula():
    ps = randers_stack(VolumeForm.explicit("exp(0.1*x2)"))
    n, y = ps.n, ps.point.y_array()
    sm = s_vderivs(ps.measure)
    svv = np.array(
        [[ps.measure.S.deriv(n + k).deriv(n + j).value() for k in range(n)] for j in range(n)]
    )
    frac = 1.0 / (n + 1.0)
    expected = np.array(ps.base.Gamma_values)
    for i, j, k in itertools.product(range(n), repeat=3):
        expected[i, j, k] -= frac * (
            sm[k] * (i == j) + sm[j] * (i == k) + svv[j, k] * y[i]
        )
    np.testing.assert_allclose(ps.hat.Gamma_values, expected, atol=1e-9)


def test_hat_horizontal_derivative_transfer():
    # f_{||k} = f_{|k} + Y(f) S_{.k}/(n+1) + S f_{.k}/(n+1), here f = Ric
    ps = randers_stack(VolumeForm.explicit("exp(0.1*x2)"))
    n = ps.n
    f = ps.base.Ric
    sm = s_vderivs(ps.measure)
    sval = ps.measure.S.value()
    yf = ps.base.euler_field(f).value()
    frac = 1.0 / (n + 1.0)
    for k in range(n):
        got = ps.hat.hderiv_value(f, k)
        want = (
            ps.base.hderiv_value(f, k)
            + frac * yf * sm[k]
            + frac * sval * f.deriv(n + k).value()
        )
        assert got == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("volume", volumes3(), ids=lambda v: v.kind)
def test_hat_ricci_scalar_is_r_plus_tau(volume):
    ps = randers_stack(volume)
    want = ps.base.Rscalar.value() + ps.measure.tau.value()
    scale = abs(want) + abs(ps.measure.tau.value()) + 1e-12
    assert abs(ps.Rhat.value() - want) <= 1e-9 * scale


def test_hat_curvature_tensor_decomposition():
    # Rhat^i_k = R^i_k + tau d^i_k - (1/2) tau_{.k} y^i + 3 chi_k y^i/(n+1);
    # the y^i factor on the tau_{.k} term is forced by the trace, which
    # must reproduce (n-1)(R + tau) through Euler's relation tau_{.k}y^k = 2tau
    ps = randers_stack(VolumeForm.explicit("exp(0.1*x2)"))
    n, y = ps.n, ps.point.y_array()
    tau = ps.measure.tau
    tau_v = np.array([tau.deriv(n + k).value() for k in range(n)])
    chi = ps.measure.chi_values("fromR")
    expected = (
        ps.base.Rik_values
        + tau.value() * np.eye(n)
        - 0.5 * np.outer(y, tau_v)
        + (3.0 / (n + 1.0)) * np.outer(y, chi)
    )
    np.testing.assert_allclose(ps.hat.Rik_values, expected, atol=1e-9)
    trace = np.trace(ps.hat.Rik_values)
    want = (n - 1.0) * (ps.base.Rscalar.value() + tau.value())
    assert trace == pytest.approx(want, abs=1e-9)


# -- Weyl tensor ----------------------------------------------------------------


def test_weyl_routes_and_volume_independence():
    values = []
    for volume in volumes3():
        ps = randers_stack(volume)
        via_hat = ps.weyl_values("viaHat")
        via_chi = ps.weyl_values("viaChi")
        scale = np.abs(via_hat).max() + 1e-12
        assert np.abs(via_hat - via_chi).max() <= 1e-7 * scale
        values.append(via_hat)
    assert np.abs(values[0]).max() > 1e-4  # the anchor is not degenerate
    for other in values[1:]:
        np.testing.assert_allclose(other, values[0], atol=1e-7 * np.abs(values[0]).max())


def test_weyl_trace_and_y_contraction():
    ps = randers_stack(VolumeForm.coordinate())
    w = ps.weyl_values()
    scale = np.abs(w).max()
    assert abs(np.trace(w)) <= 1e-12 * scale
    np.testing.assert_allclose(w @ ps.point.y_array(), 0.0, atol=1e-12 * scale)


@pytest.mark.parametrize("family", ["conformal-flat-2d", "round-sphere"])
def test_weyl_vanishes_in_dimension_two(family):
    w = weyl(build(family), VolumeForm.coordinate(), PT2)
    np.testing.assert_allclose(w, 0.0, atol=1e-10)


def test_weyl_vanishes_for_funk():
    w = weyl(build("funk"), VolumeForm.coordinate(), PT_FUNK)
    np.testing.assert_allclose(w, 0.0, atol=1e-10)


# -- Berwald-Weyl routes ---------------------------------------------------------


@pytest.mark.parametrize("volume", volumes3(), ids=lambda v: v.kind)
def test_wo_routes_agree(volume):
    ps = randers_stack(volume)
    byroute = {route: ps.wo_values(route) for route in ("definition", "viaBase", "divW", "divR")}
    scale = np.abs(byroute["definition"]).max() + 1e-12
    assert scale > 1e-5  # nonzero anchor
    for a, b in itertools.combinations(byroute.values(), 2):
        assert np.abs(a - b).max() <= 1e-6 * scale


@pytest.mark.parametrize("volume", volumes3(), ids=lambda v: v.kind)
def test_wo_y_contraction_vanishes(volume):
    ps = randers_stack(volume)
    wo = ps.wo_values()
    scale = np.abs(wo).max() + 1e-12
    assert abs(wo @ ps.point.y_array()) <= 1e-10 * scale


def test_wo_vanishes_for_scalar_curvature():
    # W = 0 in n >= 3 forces W^o = 0 for every volume form
    funk = build("funk")
    for volume in volumes3():
        wo = berwald_weyl(funk, volume, PT_FUNK)
        np.testing.assert_allclose(wo, 0.0, atol=1e-10)


def test_wo_vanishes_fourth_root():
    metric = build("fourth-root")
    pt = TangentPoint((0.1, -0.2, 0.15, 0.05), (0.8, 0.5, -0.6, 0.9))
    wo = berwald_weyl(metric, VolumeForm.busemann_hausdorff(nodes=16), pt)
    np.testing.assert_allclose(wo, 0.0, atol=1e-12)


@pytest.mark.parametrize("family", ["round-sphere", "hyperbolic-ball"])
def test_wo_vanishes_constant_curvature_surfaces(family):
    metric = build(family)
    pt = TangentPoint((0.25, -0.15), (0.7, 1.1))
    for volume in (VolumeForm.coordinate(), VolumeForm.busemann_hausdorff(nodes=32)):
        scale = abs(stack_for(metric.spray(), pt).Rscalar.value())
        wo = berwald_weyl(metric, volume, pt)
        np.testing.assert_allclose(wo, 0.0, atol=1e-10 * scale)


def test_wo_volume_independent_in_dimension_two():
    metric = build("conformal-flat-2d")
    base = berwald_weyl(metric, VolumeForm.coordinate(), PT2)
    assert np.abs(base).max() > 1e-3  # nontrivial surface
    for volume in (
        VolumeForm.explicit("exp(x1-0.5*x2)"),
        VolumeForm.busemann_hausdorff(nodes=48),
    ):
        other = berwald_weyl(metric, volume, PT2)
        np.testing.assert_allclose(other, base, atol=1e-8 * np.abs(base).max())


def test_projective_invariance():
    spray = build("randers").spray()
    pert = PerturbedSpray(
        spray,
        [lambda xs: 0.2 * xs[0], lambda xs: xs[1] * xs[2], lambda xs: 0.1 + 0.0 * xs[0]],
    )
    volume = VolumeForm.explicit("exp(0.1*x2)")
    w0, w1 = weyl(spray, volume, PT3), weyl(pert, volume, PT3)
    wo0, wo1 = berwald_weyl(spray, volume, PT3), berwald_weyl(pert, volume, PT3)
    assert np.abs(w0 - w1).max() <= 1e-10 * (np.abs(w0).max() + 1e-12)
    assert np.abs(wo0 - wo1).max() <= 1e-10 * (np.abs(wo0).max() + 1e-12)


def test_projective_spray_field():
    metric = build("randers")
    volume = VolumeForm.explicit("exp(0.1*x2)")
    hat = projective_spray(metric, volume)
    assert hat.dim == 3 and hat.metric is metric
    own = MeasureStack(stack_for(hat, PT3), volume, metric)
    assert abs(own.S.value()) <= 1e-12
    outside = TangentPoint((5.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert hat.admissible(PT3) and hat.admissible(outside)


# -- divergence identities --------------------------------------------------------


def base_wo_pieces(ps):
    """R_{|k}, R_{.k|m} y^m, chi_{k|m} y^m on the base connection."""
    st = ps.base
    n, y = ps.n, ps.point.y_array()
    first = st.hcov_scalar_values(st.Rscalar)
    rv = oneform([st.vderiv(st.Rscalar, k) for k in range(n)])
    second = st.hcov_values(rv, contra=0) @ y
    third = st.hcov_values(oneform(ps.measure.chi_jets), contra=0) @ y
    return first, second, third


def test_identity_new1():
    for volume in (VolumeForm.coordinate(), VolumeForm.explicit("exp(0.1*x2)")):
        ps = randers_stack(volume)
        st = ps.base
        first, second, third = base_wo_pieces(ps)
        ric_div = np.einsum("mkm->k", st.hcov_values(rik_array(st), contra=1))
        residual = first - 0.5 * second - (third + ric_div) / (ps.n - 1.0)
        scale = max(np.abs(first).max(), np.abs(ric_div).max()) + 1e-12
        assert np.abs(residual).max() <= 1e-9 * scale


def test_identity_divergence_wmkm():
    ps = randers_stack(VolumeForm.explicit("exp(0.1*x2)"))
    n = ps.n
    first, second, third = base_wo_pieces(ps)
    lhs = np.einsum("mkm->k", ps.base.hcov_values(ps.W, contra=1))
    rhs = (n - 2.0) * (first - 0.5 * second - third / (n + 1.0))
    scale = max(np.abs(lhs).max(), np.abs(first).max()) + 1e-12
    assert np.abs(lhs - rhs).max() <= 1e-9 * scale


def test_identity_bianchi_contracted():
    # R^i_{k|p} - R^i_{p|k} + R^i_{pk|l} y^l = 0
    st = randers_stack(VolumeForm.coordinate()).base
    n, y = st.n, st.point.y_array()
    rik_cov = st.hcov_values(rik_array(st), contra=1)
    r3_cov = st.hcov_values(st.R3, contra=1)
    residual = rik_cov - rik_cov.transpose(0, 2, 1) + np.einsum("ipkl,l->ikp", r3_cov, y)
    scale = np.abs(rik_cov).max() + 1e-12
    assert np.abs(residual).max() <= 1e-9 * scale


# -- volume change and flatness conditions ----------------------------------------


def test_volume_change_transfer():
    metric = build("randers")
    volume = VolumeForm.explicit("exp(0.1*x2)")
    wo = berwald_weyl(metric, volume, PT3)
    wo_tilde, residual = volume_change_wo(metric, volume, "0.1*x1*x2", PT3)
    scale = np.abs(wo_tilde).max() + 1e-12
    assert residual <= 1e-9 * scale
    assert np.abs(wo_tilde - wo).max() > 1e-7  # the rescale actually moves W^o


def test_volume_change_constant_and_absent_f():
    metric = build("randers")
    volume = VolumeForm.coordinate()
    wo = berwald_weyl(metric, volume, PT3)
    for f in ("0.25", None):
        wo_tilde, residual = volume_change_wo(metric, volume, f, PT3)
        np.testing.assert_allclose(wo_tilde, wo, atol=1e-12)
        assert residual <= 1e-12


def test_volume_change_scalar_curvature_fixed_point():
    # W = 0: any rescale leaves W^o untouched (and zero for Funk)
    wo_tilde, residual = volume_change_wo(
        build("funk"), VolumeForm.coordinate(), "0.3*x1-0.2*x3", PT_FUNK
    )
    np.testing.assert_allclose(wo_tilde, 0.0, atol=1e-10)
    assert residual <= 1e-10


def test_bweyl_residual_equivalence():
    # by the divergence identity the two condition gaps are proportional:
    # c-gap = (n-2) * b-gap, so one vanishes exactly when the other does
    metric = build("randers")
    res = bweyl_residual(metric, VolumeForm.coordinate(), "0.1*x1*x2", PT3)
    n = 3
    assert res.b_residual > 1e-6  # generic f is not a witness
    assert res.c_residual == pytest.approx((n - 2.0) * res.b_residual, rel=1e-6)
    assert float(res) == res.c_residual
    trivial = bweyl_residual(build("funk"), VolumeForm.coordinate(), None, PT_FUNK)
    assert trivial.b_residual <= 1e-10 and trivial.c_residual <= 1e-10


def test_bweyl_dimension_guards():
    surface = build("conformal-flat-2d")
    with pytest.raises(ConfigError):
        bweyl_residual(surface, VolumeForm.coordinate(), "x1", PT2)
    with pytest.raises(ConfigError):
        berwald_weyl(surface, VolumeForm.coordinate(), PT2, route="divW")


# -- Einstein surfaces -------------------------------------------------------------


def conformal_gauss_oracle(pt):
    """K, dK/dx, F, and dF/dy for e^{2 lam} delta with lam = x1^2."""
    x1, _ = pt.x
    lam = x1 * x1
    K = -2.0 * np.exp(-2.0 * lam)  # K = -e^{-2 lam} (lam_11 + lam_22)
    dK = np.array([8.0 * x1 * np.exp(-2.0 * lam), 0.0])
    y = pt.y_array()
    F = np.exp(lam) * np.hypot(*y)
    dF = np.exp(lam) * y / np.hypot(*y)
    return K, dK, F, dF


def test_einstein_surface_matches_gauss_oracle():
    metric = build("conformal-flat-2d")
    for pt in (PT2, TangentPoint((0.4, 0.1), (-0.3, 0.9))):
        check = einstein_wo_check(metric, pt)
        _, dK, F, dF = conformal_gauss_oracle(pt)
        y = pt.y_array()
        theta = dK @ y
        # F^3 (theta/F)_{.k} = F^2 theta_{.k} - F theta F_{.k}
        want = F * F * dK - F * theta * dF
        np.testing.assert_allclose(check.predicted, want, atol=1e-8 * (np.abs(want).max() + 1e-12))
        scale = np.abs(check.predicted).max() + 1e-12
        assert np.abs(check.predicted).max() > 1e-3
        assert check.residual <= 1e-6 * scale


def test_einstein_round_sphere_both_sides_vanish():
    check = einstein_wo_check(build("round-sphere"), TangentPoint((0.3, -0.1), (0.8, 0.5)))
    np.testing.assert_allclose(check.wo, 0.0, atol=1e-10)
    np.testing.assert_allclose(check.predicted, 0.0, atol=1e-10)
    assert float(check) == check.residual


def test_einstein_check_guards():
    with pytest.raises(ConfigError):
        einstein_wo_check(build("randers"), PT3)
    bumpy = Randers(
        2,
        lambda xs: [[1.0 + 0.0 * xs[0], 0.0 * xs[0]], [0.0 * xs[0], 1.0 + 0.3 * xs[0] * xs[0]]],
        lambda xs: [0.3 + 0.1 * xs[1], 0.2 * xs[0]],
    )
    with pytest.raises(AdmissibilityError):
        einstein_wo_check(bumpy, TangentPoint((0.1, 0.2), (1.0, 0.3)))


# -- bundles, validation, degrees ----------------------------------------------------


def test_projective_eval_bundle():
    ev = projective_eval(build("randers"), VolumeForm.coordinate(), PT3)
    assert len(ev.Ghat) == 3 and ev.Nhat.shape == (3, 3)
    assert ev.Gammahat.shape == (3, 3, 3) and ev.Rhat_ik.shape == (3, 3)
    assert abs(ev.Shat) <= 1e-12
    np.testing.assert_allclose(ev.chihat, 0.0, atol=1e-12)
    np.testing.assert_allclose(ev.That, ev.W, atol=0.0)
    assert ev.Wo.shape == (3,)
    assert ev.Rhat == pytest.approx(np.trace(ev.Rhat_ik) / 2.0, rel=1e-12)


def test_route_validation():
    metric = build("euclidean")
    volume = VolumeForm.coordinate()
    with pytest.raises(ConfigError):
        weyl(metric, volume, PT3, route="sideways")
    with pytest.raises(ConfigError):
        berwald_weyl(metric, volume, PT3, route="sideways")


def test_definition_route_needs_full_budget():
    metric = build("randers")
    volume = VolumeForm.coordinate()
    with pytest.raises(DegreeBudgetError):
        berwald_weyl(metric, volume, PT3, degree=6)
    divr = berwald_weyl(metric, volume, PT3, route="divR", degree=6)
    full = berwald_weyl(metric, volume, PT3, route="divR", degree=7)
    np.testing.assert_allclose(divr, full, atol=1e-12)


def test_square_metric_is_scalar_curvature():
    # squared-inner reading: Ricci-flat with W = 0, so W^o = 0 for any
    # volume; S/F is not constant in y (not isotropic)
    metric = build("square-metric")
    pt = TangentPoint((0.05, -0.08, 0.06), (0.9, -0.4, 0.7))
    st = stack_for(metric.spray(), pt)
    f2 = MetricFrame(metric, pt, 3).fsq.value()
    assert abs(st.Rscalar.value()) <= 1e-10 * f2
    for volume in (VolumeForm.coordinate(), VolumeForm.busemann_hausdorff(nodes=32)):
        ps = projective_stack(metric, volume, pt)
        assert np.abs(ps.weyl_values()).max() <= 1e-10 * f2
        assert np.abs(ps.wo_values()).max() <= 1e-8 * f2
    ratios = []
    bh = VolumeForm.busemann_hausdorff(nodes=32)
    for yy in ((1.0, 0.2, -0.3), (0.1, 1.0, 0.4), (-0.5, 0.3, 1.0)):
        q = TangentPoint(pt.x, yy)
        ms = projective_stack(metric, bh, q).measure
        ratios.append(ms.S.value() / MetricFrame(metric, q, 3).F.value())
    assert max(ratios) - min(ratios) > 1e-2
