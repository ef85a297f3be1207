"""Volume forms and the measure-level curvatures S, tau, and chi.

A volume form dV = sigma(x) dx enters every formula only through jets of
ln sigma in the x variables.  The Busemann-Hausdorff density is computed
by spherical quadrature with the base point carried as jet variables, so
its x-derivatives come from differentiating under the integral rather
than from finite differences.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from . import jets
from .errors import AdmissibilityError, ConfigError
from .expressions import as_field
from .geometry import (
    DEFAULT_DEGREE,
    FinslerMetric,
    Spray,
    SprayStack,
    TangentPoint,
    stack_for,
)
from .jets import Jet

BH_MAX_DIM = 4
_CHUNK = 4096

VOLUME_KINDS = ("coordinate", "explicit", "busemann-hausdorff", "scaled")


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_nodes(n: int, nodes: int):
    """Quadrature nodes and weights for S^{n-1}; weights sum to its area.

    S^1 uses the uniform trapezoid rule (spectrally accurate for periodic
    integrands); higher spheres use tensor products of Gauss-Legendre
    panels in the polar angles with the uniform rule in the azimuth.
    """
    if nodes < 8:
        raise ConfigError("sphere quadrature needs at least 8 nodes per angle")
    phi = 2.0 * math.pi * np.arange(nodes) / nodes
    wphi = np.full(nodes, 2.0 * math.pi / nodes)
    if n == 2:
        theta = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return theta, wphi
    u, wu = np.polynomial.legendre.leggauss(nodes)
    if n == 3:
        s = np.sqrt(1.0 - u**2)
        theta = np.stack(
            [
                np.outer(s, np.cos(phi)).ravel(),
                np.outer(s, np.sin(phi)).ravel(),
                np.outer(u, np.ones(nodes)).ravel(),
            ],
            axis=1,
        )
        w = np.outer(wu, wphi).ravel()
        return theta, w
    if n == 4:
        psi = 0.5 * math.pi * (u + 1.0)
        wpsi = 0.5 * math.pi * wu * np.sin(psi) ** 2
        sp, cp = np.sin(psi), np.cos(psi)
        s = np.sqrt(1.0 - u**2)
        grid = np.meshgrid(np.arange(nodes), np.arange(nodes), np.arange(nodes), indexing="ij")
        a, b, c = (g.ravel() for g in grid)
        theta = np.stack(
            [
                sp[a] * s[b] * np.cos(phi[c]),
                sp[a] * s[b] * np.sin(phi[c]),
                sp[a] * u[b],
                cp[a],
            ],
            axis=1,
        )
        w = wpsi[a] * wu[b] * wphi[c]
        return theta, w
    raise ConfigError(f"Busemann-Hausdorff quadrature supports dim <= {BH_MAX_DIM}, got {n}")


def bh_density(metric: FinslerMetric, x, nodes: int = 64, degree: int = 3) -> Jet:
    """Jet of ln sigma_BH at x, in the n-variable x-ring of the given degree.

    sigma_BH(x) = Vol(B^n) / Vol{y : F(x, y) < 1}, with the unit-ball
    volume computed as (1/n) * integral over S^{n-1} of F(x, theta)^{-n}.
    """
    n = metric.dim
    ring = jets.ring(n, degree)
    xs = [ring.seed(i, float(x[i])) for i in range(n)]
    theta, weights = sphere_nodes(n, nodes)
    total = None
    for start in range(0, theta.shape[0], _CHUNK):
        block = slice(start, start + _CHUNK)
        ys = [ring.const(np.ascontiguousarray(theta[block, i])) for i in range(n)]
        fsq = metric.fsq(xs, ys)
        values = np.asarray(fsq.coeffs[..., 0])
        if not np.all(values > 0.0):
            raise AdmissibilityError(
                f"{metric.name}: F^2 <= 0 on some direction at x = {tuple(x)}"
            )
        part = jets.powr(fsq, -0.5 * n).sum_batch(weights[block])
        total = part if total is None else total + part
    volume = (1.0 / n) * total
    volume.assert_finite("Busemann-Hausdorff volume integral")
    return math.log(unit_ball_volume(n)) - jets.log(volume)


class VolumeForm:
    """dV = sigma(x) dx, with sigma given directly or by quadrature."""

    def __init__(self, kind, sigma=None, f=None, base=None, sign=1, nodes=64):
        if kind not in VOLUME_KINDS:
            raise ConfigError(f"unknown volume kind {kind!r}; use one of {VOLUME_KINDS}")
        self.kind = kind
        self.sigma = sigma
        self.f = f
        self.base = base
        self.sign = sign
        self.nodes = int(nodes)
        self._fields = {}
        self._bh_cache = {}

    @classmethod
    def coordinate(cls):
        return cls("coordinate")

    @classmethod
    def explicit(cls, sigma):
        if sigma is None:
            raise ConfigError("explicit volume needs a sigma expression")
        return cls("explicit", sigma=sigma)

    @classmethod
    def busemann_hausdorff(cls, nodes=64):
        return cls("busemann-hausdorff", nodes=nodes)

    @classmethod
    def scaled(cls, base, f, sign=1):
        """dV = e^{sign (n+1) f} dV_base."""
        if f is None:
            raise ConfigError("scaled volume needs the scaling function f")
        return cls("scaled", f=f, base=base, sign=sign)

    def _field(self, raw, n):
        key = (id(raw), n)
        if key not in self._fields:
            self._fields[key] = as_field(raw, n)
        return self._fields[key]

    def lnsigma_jet(self, metric, x, degree: int) -> Jet:
        """Jet of ln sigma at x in the x-only ring (metric used for BH)."""
        n = len(x)
        ring = jets.ring(n, degree)
        if self.kind == "coordinate":
            return ring.const(0.0)
        if self.kind == "explicit":
            xs = [ring.seed(i, float(x[i])) for i in range(n)]
            return jets.log(self._field(self.sigma, n)(xs))
        if self.kind == "busemann-hausdorff":
            if metric is None:
                raise ConfigError("Busemann-Hausdorff volume needs a metric spray")
            key = (metric, tuple(float(v) for v in x), degree, self.nodes)
            if key not in self._bh_cache:
                self._bh_cache[key] = bh_density(metric, x, self.nodes, degree)
            return self._bh_cache[key]
        base = self.base if self.base is not None else VolumeForm.coordinate()
        xs = [ring.seed(i, float(x[i])) for i in range(n)]
        scale = self.sign * (n + 1.0) * self._field(self.f, n)(xs)
        return base.lnsigma_jet(metric, x, degree) + scale

    def describe(self) -> str:
        if self.kind == "explicit":
            return f"explicit:{self.sigma}"
        if self.kind == "busemann-hausdorff":
            return f"busemann-hausdorff({self.nodes})"
        if self.kind == "scaled":
            base = (self.base or VolumeForm.coordinate()).describe()
            return f"scaled({base}, sign={self.sign:+d}, f={self.f})"
        return self.kind


def volume_form(kind="coordinate", sigma=None, nodes=64) -> VolumeForm:
    if kind == "coordinate":
        return VolumeForm.coordinate()
    if kind == "explicit":
        return VolumeForm.explicit(sigma)
    if kind == "busemann-hausdorff":
        return VolumeForm.busemann_hausdorff(nodes)
    raise ConfigError(f"unknown volume kind {kind!r}")


class MeasureStack:
    """S, tau, and chi jets of one (spray, volume) pair at one point."""

    CHI_ROUTES = ("fromS", "fromT", "fromR")

    def __init__(self, stack: SprayStack, volume: VolumeForm, metric=None):
        self.stack = stack
        self.volume = volume
        self.metric = metric
        self.n = stack.n
        self.ring = stack.ring

    @cached_property
    def lnsigma(self) -> Jet:
        xdeg = self.ring.degree - 2
        base = self.volume.lnsigma_jet(self.metric, self.stack.point.x, xdeg)
        return jets.lift(base, self.ring)

    @cached_property
    def S(self) -> Jet:
        st = self.stack
        acc = st.N[0][0]
        for m in range(1, self.n):
            acc = acc + st.N[m][m]
        ln = self.lnsigma
        for m in range(self.n):
            acc = acc - st.y_jets[m] * ln.deriv(m)
        return acc

    @cached_property
    def S_hderiv(self) -> list[Jet]:
        return [self.stack.hderiv(self.S, m) for m in range(self.n)]

    @cached_property
    def S0(self) -> Jet:
        """S_{|m} y^m."""
        acc = self.S_hderiv[0] * self.stack.y_jets[0]
        for m in range(1, self.n):
            acc = acc + self.S_hderiv[m] * self.stack.y_jets[m]
        return acc

    @cached_property
    def tau(self) -> Jet:
        k = 1.0 / (self.n + 1.0)
        return (k * self.S) ** 2 + k * self.S0

    def chi_values(self, route: str = "fromT") -> np.ndarray:
        n = self.n
        st = self.stack
        if route == "fromS":
            # S_{.i|m} is the covariant derivative of the one-form S_{.i};
            # contracted with y^m its connection term is -S_{.l} N^l_i
            sv = np.array([self.S.deriv(n + l).value() for l in range(n)])
            out = np.zeros(n)
            for i in range(n):
                si = self.S.deriv(n + i)
                acc = -float(sv @ st.N_values[:, i])
                for m in range(n):
                    acc += st.hderiv_value(si, m) * st.point.y[m]
                out[i] = 0.5 * (acc - st.hderiv_value(self.S, i))
            return out
        if route == "fromT":
            out = np.zeros(n)
            for i in range(n):
                out[i] = -sum(st.T[m, i].deriv(n + m).value() for m in range(n)) / 3.0
            return out
        if route == "fromR":
            return np.array([jet.value() for jet in self.chi_jets])
        raise ConfigError(f"unknown chi route {route!r}; use one of {self.CHI_ROUTES}")

    @cached_property
    def chi_jets(self) -> list[Jet]:
        """chi as jets via the curvature-only expression (keeps most orders)."""
        n = self.n
        st = self.stack
        out = []
        for i in range(n):
            acc = 2.0 * st.Rik[0][i].deriv(n + 0)
            for m in range(1, n):
                acc = acc + 2.0 * st.Rik[m][i].deriv(n + m)
            acc = acc + (n - 1.0) * st.Rscalar.deriv(n + i)
            out.append((-1.0 / 6.0) * acc)
        return out


def _as_spray(obj) -> Spray:
    return obj.spray() if isinstance(obj, FinslerMetric) else obj


def measure_stack(obj, volume: VolumeForm, point: TangentPoint, degree: int = DEFAULT_DEGREE) -> MeasureStack:
    spray = _as_spray(obj)
    return MeasureStack(stack_for(spray, point, degree), volume, spray.metric)


def s_curvature(obj, volume: VolumeForm, point: TangentPoint, degree: int = DEFAULT_DEGREE) -> Jet:
    return measure_stack(obj, volume, point, degree).S


def tau(obj, volume: VolumeForm, point: TangentPoint, degree: int = DEFAULT_DEGREE) -> float:
    return measure_stack(obj, volume, point, degree).tau.value()


def chi(obj, volume: VolumeForm, point: TangentPoint, route: str = "fromT", degree: int = DEFAULT_DEGREE) -> np.ndarray:
    return measure_stack(obj, volume, point, degree).chi_values(route)
