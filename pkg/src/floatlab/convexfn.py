"""Convex potentials psi on R^n (n = 1, 2) and the integrals of exp(-psi).

Functions are vectorized over leading axes: ``psi.value(X)`` takes points
of shape ``(..., n)``. ``psi(x)`` is a convenience wrapper that also accepts
scalars (n = 1) or a single point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .numerics import Ball, QuadratureResult, QuadratureSpec, fd_gradient, fd_hessian, integrate

__all__ = [
    "ConvexFunction",
    "ConstructionError",
    "NotCoerciveError",
    "ConvexityError",
    "Ellipse",
    "SymmetricPolygon",
    "quadratic_form",
    "gauge_square_half",
    "power_norm",
    "lq_norm_square",
    "max_of",
    "min_of",
    "sum_of",
    "precompose_affine",
    "piecewise_1d",
    "huber",
    "linear_1d",
    "fit_coercive_minorant",
    "truncation_radius",
    "tail_bound",
    "integral_of_density",
    "gradient_weighted_integral",
    "spot_check_convexity",
    "spot_check_minorant",
    "approx_minimizer",
    "catalog",
]

GRAD_STEP = 1e-4
HESS_STEP = 1e-3


class ConstructionError(ValueError):
    pass


class NotCoerciveError(ValueError):
    """psi admits no linear minorant gamma*|x| + beta with gamma > 0."""


class ConvexityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConvexFunction:
    """Convex potential psi: R^n -> R with optional analytic derivatives.

    ``breakpoints`` lists 1D kink locations (used to seed quadrature);
    ``affine_det`` is set by :func:`precompose_affine`.
    """

    dim: int
    value_fn: Callable[[np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = None
    hess_fn: Callable[[np.ndarray], np.ndarray] | None = None
    minorant: tuple[float, float] | None = None
    breakpoints: tuple[float, ...] = ()
    name: str = "psi"
    affine_det: float | None = None
    smooth: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConstructionError("dimension must be 1 or 2")

    def __repr__(self):
        return f"ConvexFunction({self.name!r}, dim={self.dim})"

    def value(self, X) -> np.ndarray:
        return np.asarray(self.value_fn(np.asarray(X, dtype=float)), dtype=float)

    def gradient(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(X), dtype=float)
        return fd_gradient(self.value, X, GRAD_STEP)

    def hessian(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.hess_fn is not None:
            return np.asarray(self.hess_fn(X), dtype=float)
        return fd_hessian(self.value, X, HESS_STEP)

    def hessian_det(self, X) -> np.ndarray:
        H = self.hessian(X)
        if self.dim == 1:
            return H[..., 0, 0]
        return H[..., 0, 0] * H[..., 1, 1] - H[..., 0, 1] * H[..., 1, 0]

    def points(self, x) -> np.ndarray:
        """Coerce user input to points with a trailing axis of length ``dim``."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return x[..., None] if (x.ndim == 0 or x.shape[-1] != 1) else x
        if x.shape[-1] != 2:
            raise ValueError("2D function expects points with trailing axis of length 2")
        return x

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.value(self.points(x))
        return float(out) if out.ndim == 0 else out

    @cached_property
    def coercive_minorant(self) -> tuple[float, float]:
        if self.minorant is not None:
            return self.minorant
        return fit_coercive_minorant(self)


# ---------------------------------------------------------------- catalog


def _sym(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1] or A.shape[0] not in (1, 2):
        raise ConstructionError("matrix must be 1x1 or 2x2")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * (1 + np.abs(A).max())):
        raise ConstructionError("matrix must be symmetric")
    return 0.5 * (A + A.T)


def quadratic_form(A, shift: float = 0.0, name: str | None = None) -> ConvexFunction:
    """psi(x) = <Ax, x> + shift for symmetric positive definite A."""
    A = _sym(A)
    lam = np.linalg.eigvalsh(A)
    if lam.min() <= 0:
        raise ConstructionError("quadratic_form requires a positive definite matrix")
    n = A.shape[0]
    H = 2 * A

    def f(X):
        return np.einsum("...i,ij,...j->...", X, A, X) + shift

    def g(X):
        return 2 * X @ A

    def h(X):
        return np.broadcast_to(H, X.shape[:-1] + (n, n)).copy()

    return ConvexFunction(n, f, g, h, name=name or f"quad{A.ravel().tolist()}+{shift}",
                          meta={"kind": "quadratic", "A": A, "shift": float(shift)})


@dataclass(frozen=True)
class Ellipse:
    """Centred ellipse with semi-axes (rx, ry) rotated by ``angle``; ry=None
    gives the 1D interval [-rx, rx]."""

    rx: float
    ry: float | None = None
    angle: float = 0.0

    @property
    def dim(self) -> int:
        return 1 if self.ry is None else 2

    def gauge_matrix(self) -> np.ndarray:
        if self.ry is None:
            return np.array([[1.0 / self.rx ** 2]])
        c, s = math.cos(self.angle), math.sin(self.angle)
        R = np.array([[c, -s], [s, c]])
        return R @ np.diag([1.0 / self.rx ** 2, 1.0 / self.ry ** 2]) @ R.T


@dataclass(frozen=True)
class SymmetricPolygon:
    """Origin-symmetric convex polygon given by its vertices in CCW order."""

    vertices: tuple[tuple[float, float], ...]

    def facet_normals(self) -> np.ndarray:
        V = np.asarray(self.vertices, dtype=float)
        E = np.roll(V, -1, axis=0) - V
        N = np.stack([E[:, 1], -E[:, 0]], axis=1)
        h = np.einsum("ij,ij->i", N, V)
        if np.any(h <= 0):
            raise ConstructionError("polygon must be CCW and contain the origin")
        return N / h[:, None]


def gauge_square_half(body) -> ConvexFunction:
    """psi(x) = |x|_K^2 / 2 for an ellipse or a symmetric polygon K."""
    if isinstance(body, Ellipse):
        if body.rx <= 0 or (body.ry is not None and body.ry <= 0):
            raise ConstructionError("ellipse axes must be positive")
        M = body.gauge_matrix()
        psi = quadratic_form(M / 2)
        return replace(psi, name=f"halfsq-ellipse({body.rx},{body.ry})",
                       meta={**psi.meta, "body": body})
    if isinstance(body, SymmetricPolygon):
        W = body.facet_normals()

        def active(X):
            return np.argmax(X @ W.T, axis=-1)

        def f(X):
            return 0.5 * np.max(X @ W.T, axis=-1) ** 2

        def g(X):
            w = W[active(X)]
            return np.einsum("...i,...i->...", X, w)[..., None] * w

        def h(X):
            w = W[active(X)]
            return w[..., :, None] * w[..., None, :]

        return ConvexFunction(2, f, g, h, name="halfsq-polygon", smooth=False,
                              meta={"kind": "polygon_gauge", "body": body})
    raise ConstructionError(f"unsupported body {body!r}")


def _norm(X):
    return np.sqrt(np.sum(X * X, axis=-1))


def power_norm(p: float, scale: float = 1.0, dim: int = 1) -> ConvexFunction:
    """psi(x) = scale * |x|^p with p >= 1."""
    if p < 1:
        raise ConstructionError("power_norm requires p >= 1")
    if scale <= 0:
        raise ConstructionError("scale must be positive")
    n = dim

    def f(X):
        return scale * _norm(X) ** p

    def g(X):
        r = _norm(X)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(r > 0, scale * p * r ** (p - 2), 0.0) if p != 2 else np.full_like(r, 2 * scale)
        return c[..., None] * X

    def h(X):
        r = _norm(X)
        eye = np.eye(n)
        with np.errstate(divide="ignore", invalid="ignore"):
            if p == 2:
                return np.broadcast_to(2 * scale * eye, X.shape[:-1] + (n, n)).copy()
            rs = np.where(r > 0, r, 1.0)
            u = X / rs[..., None]
            c = scale * p * rs ** (p - 2)
            H = c[..., None, None] * (eye + (p - 2) * u[..., :, None] * u[..., None, :])
            # p = 1 is affine along rays: Hessian 0 away from the kink
            at0 = 0.0 if (p > 2 or p == 1) else np.inf
            return np.where((r > 0)[..., None, None], H, at0 * eye)

    return ConvexFunction(n, f, g, h, name=f"pownorm({p},{scale})", smooth=p >= 2,
                          meta={"kind": "pownorm", "p": p, "scale": scale})


def lq_norm_square(q: float, scale: float = 1.0) -> ConvexFunction:
    """psi(x) = scale * |x|_q^2 on R^2, q >= 2 (a 2-homogeneous gauge square)."""
    if q < 2:
        raise ConstructionError("lq_norm_square requires q >= 2")

    def S(X):
        return np.sum(np.abs(X) ** q, axis=-1)

    def f(X):
        return scale * S(X) ** (2 / q)

    def g(X):
        s = S(X)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(s > 0, 2 * scale * s ** (2 / q - 1), 0.0)
        return c[..., None] * np.abs(X) ** (q - 1) * np.sign(X)

    def h(X):
        s = S(X)
        ss = np.where(s > 0, s, 1.0)
        a = np.abs(X) ** (q - 1) * np.sign(X)
        H = 2 * scale * ((2 - q) * ss[..., None, None] ** (2 / q - 2) * a[..., :, None] * a[..., None, :]
                         + ss[..., None, None] ** (2 / q - 1)
                         * (q - 1) * np.abs(X)[..., :, None] ** (q - 2) * np.eye(2))
        return np.where((s > 0)[..., None, None], H, 0.0)

    return ConvexFunction(2, f, g, h, name=f"lqsq({q},{scale})", smooth=True,
                          meta={"kind": "lqsq", "q": q, "scale": scale, "two_homogeneous": True})


def _switch_points(fns: Sequence[ConvexFunction], pick, L: float = 64.0, m: int = 16385):
    """Points in [-L, L] where the active branch of a 1D max/min changes."""
    xs = np.linspace(-L, L, m)
    vals = np.stack([f.value(xs[:, None]) for f in fns])
    act = pick(vals, axis=0)
    out = []
    for k in np.nonzero(np.diff(act))[0]:
        i, j = act[k], act[k + 1]
        d = lambda t: float(fns[i].value(np.array([t])) - fns[j].value(np.array([t])))
        a, b = xs[k], xs[k + 1]
        da, db = d(a), d(b)
        if da == 0:
            out.append(a)
        elif db == 0:
            out.append(b)
        elif da * db < 0:
            out.append(brentq(d, a, b, xtol=1e-15))
        else:
            out.append(0.5 * (a + b))
    return tuple(float(v) for v in out)


def _branchwise(fns, pick):
    def f(X):
        return pick(np.stack([fn.value(X) for fn in fns]), axis=0)

    def idx(X):
        vals = np.stack([fn.value(X) for fn in fns])
        return np.argmax(vals, axis=0) if pick is np.max else np.argmin(vals, axis=0)

    def g(X):
        k = idx(X)
        G = np.stack([fn.gradient(X) for fn in fns])
        return np.take_along_axis(G, k[None, ..., None], axis=0)[0]

    def h(X):
        k = idx(X)
        H = np.stack([fn.hessian(X) for fn in fns])
        return np.take_along_axis(H, k[None, ..., None, None], axis=0)[0]

    return f, g, h


def _bps(fns, pick, argpick):
    dim = fns[0].dim
    bps = set()
    for fn in fns:
        bps.update(fn.breakpoints)
    if dim == 1:
        bps.update(_switch_points(fns, argpick))
    return tuple(sorted(bps))


def max_of(fns: Sequence[ConvexFunction], name: str | None = None) -> ConvexFunction:
    """Pointwise maximum; derivatives follow the lowest-index active branch."""
    fns = list(fns)
    if not fns or len({f.dim for f in fns}) != 1:
        raise ConstructionError("max_of needs functions of one common dimension")
    f, g, h = _branchwise(fns, np.max)
    return ConvexFunction(fns[0].dim, f, g, h, breakpoints=_bps(fns, np.max, np.argmax),
                          name=name or "max(" + ",".join(fn.name for fn in fns) + ")",
                          smooth=False, meta={"kind": "max", "parts": fns})


def min_of(fns: Sequence[ConvexFunction], name: str | None = None) -> ConvexFunction:
    """Pointwise minimum. Not convex in general: callers spot-check convexity."""
    fns = list(fns)
    if not fns or len({f.dim for f in fns}) != 1:
        raise ConstructionError("min_of needs functions of one common dimension")
    f, g, h = _branchwise(fns, np.min)
    return ConvexFunction(fns[0].dim, f, g, h, breakpoints=_bps(fns, np.min, np.argmin),
                          name=name or "min(" + ",".join(fn.name for fn in fns) + ")",
                          smooth=False, meta={"kind": "min", "parts": fns})


def sum_of(fns: Sequence[ConvexFunction], name: str | None = None) -> ConvexFunction:
    fns = list(fns)
    if not fns or len({f.dim for f in fns}) != 1:
        raise ConstructionError("sum_of needs functions of one common dimension")

    def f(X):
        return sum(fn.value(X) for fn in fns)

    def g(X):
        return sum(fn.gradient(X) for fn in fns)

    def h(X):
        return sum(fn.hessian(X) for fn in fns)

    bps = tuple(sorted({b for fn in fns for b in fn.breakpoints}))
    return ConvexFunction(fns[0].dim, f, g, h, breakpoints=bps,
                          name=name or "sum(" + ",".join(fn.name for fn in fns) + ")",
                          smooth=all(fn.smooth for fn in fns), meta={"kind": "sum", "parts": fns})


def precompose_affine(psi: ConvexFunction, A, t=0.0, name: str | None = None) -> ConvexFunction:
    """x -> psi(Ax + t) for invertible A; records det A in ``affine_det``."""
    n = psi.dim
    A = np.atleast_2d(np.asarray(A, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), (n,)).copy()
    if A.shape != (n, n) or t.shape != (n,):
        raise ConstructionError("affine map has wrong shape")
    det = float(np.linalg.det(A))
    if abs(det) < 1e-14:
        raise ConstructionError("affine map must be invertible")

    def inner(X):
        return X @ A.T + t

    def f(X):
        return psi.value(inner(X))

    def g(X):
        return psi.gradient(inner(X)) @ A

    def h(X):
        return np.einsum("ki,...kl,lj->...ij", A, psi.hessian(inner(X)), A)

    bps = ()
    if n == 1:
        bps = tuple(sorted((b - t[0]) / A[0, 0] for b in psi.breakpoints))
    return ConvexFunction(n, f, g, h, breakpoints=bps, name=name or f"affine({psi.name})",
                          affine_det=det, smooth=psi.smooth,
                          meta={"kind": "affine", "inner": psi, "A": A, "t": t})


def piecewise_1d(breakpoints: Sequence[float], values: Sequence[float],
                 left_slope: float, right_slope: float,
                 curvatures: Sequence[float] | None = None, name: str | None = None) -> ConvexFunction:
    """1D function interpolating ``values`` at ``breakpoints``.

    Between consecutive breakpoints the piece is linear plus
    ``q/2 (x - b_i)(x - b_{i+1})`` for curvature ``q >= 0``; outside the
    outer breakpoints it is affine with the given slopes.
    """
    b = np.asarray(breakpoints, dtype=float)
    v = np.asarray(values, dtype=float)
    m = b.size
    if m < 1 or v.size != m or np.any(np.diff(b) <= 0):
        raise ConstructionError("breakpoints must be strictly increasing and match values")
    q = np.zeros(max(m - 1, 0)) if curvatures is None else np.asarray(curvatures, dtype=float)
    if q.size != m - 1 or np.any(q < 0):
        raise ConstructionError("need m-1 nonnegative curvatures")
    if left_slope >= 0 or right_slope <= 0:
        raise ConstructionError("outer slopes must make the function coercive")
    s = np.diff(v) / np.diff(b) if m > 1 else np.zeros(0)
    L = np.diff(b)
    # one-sided slopes at each breakpoint must be nondecreasing
    right_at = np.concatenate([s - q * L / 2, [right_slope]])
    left_at = np.concatenate([[left_slope], s + q * L / 2])
    if np.any(right_at < left_at - 1e-12):
        raise ConstructionError("piecewise data is not convex")

    def seg(x):
        return np.clip(np.searchsorted(b, x, side="right") - 1, 0, max(m - 2, 0))

    def f(X):
        x = X[..., 0]
        out = np.where(x < b[0], v[0] + left_slope * (x - b[0]), v[-1] + right_slope * (x - b[-1]))
        if m > 1:
            i = seg(x)
            inner = v[i] + s[i] * (x - b[i]) + 0.5 * q[i] * (x - b[i]) * (x - b[i + 1])
            out = np.where((x >= b[0]) & (x <= b[-1]), inner, out)
        return out

    def g(X):
        x = X[..., 0]
        out = np.where(x < b[0], left_slope, right_slope)
        if m > 1:
            i = seg(x)
            inner = s[i] + 0.5 * q[i] * (2 * x - b[i] - b[i + 1])
            out = np.where((x >= b[0]) & (x < b[-1]), inner, out)
        return np.asarray(out, dtype=float)[..., None]

    def h(X):
        x = X[..., 0]
        out = np.zeros_like(x)
        if m > 1:
            i = seg(x)
            out = np.where((x >= b[0]) & (x < b[-1]), q[i], 0.0)
        return out[..., None, None]

    return ConvexFunction(1, f, g, h, breakpoints=tuple(b.tolist()), name=name or "piecewise",
                          smooth=False, meta={"kind": "piecewise"})


def huber(width: float = 1.0) -> ConvexFunction:
    """x^2/2 on [-w, w], continued affinely with slopes -+w."""
    w = float(width)
    return piecewise_1d([-w, w], [w * w / 2, w * w / 2], -w, w, [1.0], name=f"huber({w})")


# --------------------------------------------------------- coercivity, tails


def approx_minimizer(psi: ConvexFunction) -> np.ndarray:
    if psi.dim == 1:
        res = minimize_scalar(lambda t: float(psi.value(np.array([t]))), bracket=(-1.0, 1.0))
        return np.array([res.x])
    res = minimize(lambda z: float(psi.value(z)), np.zeros(2), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    return np.asarray(res.x, dtype=float)


def _directions(dim: int, count: int) -> np.ndarray:
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    th = 2 * np.pi * np.arange(count) / count
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def fit_coercive_minorant(psi: ConvexFunction) -> tuple[float, float]:
    """Linear minorant psi(x) >= gamma*|x| + beta with gamma > 0.

    gamma is half the smallest radial secant slope at the probe radius
    R = 8(|minimizer| + 1); beta is the minimum of psi - gamma|x| over a
    dense radial sample, refined along the worst ray.

    Raises:
      NotCoerciveError: secant slopes are not positive, or they decrease
        with the radius (impossible for a convex, coercive psi).
    """
    c = approx_minimizer(psi)
    R = 8.0 * (float(np.linalg.norm(c)) + 1.0)
    U = _directions(psi.dim, 64)
    f0 = float(psi.value(np.zeros(psi.dim)))
    slopes = [(psi.value(k * R * U) - f0) / (k * R) for k in (1, 2, 4)]
    tol = 1e-9 * (1 + np.abs(slopes[0]))
    if np.any(slopes[1] < slopes[0] - tol) or np.any(slopes[2] < slopes[1] - tol):
        raise NotCoerciveError("radial secant slopes decrease: psi is not convex and coercive")
    gamma = float(np.min(slopes[0])) / 2
    if not gamma > 0:
        raise NotCoerciveError(f"estimated gamma = {gamma} <= 0")
    U = _directions(psi.dim, 256)
    radii = np.linspace(0, 4 * R, 1601)
    P = radii[None, :, None] * U[:, None, :]
    D = psi.value(P) - gamma * radii[None, :]
    if not np.all(np.isfinite(D)):
        raise NotCoerciveError("psi is not finite on the probe sample")
    i, j = np.unravel_index(np.argmin(D), D.shape)
    beta = float(D[i, j])
    u = U[i]
    step = radii[1]
    res = minimize_scalar(lambda r: float(psi.value(r * u) - gamma * r),
                          bounds=(max(0.0, radii[j] - step), radii[j] + step), method="bounded",
                          options={"xatol": 1e-12})
    beta = min(beta, float(res.fun))
    beta -= 1e-9 * (1 + abs(beta)) + (1e-6 * abs(beta) + 1e-6 if psi.dim == 2 else 0.0)
    return gamma, beta


def tail_bound(dim: int, gamma: float, beta: float, R: float) -> float:
    """Upper bound on the integral of exp(-gamma|x| - beta) over |x| > R."""
    expo = -beta - gamma * R
    if expo > 700.0:
        return math.inf
    if dim == 1:
        return 2 * math.exp(expo) / gamma
    return 2 * math.pi * math.exp(expo) * (R / gamma + 1 / gamma ** 2)


def truncation_radius(psi: ConvexFunction, tol: float) -> float:
    """Smallest R (doubling, then bisection) whose analytic tail bound is <= tol."""
    gamma, beta = psi.coercive_minorant
    lo, hi = 0.0, 1.0
    while tail_bound(psi.dim, gamma, beta, hi) > tol:
        lo, hi = hi, 2 * hi
        if hi > 1e8:
            raise NotCoerciveError("tail bound does not decay")
    while hi - lo > 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if tail_bound(psi.dim, gamma, beta, mid) > tol:
            lo = mid
        else:
            hi = mid
    return hi


def spec_for(psi: ConvexFunction, spec: QuadratureSpec | None) -> QuadratureSpec:
    """Copy of ``spec`` matching psi's dimension, with the radius resolved."""
    spec = spec or QuadratureSpec(dimension=psi.dim)
    if spec.dimension != psi.dim:
        spec = replace(spec, dimension=psi.dim)
    if spec.truncation_radius is None:
        spec = replace(spec, truncation_radius=truncation_radius(psi, spec.abs_tol / 10))
    return spec


def _breaks(psi: ConvexFunction):
    return list(psi.breakpoints) if psi.dim == 1 and psi.breakpoints else None


def integrate_density(psi: ConvexFunction, weight, spec: QuadratureSpec | None = None,
                      full_output: bool = False):
    """Integral of ``weight(X) * exp(-psi(X))`` over the truncation ball,
    with the density tail bound added to the reported error."""
    spec = spec_for(psi, spec)
    R = spec.truncation_radius

    def g(X):
        return weight(X) * np.exp(-psi.value(X))

    res = integrate(g, Ball(R, (0.0,) * psi.dim), spec, breakpoints=_breaks(psi), full_output=True)
    gamma, beta = psi.coercive_minorant
    tail = tail_bound(psi.dim, gamma, beta, R)
    res = QuadratureResult(res.value, res.error + tail, res.evaluations, res.regions)
    return res if full_output else res.value


def integral_of_density(psi: ConvexFunction, spec: QuadratureSpec | None = None,
                        full_output: bool = False):
    """Integral of exp(-psi) over R^n."""
    return integrate_density(psi, lambda X: np.ones(X.shape[:-1]), spec, full_output)


def gradient_weighted_integral(psi: ConvexFunction, spec: QuadratureSpec | None = None,
                               full_output: bool = False):
    """Integral of exp(-psi) * sqrt(1 + |grad psi|^2)."""

    def w(X):
        G = psi.gradient(X)
        return np.sqrt(1 + np.sum(G * G, axis=-1))

    return integrate_density(psi, w, spec, full_output)


# ------------------------------------------------------------ spot checks


def _sample(dim: int, m: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-radius, radius, size=(m, dim))


def spot_check_convexity(psi: ConvexFunction, radius: float = 5.0, m: int = 500,
                         seed: int = 0, atol: float = 1e-10) -> bool:
    rng = np.random.default_rng(seed)
    X = _sample(psi.dim, m, radius, rng)
    Y = _sample(psi.dim, m, radius, rng)
    lam = rng.uniform(0, 1, size=(m, 1))
    lhs = psi.value(lam * X + (1 - lam) * Y)
    rhs = lam[:, 0] * psi.value(X) + (1 - lam[:, 0]) * psi.value(Y)
    return bool(np.all(lhs <= rhs + atol * (1 + np.abs(rhs))))


def spot_check_minorant(psi: ConvexFunction, radius: float, m: int = 2000, seed: int = 0) -> bool:
    gamma, beta = psi.coercive_minorant
    X = _sample(psi.dim, m, 2 * radius, np.random.default_rng(seed))
    return bool(np.all(psi.value(X) >= gamma * np.linalg.norm(X, axis=-1) + beta - 1e-12))


# ---------------------------------------------------------------- catalog


def catalog() -> dict[str, ConvexFunction]:
    """Named test functions. ``meta['positive_hessian']`` marks smooth
    functions with a positive definite Hessian everywhere."""
    sq = quadratic_form([[0.5]], name="x^2/2")
    entries = {
        "parabola": (sq, True),
        "x^2": (quadratic_form([[1.0]], name="x^2"), True),
        "x^2/2+x^4/4": (sum_of([sq, power_norm(4, 0.25)], name="x^2/2+x^4/4"), True),
        "shifted-parabola": (quadratic_form([[0.5]], 1.0, name="x^2/2+1"), True),
        "huber": (huber(1.0), False),
        "max(x^2,-x)": (max_of([quadratic_form([[1.0]]), linear_1d(-1.0)], name="max(x^2,-x)"), False),
        "max(x^2,x)": (max_of([quadratic_form([[1.0]]), linear_1d(1.0)], name="max(x^2,x)"), False),
        "paraboloid": (gauge_square_half(Ellipse(1.0, 1.0)), True),
        "aniso-quad": (quadratic_form([[1.0, 0.3], [0.3, 0.6]], name="aniso-quad"), True),
        "halfsq-ellipse(2,0.5)": (gauge_square_half(Ellipse(2.0, 0.5)), True),
    }
    out = {}
    for key, (fn, pos) in entries.items():
        out[key] = replace(fn, meta={**fn.meta, "positive_hessian": pos})
    return out


def linear_1d(slope: float, intercept: float = 0.0) -> ConvexFunction:
    """psi(x) = slope*x + intercept. Not coercive on its own: only meant as a
    branch of :func:`max_of` / :func:`min_of`."""
    return ConvexFunction(1, lambda X: slope * X[..., 0] + intercept,
                          lambda X: np.full(X.shape, float(slope)),
                          lambda X: np.zeros(X.shape + (1,)), name=f"{slope}*x+{intercept}",
                          meta={"kind": "linear"})
