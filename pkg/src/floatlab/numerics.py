"""Shared numerical kernels: adaptive quadrature, bracketed root finding,
low-dimensional maximization and central finite differences.

Integrands are vectorized: they receive an array of points of shape
``(m, n)`` and return ``m`` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "QuadratureSpec",
    "SearchSpec",
    "Box",
    "Ball",
    "QuadratureResult",
    "QuadratureError",
    "BracketError",
    "MaxResult",
    "integrate",
    "find_root_monotone",
    "maximize",
    "fd_gradient",
    "fd_hessian",
]

# Gauss-Kronrod 7/15 pair (QUADPACK qk15), positive half including centre.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-node rule on [-1, 1]; Gauss weights are zero on Kronrod-only nodes.
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_gw = np.zeros(8)
_gw[1::2] = _WG
GAUSS_W = np.concatenate([_gw[:-1], _gw[::-1]])

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for :func:`integrate`.

    ``truncation_radius=None`` means "derive it from the integrand's
    coercive minorant" (see :func:`floatlab.convexfn.truncation_radius`).
    """

    dimension: int = 1
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 200_000
    truncation_radius: float | None = None

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be strictly positive")
        if self.max_subdivisions <= 0:
            raise ValueError("max_subdivisions must be positive")
        if self.truncation_radius is not None and not (
                math.isfinite(self.truncation_radius) and self.truncation_radius > 0):
            raise ValueError("truncation_radius must be finite and positive")


@dataclass(frozen=True)
class SearchSpec:
    """Coarse grid plus golden-section refinement for :func:`maximize`.

    ``half_width=None`` lets the caller choose the box size.
    """

    grid_count: int = 11
    refinement_iterations: int = 60
    half_width: float | None = None

    def __post_init__(self):
        if self.grid_count < 3:
            raise ValueError("grid_count must be >= 3")
        if self.refinement_iterations < 0:
            raise ValueError("refinement_iterations must be >= 0")
        if self.half_width is not None and not self.half_width > 0:
            raise ValueError("half_width must be positive")


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return len(self.lo)


@dataclass(frozen=True)
class Ball:
    radius: float
    center: tuple[float, ...] = (0.0,)

    @property
    def dimension(self) -> int:
        return len(self.center)


class QuadratureResult(NamedTuple):
    value: float
    error: float
    evaluations: int
    regions: int


class QuadratureError(RuntimeError):
    """Subdivision budget exhausted; carries the best estimate so far."""

    def __init__(self, message: str, value: float, error: float):
        super().__init__(f"{message} (estimate={value!r}, error={error!r})")
        self.value = value
        self.error = error


class BracketError(ValueError):
    pass


def _as_box(region, dim: int) -> tuple[np.ndarray, np.ndarray, Ball | None]:
    if isinstance(region, Ball):
        c = np.asarray(region.center, dtype=float).reshape(-1)
        if c.size == 1 and dim == 2:
            c = np.full(2, c[0])
        return c - region.radius, c + region.radius, Ball(region.radius, tuple(c))
    if isinstance(region, Box):
        return (np.asarray(region.lo, dtype=float).reshape(-1),
                np.asarray(region.hi, dtype=float).reshape(-1), None)
    lo, hi = region
    return (np.atleast_1d(np.asarray(lo, dtype=float)),
            np.atleast_1d(np.asarray(hi, dtype=float)), None)


def _masked(g, ball: Ball | None):
    if ball is None:
        return g
    c = np.asarray(ball.center)
    r2 = ball.radius ** 2

    def h(X):
        out = np.asarray(g(X), dtype=float).reshape(len(X))
        inside = np.sum((X - c) ** 2, axis=-1) <= r2
        return np.where(inside, out, 0.0)

    return h


def _eval(g, X: np.ndarray) -> np.ndarray:
    vals = np.asarray(g(X), dtype=float).reshape(len(X))
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("integrand returned non-finite values")
    return vals


def _partition(lo: float, hi: float, points: Sequence[float] | None) -> np.ndarray:
    edges = [lo, hi]
    if points is not None:
        edges += [p for p in points if lo < p < hi]
    return np.unique(np.asarray(edges, dtype=float))


def integrate(g: Callable[[np.ndarray], np.ndarray], region, spec: QuadratureSpec | None = None,
              breakpoints=None, full_output: bool = False):
    """Globally adaptive Gauss-Kronrod quadrature over a box or ball in 1D/2D.

    2D uses the tensor K15 rule on rectangles, with the error estimated
    against the tensor G7 rule; rectangles are bisected along the axis that
    contributes more error. For a :class:`Ball` the integrand is set to zero
    outside the ball.

    Args:
      g: vectorized integrand, ``(m, n) -> (m,)``.
      region: :class:`Box`, :class:`Ball` or a ``(lo, hi)`` pair.
      spec: tolerances and subdivision budget.
      breakpoints: initial partition points (1D: sequence; 2D: pair of
        sequences, one per axis).
      full_output: return a :class:`QuadratureResult` instead of a float.

    Raises:
      QuadratureError: subdivision budget exhausted before the tolerance
        ``max(abs_tol, rel_tol*|value|)`` was met.
    """
    spec = spec or QuadratureSpec()
    lo, hi, ball = _as_box(region, spec.dimension)
    dim = lo.size
    gm = _masked(g, ball)
    if dim == 1:
        res = _adapt_1d(gm, lo[0], hi[0], spec, breakpoints)
    elif dim == 2:
        res = _adapt_2d(gm, lo, hi, spec, breakpoints)
    else:
        raise ValueError("only dimensions 1 and 2 are supported")
    return res if full_output else res.value


def _rule_1d(g, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    X = mid[:, None] + half[:, None] * NODES[None, :]
    f = _eval(g, X.reshape(-1, 1)).reshape(X.shape)
    k = half * (f @ KRONROD_W)
    gs = half * (f @ GAUSS_W)
    absk = np.abs(half) * (np.abs(f) @ KRONROD_W)
    return k, np.abs(k - gs), absk


def _select(err: np.ndarray, excess: float) -> np.ndarray:
    order = np.argsort(-err, kind="stable")
    csum = np.cumsum(err[order])
    n = int(np.searchsorted(csum, excess)) + 1
    return np.sort(order[:max(1, n)])


def _adapt_1d(g, lo: float, hi: float, spec: QuadratureSpec, breakpoints) -> QuadratureResult:
    if hi <= lo:
        return QuadratureResult(0.0, 0.0, 0, 0)
    edges = _partition(lo, hi, breakpoints)
    a, b = edges[:-1].copy(), edges[1:].copy()
    val, err, absv = _rule_1d(g, a, b)
    nev = 15 * a.size
    while True:
        total = math.fsum(val)
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        etot = float(np.sum(err))
        if etot <= tol:
            break
        # intervals already at roundoff level are not split further
        splittable = (err > 50 * _EPS * absv) & (np.abs(b - a) > 1e3 * _EPS * np.maximum(1, np.abs(a)))
        if not np.any(splittable):
            break
        cand = np.where(splittable, err, 0.0)
        idx = _select(cand, etot - tol)
        idx = idx[splittable[idx]]
        if a.size + idx.size > spec.max_subdivisions:
            raise QuadratureError("subdivision budget exhausted", total, etot)
        m = 0.5 * (a[idx] + b[idx])
        na = np.concatenate([a[idx], m])
        nb = np.concatenate([m, b[idx]])
        nv, ne, nabs = _rule_1d(g, na, nb)
        nev += 15 * na.size
        keep = np.ones(a.size, dtype=bool)
        keep[idx] = False
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])
        absv = np.concatenate([absv[keep], nabs])
    return QuadratureResult(math.fsum(val), float(np.sum(err)), nev, a.size)


_KK = np.outer(KRONROD_W, KRONROD_W)
_GK = np.outer(GAUSS_W, KRONROD_W)  # Gauss along x
_KG = np.outer(KRONROD_W, GAUSS_W)  # Gauss along y


def _rule_2d(g, x0, x1, y0, y1):
    hx, hy = 0.5 * (x1 - x0), 0.5 * (y1 - y0)
    mx, my = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    X = mx[:, None, None] + hx[:, None, None] * NODES[None, :, None]
    Y = my[:, None, None] + hy[:, None, None] * NODES[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    P = np.stack([X.reshape(-1), Y.reshape(-1)], axis=-1)
    f = _eval(g, P).reshape(X.shape)
    jac = hx * hy
    kk = jac * np.einsum("rij,ij->r", f, _KK)
    ex = np.abs(kk - jac * np.einsum("rij,ij->r", f, _GK))
    ey = np.abs(kk - jac * np.einsum("rij,ij->r", f, _KG))
    absv = np.abs(jac) * np.einsum("rij,ij->r", np.abs(f), _KK)
    return kk, ex, ey, absv


def _adapt_2d(g, lo, hi, spec: QuadratureSpec, breakpoints) -> QuadratureResult:
    if np.any(hi <= lo):
        return QuadratureResult(0.0, 0.0, 0, 0)
    bx, by = (None, None) if breakpoints is None else breakpoints
    ex_ = _partition(lo[0], hi[0], bx)
    ey_ = _partition(lo[1], hi[1], by)
    gx0, gy0 = np.meshgrid(ex_[:-1], ey_[:-1], indexing="ij")
    gx1, gy1 = np.meshgrid(ex_[1:], ey_[1:], indexing="ij")
    x0, x1, y0, y1 = (v.reshape(-1).copy() for v in (gx0, gx1, gy0, gy1))
    val, errx, erry, absv = _rule_2d(g, x0, x1, y0, y1)
    nev = 225 * x0.size
    while True:
        err = errx + erry
        total = math.fsum(val)
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        etot = float(np.sum(err))
        if etot <= tol:
            break
        splittable = err > 50 * _EPS * absv
        if not np.any(splittable):
            break
        cand = np.where(splittable, err, 0.0)
        idx = _select(cand, etot - tol)
        idx = idx[splittable[idx]]
        if x0.size + idx.size > spec.max_subdivisions:
            raise QuadratureError("subdivision budget exhausted", total, etot)
        along_x = errx[idx] >= erry[idx]
        sx0, sx1, sy0, sy1 = x0[idx], x1[idx], y0[idx], y1[idx]
        mx, my = 0.5 * (sx0 + sx1), 0.5 * (sy0 + sy1)
        # first child: lower half along the chosen axis; second: upper half
        c1 = (sx0, np.where(along_x, mx, sx1), sy0, np.where(along_x, sy1, my))
        c2 = (np.where(along_x, mx, sx0), sx1, np.where(along_x, sy0, my), sy1)
        n = [np.concatenate([u, v]) for u, v in zip(c1, c2)]
        nv, nex, ney, nabs = _rule_2d(g, *n)
        nev += 225 * n[0].size
        keep = np.ones(x0.size, dtype=bool)
        keep[idx] = False
        x0, x1, y0, y1 = (np.concatenate([o[keep], c]) for o, c in zip((x0, x1, y0, y1), n))
        val = np.concatenate([val[keep], nv])
        errx = np.concatenate([errx[keep], nex])
        erry = np.concatenate([erry[keep], ney])
        absv = np.concatenate([absv[keep], nabs])
    return QuadratureResult(math.fsum(val), float(np.sum(errx + erry)), nev, x0.size)


def find_root_monotone(g: Callable[[float], float], bracket: tuple[float, float],
                       tol: float = 1e-12) -> float:
    """Root of a monotone scalar function inside ``bracket``.

    Brent's method keeps every iterate inside the current sign-change
    bracket, so the result never leaves the initial interval.

    Raises:
      BracketError: ``g`` does not change sign over the bracket.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi:
        lo, hi = hi, lo
    glo, ghi = float(g(lo)), float(g(hi))
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: g(lo)={glo}, g(hi)={ghi}")
    r = brentq(g, lo, hi, xtol=tol, rtol=4 * _EPS, maxiter=500)
    return min(max(r, lo), hi)


class MaxResult(NamedTuple):
    argmax: np.ndarray
    value: float
    boundary_hit: bool
    evaluations: int


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _scalar(v) -> float:
    v = float(np.asarray(v, dtype=float).reshape(()))
    return v if math.isfinite(v) else -math.inf


def _golden(h: Callable[[float], float], lo: float, hi: float, iters: int,
            x_best: float, f_best: float):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = h(c), h(d)
    n = 2
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = h(d)
        n += 1
    for x, f in ((c, fc), (d, fd)):
        if f > f_best:
            x_best, f_best = x, f
    return x_best, f_best, n


def maximize(g: Callable[[np.ndarray], float], spec: SearchSpec | None = None,
             center: Sequence[float] = (0.0,), half_width: float | None = None) -> MaxResult:
    """Maximize ``g`` over the box ``center +- half_width`` (k = 1 or 2).

    Coarse grid scan (first grid index wins ties) followed by golden-section
    line searches per coordinate, repeated as coordinate descent in 2D.
    Non-finite values of ``g`` count as ``-inf``. ``boundary_hit`` is set
    when the maximizer sits on the box boundary.
    """
    spec = spec or SearchSpec()
    c = np.atleast_1d(np.asarray(center, dtype=float))
    k = c.size
    if k not in (1, 2):
        raise ValueError("maximize supports k = 1 or 2")
    w = half_width if half_width is not None else (spec.half_width or 1.0)
    lo, hi = c - w, c + w
    axes = [np.linspace(lo[i], hi[i], spec.grid_count) for i in range(k)]
    nev = 0
    best_x, best_f = None, -math.inf
    best_idx = None
    for idx in np.ndindex(*(spec.grid_count,) * k):
        x = np.array([axes[i][idx[i]] for i in range(k)])
        f = _scalar(g(x))
        nev += 1
        if best_x is None or f > best_f:
            best_x, best_f, best_idx = x, f, idx
    step = 2 * w / (spec.grid_count - 1)
    if spec.refinement_iterations > 0 and math.isfinite(best_f):
        x = best_x.copy()
        sweeps = 1 if k == 1 else 12
        radius = np.full(k, step)
        for s in range(sweeps):
            f_before = best_f
            for i in range(k):
                def h(t, i=i):
                    y = x.copy()
                    y[i] = t
                    return _scalar(g(y))

                a_i = max(lo[i], x[i] - radius[i])
                b_i = min(hi[i], x[i] + radius[i])
                xi, best_f, n = _golden(h, a_i, b_i, spec.refinement_iterations, x[i], best_f)
                nev += n
                x[i] = xi
            if k > 1 and best_f - f_before <= 1e-15 * (1 + abs(best_f)) and s > 0:
                break
            radius = np.maximum(radius * 0.5, step * 1e-3)
        best_x = x
    span = hi - lo
    on_edge = np.any((best_x - lo <= 1e-7 * span) | (hi - best_x <= 1e-7 * span))
    grid_edge = best_idx is not None and any(j in (0, spec.grid_count - 1) for j in best_idx)
    boundary_hit = bool(on_edge or (grid_edge and spec.refinement_iterations == 0))
    return MaxResult(best_x, best_f, boundary_hit, nev)


def _fn(psi):
    return psi.value if hasattr(psi, "value") else psi


def fd_gradient(psi, x, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient; ``x`` has shape ``(..., n)``."""
    f = _fn(psi)
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    g = np.empty(x.shape)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g[..., i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_hessian(psi, x, h: float = 1e-3) -> np.ndarray:
    """Central-difference Hessian, exactly symmetric; shape ``(..., n, n)``."""
    f = _fn(psi)
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    H = np.empty(x.shape + (n,))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        H[..., i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            hij = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h ** 2)
            H[..., i, j] = hij
            H[..., j, i] = hij
    return 0.5 * (H + np.swapaxes(H, -1, -2))
