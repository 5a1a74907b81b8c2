"""Geometry of the epigraph of psi in R^{n+1}.

Cap volumes under non-vertical hyperplanes y = <a,x> + b, graph curvature
and normals, the rolling function, and ellipsoid caps.

The wet region {x : <a,x> + b > psi(x)} of a cut is convex and star-shaped
about the apex (the maximizer of <a,x> - psi(x)), so every cap integral is
computed in polar form around the apex with radial roots found per ray.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import gamma as gamma_fn

from .convexfn import ConvexFunction, ConvexityError, gradient_weighted_integral, spec_for, tail_bound
from .numerics import Ball, Box, QuadratureResult, QuadratureSpec, integrate

__all__ = [
    "HyperplaneCut",
    "EllipsoidSpec",
    "CapMoments",
    "RegionError",
    "DomainError",
    "unit_ball_volume",
    "dry_offset",
    "region_limit",
    "cap_moments",
    "cap_volume",
    "ellipsoid_cap_volume",
    "ellipsoid_cap_bounds",
    "graph_curvature",
    "graph_normal_component",
    "rolling_function",
    "rolling_radii",
    "rolling_weighted_integral",
]

CURVATURE_CLAMP = 1e-10
ROLLING_FLOOR = 1e-4


class RegionError(ValueError):
    """The wet region of a cut leaves the admissible domain."""


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class HyperplaneCut:
    """Non-vertical hyperplane y = <slope, x> + offset."""

    slope: tuple[float, ...]
    offset: float

    def __post_init__(self):
        vals = tuple(float(s) for s in np.atleast_1d(self.slope))
        if not all(math.isfinite(v) for v in vals + (float(self.offset),)):
            raise ValueError("cut components must be finite")
        object.__setattr__(self, "slope", vals)
        object.__setattr__(self, "offset", float(self.offset))

    def __call__(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ np.asarray(self.slope) + self.offset


@dataclass(frozen=True)
class EllipsoidSpec:
    """Centred axis-parallel ellipsoid with semi-axes ``axes`` (dimension m)."""

    axes: tuple[float, ...]

    def __post_init__(self):
        axes = tuple(float(a) for a in self.axes)
        if not axes or any(a <= 0 for a in axes):
            raise ValueError("semi-axes must be positive")
        object.__setattr__(self, "axes", axes)

    @property
    def dim(self) -> int:
        return len(self.axes)


class CapMoments(NamedTuple):
    volume: float
    area: float
    centroid: np.ndarray
    apex: np.ndarray
    depth: float
    error: float


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / gamma_fn(n / 2 + 1)


# ----------------------------------------------------------------- caps


def region_limit(psi: ConvexFunction, spec: QuadratureSpec | None = None) -> float:
    """Radius (about the origin) that wet regions may not leave."""
    return 4.0 * spec_for(psi, spec).truncation_radius


def dry_offset(psi: ConvexFunction, slope, start=None, limit: float = math.inf):
    """Apex and largest dry offset for ``slope``.

    Returns ``(apex, b_dry)`` with apex = argmax <a,x> - psi(x) and
    b_dry = psi(apex) - <a, apex>: cuts with offset <= b_dry are dry.

    Raises:
      RegionError: <a,x> - psi(x) has no maximizer within ``limit``.
    """
    a = np.atleast_1d(np.asarray(slope, dtype=float))
    x0 = np.zeros(psi.dim) if start is None else np.atleast_1d(np.asarray(start, dtype=float)).copy()

    def phi(x):
        return float(psi.value(x) - x @ a)

    if psi.dim == 1:
        def phi1(t):
            v = phi(np.array([t]))
            return v if math.isfinite(v) else math.inf

        try:
            step = 0.5 * (1 + abs(x0[0]))
            with warnings.catch_warnings():
                # unbounded slopes overflow inside the bracket search
                warnings.simplefilter("ignore", RuntimeWarning)
                res = minimize_scalar(phi1, bracket=(x0[0] - step, x0[0] + step),
                                      options={"xtol": 1e-12, "maxiter": 500})
        except (RuntimeError, ValueError) as exc:
            raise RegionError(f"no apex for slope {a.tolist()}: {exc}") from exc
        x = np.array([float(res.x)])
        if not res.success and not abs(x[0]) < limit:
            raise RegionError(f"no apex for slope {a.tolist()}")
    else:
        x = _newton_apex(psi, a, x0)
        if x is None:
            res = minimize(phi, x0, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
            x = np.asarray(res.x, dtype=float)
    if not (np.all(np.isfinite(x)) and np.linalg.norm(x) < limit):
        raise RegionError(f"apex for slope {a.tolist()} leaves the region (|x| >= {limit})")
    return x, phi(x)


def _newton_apex(psi: ConvexFunction, a: np.ndarray, x: np.ndarray, iters: int = 50):
    phi = lambda z: float(psi.value(z) - z @ a)
    f = phi(x)
    for _ in range(iters):
        g = psi.gradient(x) - a
        H = psi.hessian(x)
        try:
            step = np.linalg.solve(H + 1e-14 * np.eye(psi.dim) * (1 + np.abs(H).max()), -g)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        t = 1.0
        while True:
            xn = x + t * step
            fn = phi(xn)
            if fn <= f + 1e-4 * t * (g @ step) or t < 1e-10:
                break
            t *= 0.5
        if t < 1e-10:
            return None
        done = np.linalg.norm(xn - x) <= 1e-13 * (1 + np.linalg.norm(x))
        x, f = xn, fn
        if done:
            return x
    gn = np.linalg.norm(psi.gradient(x) - a)
    return x if gn <= 1e-9 * (1 + np.linalg.norm(a)) else None


def _radial_roots(psi, a, b, apex, U, limit):
    """Distance r_j > 0 along each unit ray U[j] from the apex to the curve
    <a,x> + b = psi(x). Safeguarded Newton from outside the wet region."""
    m = len(U)
    ua = U @ a

    def h(r):
        X = apex + r[:, None] * U
        return b + X @ a - psi.value(X)

    def dh(r):
        X = apex + r[:, None] * U
        return ua - np.einsum("ij,ij->i", psi.gradient(X), U)

    depth = b + apex @ a - float(psi.value(apex))
    H = psi.hessian(apex)
    curv = np.einsum("ij,jk,ik->i", U, H, U)
    scale = 1 + np.linalg.norm(apex)
    guess = np.where(curv > 1e-12, np.sqrt(2 * max(depth, 0.0) / np.maximum(curv, 1e-300)), scale)
    hi = np.maximum(2.0 * guess, 1e-12 * scale)
    reach = np.linalg.norm(apex) + hi
    hv = h(hi)
    while np.any(hv >= 0):
        grow = hv >= 0
        hi = np.where(grow, 2 * hi, hi)
        if np.any(np.linalg.norm(apex + hi[:, None] * U, axis=1)[grow] > limit):
            raise RegionError("wet region exceeds the admissible radius")
        hv = h(hi)
    lo = np.zeros(m)
    r = hi.copy()
    hr = hv
    fscale = np.abs(b) + np.abs(apex @ a) + np.abs(float(psi.value(apex))) + 1e-300
    for _ in range(200):
        d = dh(r)
        newton = r - hr / np.where(d < 0, d, -np.inf)
        ok = (newton > lo) & (newton < hi) & (d < 0)
        rn = np.where(ok, newton, 0.5 * (lo + hi))
        hn = h(rn)
        lo = np.where(hn > 0, rn, lo)
        hi = np.where(hn <= 0, rn, hi)
        done = (np.abs(rn - r) <= 4e-16 * rn) | (np.abs(hn) <= 8e-16 * fscale) | (hi - lo <= 4e-16 * hi)
        r, hr = rn, hn
        if np.all(done):
            break
    del reach
    return r


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss01(m: int):
    if m not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(m)
        _GL_CACHE[m] = (0.5 * (x + 1), 0.5 * w)
    return _GL_CACHE[m]


def _polar_sums(psi, a, b, apex, theta, rho, m):
    """Per-ray integrals of (l - psi) r dr on [0, rho] with m-point Gauss."""
    s, w = _gauss01(m)
    U = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    R = rho[:, None] * s[None, :]
    X = apex + R[..., None] * U[:, None, :]
    g = b + X @ a - psi.value(X)
    return rho ** 2 * ((np.maximum(g, 0.0) * s[None, :]) @ w)


def cap_moments(psi: ConvexFunction, slope, offset: float, apex=None, b_dry: float | None = None,
                rtol: float = 1e-11, limit: float | None = None,
                spec: QuadratureSpec | None = None, atol: float = 0.0) -> CapMoments:
    """Volume, base area and base centroid of the cap cut by y = <a,x> + b.

    Raises:
      RegionError: the wet region leaves the admissible radius.
    """
    a = np.atleast_1d(np.asarray(slope, dtype=float))
    b = float(offset)
    if limit is None:
        limit = region_limit(psi, spec)
    if apex is None or b_dry is None:
        apex, b_dry = dry_offset(psi, a, start=apex, limit=limit)
    apex = np.atleast_1d(np.asarray(apex, dtype=float))
    depth = b - b_dry
    if depth <= 0:
        return CapMoments(0.0, 0.0, apex.copy(), apex, depth, 0.0)
    if psi.dim == 1:
        U = np.array([[-1.0], [1.0]])
        rr = _radial_roots(psi, a, b, apex, U, limit)
        lo, hi = apex[0] - rr[0], apex[0] + rr[1]
        qs = QuadratureSpec(dimension=1, abs_tol=max(atol, 1e-300), rel_tol=rtol, max_subdivisions=20000)
        res = integrate(lambda X: np.maximum(b + X @ a - psi.value(X), 0.0), Box((lo,), (hi,)), qs,
                        breakpoints=list(psi.breakpoints) or None, full_output=True)
        return CapMoments(res.value, hi - lo, np.array([0.5 * (lo + hi)]), apex, depth, res.error)
    return _cap_moments_2d(psi, a, b, apex, depth, rtol, limit, atol)


def _cap_moments_2d(psi, a, b, apex, depth, rtol, limit, atol=0.0, m_theta=32, max_theta=8192):
    M = m_theta
    theta = 2 * np.pi * np.arange(M) / M
    U = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    rho = _radial_roots(psi, a, b, apex, U, limit)
    m = 16
    inner = _polar_sums(psi, a, b, apex, theta, rho, m)
    prev = None
    while True:
        vol = (2 * np.pi / M) * inner.sum()
        if prev is not None:
            err = abs(vol - prev)
            if err <= max(rtol * vol, atol) or M >= max_theta:
                break
        prev = vol
        th_new = theta + np.pi / M
        U_new = np.stack([np.cos(th_new), np.sin(th_new)], axis=1)
        rho_new = _radial_roots(psi, a, b, apex, U_new, limit)
        in_new = _polar_sums(psi, a, b, apex, th_new, rho_new, m)
        theta = np.ravel(np.column_stack([theta, th_new]))
        rho = np.ravel(np.column_stack([rho, rho_new]))
        inner = np.ravel(np.column_stack([inner, in_new]))
        U = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        M *= 2
    # inner rule check: refine the ray integrals if the 2m-point rule disagrees
    fine = _polar_sums(psi, a, b, apex, theta, rho, 2 * m)
    vol_f = (2 * np.pi / M) * fine.sum()
    ierr = abs(vol_f - vol)
    while ierr > max(rtol * vol_f, atol) and m < 256:
        m *= 2
        coarse, fine = fine, _polar_sums(psi, a, b, apex, theta, rho, 2 * m)
        vol, vol_f = (2 * np.pi / M) * coarse.sum(), (2 * np.pi / M) * fine.sum()
        ierr = abs(vol_f - vol)
    w = 2 * np.pi / M
    area = w * np.sum(rho ** 2) / 2
    first = apex * area + w * (rho ** 3 / 3) @ U
    return CapMoments(float(vol_f), float(area), first / area, apex, depth, float(err + ierr))


def cap_volume(psi: ConvexFunction, cut: HyperplaneCut, spec: QuadratureSpec | None = None) -> float:
    """(n+1)-volume of {(x, y): psi(x) <= y <= <a,x> + b}."""
    if len(cut.slope) != psi.dim:
        raise ValueError("cut slope dimension does not match psi")
    limit = region_limit(psi, spec)
    apex, b_dry = dry_offset(psi, cut.slope, limit=limit)
    return cap_moments(psi, cut.slope, cut.offset, apex, b_dry, limit=limit).volume


# ------------------------------------------------------- ellipsoid caps


def ellipsoid_cap_volume(e: EllipsoidSpec, h: float) -> float:
    """Volume of {x in E : x_m >= a_m - h}, by quadrature over slices.

    With x_m = a_m cos(phi) the slice integral becomes
    a_m * vol_{m-1}(B) * prod_{i<m} a_i * int_0^{phi_h} sin(phi)^m dphi.
    """
    m = e.dim
    am = e.axes[-1]
    if not 0 <= h <= am:
        raise DomainError(f"cap height must lie in [0, {am}]")
    if h == 0:
        return 0.0
    phi_h = 2 * math.asin(math.sqrt(h / (2 * am)))  # acos(1 - h/a_m) without cancellation
    if phi_h < 1e-4:
        # series of int_0^phi sin^m, error O(phi^4) relative
        val = phi_h ** (m + 1) / (m + 1) * (1 - m * (m + 1) * phi_h ** 2 / (6 * (m + 3)))
    else:
        qs = QuadratureSpec(dimension=1, abs_tol=1e-300, rel_tol=1e-13)
        val = integrate(lambda X: np.sin(X[:, 0]) ** m, Box((0.0,), (phi_h,)), qs)
    return am * unit_ball_volume(m - 1) * math.prod(e.axes[:-1]) * val


def ellipsoid_cap_bounds(e: EllipsoidSpec, h: float) -> tuple[float, float]:
    """Lower and upper cap-volume bounds that sandwich the exact value."""
    m = e.dim
    am = e.axes[-1]
    if not 0 <= h <= am:
        raise DomainError(f"cap height must lie in [0, {am}]")
    upper = (2 ** ((m + 1) / 2) * unit_ball_volume(m - 1) * math.prod(e.axes[:-1])
             * am ** (-(m - 1) / 2) * h ** ((m + 1) / 2) / (m + 1))
    lower = upper * (1 - h / (2 * am)) ** ((m - 1) / 2)
    return lower, upper


# ------------------------------------------------- curvature and normals


def _pts(psi, x):
    return psi.points(x)


def graph_curvature(psi: ConvexFunction, x) -> np.ndarray | float:
    """Gauss curvature det(Hess)/(1+|grad|^2)^{(n+2)/2} of the graph at x.

    Raises:
      ConvexityError: determinant below -1e-10 (not noise).
    """
    X = _pts(psi, x)
    det = psi.hessian_det(X)
    det = clamp_det(det)
    G = psi.gradient(X)
    out = det / (1 + np.sum(G * G, axis=-1)) ** ((psi.dim + 2) / 2)
    return float(out) if np.ndim(out) == 0 else out


def clamp_det(det):
    det = np.asarray(det, dtype=float)
    if np.any(det < -CURVATURE_CLAMP):
        raise ConvexityError(f"negative Hessian determinant {float(det.min())}")
    return np.maximum(det, 0.0)


def graph_normal_component(psi: ConvexFunction, x) -> np.ndarray | float:
    """<N, e_{n+1}> magnitude (1+|grad|^2)^{-1/2} of the outer normal."""
    G = psi.gradient(_pts(psi, x))
    out = 1 / np.sqrt(1 + np.sum(G * G, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


# ----------------------------------------------------- rolling function


def _disk_samples(dim: int) -> np.ndarray:
    """Sample points of the closed unit n-ball (n = 1, 2)."""
    if dim == 1:
        return np.linspace(-1, 1, 257)[:, None]
    r = np.linspace(0, 1, 33)
    th = 2 * np.pi * np.arange(33) / 33
    P = r[:, None, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)[None]
    return P.reshape(-1, 2)


_OFFSETS = 10.0 ** -np.arange(1, 13, 0.5)


def _tangency_samples(dim: int) -> np.ndarray:
    """Offsets around the tangency point, geometrically clustered."""
    if dim == 1:
        return np.concatenate([-_OFFSETS, _OFFSETS])[:, None]
    th = 2 * np.pi * np.arange(16) / 16
    D = np.stack([np.cos(th), np.sin(th)], axis=-1)
    return (_OFFSETS[:, None, None] * D[None]).reshape(-1, 2)


def _kinked(psi, X, G):
    """One-sided difference quotients disagree: the normal is not unique."""
    n = psi.dim
    f0 = psi.value(X)
    eta = 1e-6 * (1 + np.linalg.norm(X, axis=-1))
    kink = np.zeros(X.shape[:-1], dtype=bool)
    dirs = [np.eye(n)[i] for i in range(n)]
    if n == 2:
        dirs += [np.array([1.0, 1.0]) / math.sqrt(2), np.array([1.0, -1.0]) / math.sqrt(2)]
    for u in dirs:
        fp = psi.value(X + eta[..., None] * u)
        fm = psi.value(X - eta[..., None] * u)
        jump = (fp - 2 * f0 + fm) / eta
        kink |= jump > 1e-3 * (1 + np.linalg.norm(G, axis=-1))
    return kink


def _patch(dim: int) -> np.ndarray:
    if dim == 1:
        return np.linspace(-1, 1, 41)[:, None] * (2 / 256)
    g = np.linspace(-1, 1, 9)
    return np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2) / 16


def _feasible(psi, X, f0, V, rho, unit, tang):
    """Is the ball of radius rho touching the graph at X inside epi(psi)?

    Samples the projected disk on a fixed grid, around the tangency point,
    and on two successively finer patches around the tightest grid node.
    """
    L = np.sqrt(1 + np.sum(V * V, axis=-1))
    vstar = V / L[:, None]
    vs2 = np.sum(vstar * vstar, axis=-1)
    base = np.sqrt(np.maximum(1 - vs2, 0.0))
    slack = 1e-14 * (1 + np.abs(f0) + rho)

    def margin(S):
        inside = np.sum(S * S, axis=-1) <= 1.0
        S = np.where(inside[..., None], S, vstar[:, None, :])
        D = rho[:, None, None] * (S - vstar[:, None, :])
        lhs = psi.value(X[:, None, :] + D) - f0[:, None]
        s2 = np.sum(S * S, axis=-1)
        root = np.sqrt(np.maximum(1 - s2, 0.0))
        rhs = rho[:, None] * (s2 - vs2[:, None]) / (base[:, None] + root)
        return rhs - lhs + slack[:, None], S

    ok_t, _ = margin(vstar[:, None, :] + tang[None, :, :])
    mg, S = margin(np.broadcast_to(unit, (len(X),) + unit.shape))
    feas = np.all(ok_t >= 0, axis=1) & np.all(mg >= 0, axis=1)
    patch = _patch(psi.dim)
    for scale in (1.0, 0.05):
        worst = S[np.arange(len(X)), np.argmin(mg, axis=1)]
        mg, S = margin(worst[:, None, :] + scale * patch[None])
        feas &= np.all(mg >= 0, axis=1)
    return feas


def rolling_radii(psi: ConvexFunction, X, tol: float = 1e-6) -> np.ndarray:
    """Rolling function at each point of ``X`` (shape ``(m, n)``), by
    vectorized bisection on the ball radius."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = len(X)
    if m == 0:
        return np.zeros(0)
    G = psi.gradient(X)
    f0 = psi.value(X)
    kink = _kinked(psi, X, G)
    unit = _disk_samples(psi.dim)
    tang = _tangency_samples(psi.dim)
    L2 = 1 + np.sum(G * G, axis=-1)
    det = np.maximum(psi.hessian_det(X), 0.0)
    with np.errstate(divide="ignore"):
        bound = np.where(det > 0, L2 ** ((psi.dim + 2) / (2 * psi.dim)) / det ** (1 / psi.dim), np.inf)
    hi = np.where(np.isfinite(bound), 1.05 * bound, 1.0)
    active = ~kink
    for _ in range(60):
        feas = np.zeros(m, dtype=bool)
        if np.any(active):
            feas[active] = _feasible(psi, X[active], f0[active], G[active], hi[active], unit, tang)
        if not np.any(feas):
            break
        hi = np.where(feas, 2 * hi, hi)
    lo = np.zeros(m)
    for _ in range(200):
        todo = active & (hi - lo > tol * np.maximum(lo, tol))
        if not np.any(todo):
            break
        mid = 0.5 * (lo + hi)
        ok = _feasible(psi, X[todo], f0[todo], G[todo], mid[todo], unit, tang)
        idx = np.nonzero(todo)[0]
        lo[idx[ok]] = mid[idx[ok]]
        hi[idx[~ok]] = mid[idx[~ok]]
    return np.where(kink, 0.0, lo)


def rolling_function(psi: ConvexFunction, x, tol: float = 1e-6) -> float:
    """Radius of the largest ball in epi(psi) touching the graph at (x, psi(x));
    0 where the normal is not unique."""
    X = _pts(psi, x).reshape(1, psi.dim)
    return float(rolling_radii(psi, X, tol)[0])


class RollingIntegral(NamedTuple):
    value: float
    error: float
    skipped_nodes: int
    floor_contribution: float


def rolling_weighted_integral(psi: ConvexFunction, alpha: float, spec: QuadratureSpec | None = None,
                              r_floor: float = ROLLING_FLOOR, tol: float = 1e-7,
                              full_output: bool = False):
    """Integral of sqrt(1+|grad psi|^2) r_psi^{-alpha} exp(-psi) for 0 <= alpha < 1.

    Nodes with r_psi below ``r_floor`` are left out; their count and the
    contribution they would have with r = r_floor are reported separately.
    """
    if not 0 <= alpha < 1:
        raise DomainError("alpha must lie in [0, 1)")
    if spec is None:
        spec = QuadratureSpec(dimension=psi.dim, abs_tol=1e-9, rel_tol=1e-6)
    if alpha == 0:
        res = gradient_weighted_integral(psi, spec, full_output=True)
        out = RollingIntegral(res.value, res.error, 0, 0.0)
        return out if full_output else out.value
    spec = spec_for(psi, spec)
    skipped = {"n": 0}

    def base(X):
        Gr = psi.gradient(X)
        return np.sqrt(1 + np.sum(Gr * Gr, axis=-1)) * np.exp(-psi.value(X))

    def g(X):
        r = rolling_radii(psi, X, tol)
        low = r < r_floor
        skipped["n"] += int(low.sum())
        w = base(X)
        return np.where(low, 0.0, w / np.where(low, 1.0, r) ** alpha)

    R = spec.truncation_radius
    bps = list(psi.breakpoints) if psi.dim == 1 and psi.breakpoints else None
    res = integrate(g, Ball(R, (0.0,) * psi.dim), spec, breakpoints=bps, full_output=True)
    floor_part = 0.0
    if skipped["n"]:
        def gs(X):
            r = rolling_radii(psi, X, tol)
            return np.where(r < r_floor, base(X) * r_floor ** -alpha, 0.0)

        floor_part = integrate(gs, Ball(R, (0.0,) * psi.dim), spec, breakpoints=bps)
    gamma_, beta_ = psi.coercive_minorant
    out = RollingIntegral(res.value, res.error + tail_bound(psi.dim, gamma_, beta_, R),
                          skipped["n"], floor_part)
    return out if full_output else out.value
