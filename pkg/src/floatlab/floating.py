"""Floating functions psi_delta and floating log-concave functions f_delta.

psi_delta(x) = sup_a [<a,x> + b(a)], where b(a) is the offset for which the
cut y = <a,x> + b of epi(psi) has volume delta. The set of admissible (a, b)
is convex, so a -> <a,x> + b(a) is concave and its gradient is x minus the
centroid of the wet region. The maximizing cut is the one whose wet region
has centroid x.

Solvers:
  chord     (1D) the wet interval is [x-w, x+w]; solve for w.
  centroid  (2D) fixed point a <- a + grad psi(x) - grad psi(centroid(a)).
  search    generic grid + golden-section over the slope box.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .convexfn import ConvexFunction, spec_for
from .epigraph import DomainError, RegionError, cap_moments, dry_offset, region_limit
from .numerics import Box, QuadratureSpec, SearchSpec, find_root_monotone, integrate, maximize

__all__ = [
    "FloatParams",
    "FloatingEvaluation",
    "FloatingTable",
    "SearchBoxError",
    "offset_for_volume",
    "floating_value",
    "floating_log_concave",
    "floating_grid",
    "disk_floating_body",
    "segment_area",
]

METHODS = ("auto", "chord", "centroid", "search")


class SearchBoxError(RuntimeError):
    """The slope maximizer stays on the search box boundary after a retry."""


@dataclass(frozen=True)
class FloatParams:
    """Settings for one floating-function evaluation."""

    delta: float
    cut_volume_rtol: float = 1e-10
    search: SearchSpec = field(default_factory=SearchSpec)
    quad: QuadratureSpec | None = None
    method: str = "auto"

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.cut_volume_rtol > 0:
            raise ValueError("cut_volume_rtol must be positive")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


@dataclass(frozen=True)
class FloatingEvaluation:
    point: tuple[float, ...]
    psi: float
    psi_delta: float
    slope: tuple[float, ...]
    cut_volume: float
    method: str = ""
    retried: bool = False

    @property
    def gap(self) -> float:
        return self.psi_delta - self.psi


# --------------------------------------------------------------- offsets


class _Offset(NamedTuple):
    offset: float
    volume: float
    centroid: np.ndarray
    apex: np.ndarray


@lru_cache(maxsize=64)
def _feasibility_volume(psi: ConvexFunction, radius: float) -> float:
    """Volume under the tallest horizontal cut whose wet region stays
    inside the truncation ball."""
    n = psi.dim
    if n == 1:
        ring = np.array([[-radius], [radius]])
    else:
        th = 2 * np.pi * np.arange(256) / 256
        ring = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    M = float(np.min(psi.value(ring)))
    zero = np.zeros(n)
    try:
        return cap_moments(psi, zero, M, rtol=1e-6, limit=4 * radius).volume
    except RegionError:
        return math.inf


def _check_delta(psi: ConvexFunction, delta: float, spec: QuadratureSpec) -> None:
    cap = _feasibility_volume(psi, spec.truncation_radius)
    if delta > 0.1 * cap:
        raise RegionError(f"delta={delta:g} exceeds 10% of the largest cut volume {cap:.6g} "
                          "inside the truncation ball")


def _solve_offset(psi, a, delta, rtol, limit, apex_hint=None) -> _Offset:
    """Newton on V(b)^{2/(n+2)} = delta^{2/(n+2)}, safeguarded by a bracket."""
    n = psi.dim
    p = 2.0 / (n + 2)
    apex, b_dry = dry_offset(psi, a, start=apex_hint, limit=limit)
    target = delta ** p
    lo, hi = 0.0, math.inf
    t = target
    best = None
    for _ in range(200):
        cm = cap_moments(psi, a, b_dry + t, apex, b_dry, rtol=0.1 * rtol, limit=limit,
                         atol=1e-3 * rtol * delta)
        V = cm.volume
        if abs(V - delta) <= rtol * delta:
            return _Offset(b_dry + t, V, cm.centroid, apex)
        if V < delta:
            lo = t
        else:
            hi = t
        best = cm
        if V > 0 and cm.area > 0:
            step = (V ** p - target) / (p * V ** (p - 1) * cm.area)
            tn = t - step
        else:
            tn = math.nan
        if not lo < tn < hi:
            tn = 2 * t if math.isinf(hi) else 0.5 * (lo + hi)
        if math.isfinite(hi) and hi - lo <= 4e-16 * hi:
            break
        t = tn
    return _Offset(b_dry + t, best.volume, best.centroid, apex)


def offset_for_volume(psi: ConvexFunction, slope, delta: float, params: FloatParams | None = None) -> float:
    """Offset b with cap_volume(psi, (slope, b)) = delta (relative tolerance).

    Raises:
      RegionError: delta is not reachable inside the admissible region.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    params = params or FloatParams(delta)
    spec = spec_for(psi, params.quad)
    _check_delta(psi, delta, spec)
    a = np.atleast_1d(np.asarray(slope, dtype=float))
    return _solve_offset(psi, a, delta, params.cut_volume_rtol, region_limit(psi, spec)).offset


# ------------------------------------------------------------- solvers


def _chord_volume(psi, x, w, rtol, atol):
    lo, hi = x - w, x + w
    fl, fh = float(psi.value(np.array([lo]))), float(psi.value(np.array([hi])))
    s = (fh - fl) / (2 * w)
    bps = [c for c in psi.breakpoints if lo < c < hi]
    # the integrand cannot be resolved below roundoff in psi
    atol = max(atol, 64 * np.finfo(float).eps * (abs(fl) + abs(fh)) * 2 * w)
    qs = QuadratureSpec(dimension=1, abs_tol=atol, rel_tol=rtol, max_subdivisions=20000)
    V = integrate(lambda X: np.maximum(fl + s * (X[:, 0] - lo) - psi.value(X), 0.0),
                  Box((lo,), (hi,)), qs, breakpoints=bps or None)
    return V, fl, fh, s


def _chord(psi, x, params, limit) -> FloatingEvaluation:
    """1D: the optimal wet interval is symmetric about x."""
    delta, rtol = params.delta, params.cut_volume_rtol
    xv = float(x[0])
    h0 = float(psi.hessian(x[None])[0, 0, 0])
    # V(w) ~ (2/3) psi'' w^3 near a smooth point; Newton on V^{1/3}
    w = (1.5 * delta / h0) ** (1 / 3) if h0 > 1e-12 else delta ** (1 / 3)
    lo, hi = 0.0, math.inf
    target = delta ** (1 / 3)
    for _ in range(200):
        if abs(xv) + w > limit:
            raise RegionError("chord leaves the admissible region")
        V, fl, fh, s = _chord_volume(psi, xv, w, 0.1 * rtol, 1e-3 * rtol * delta)
        if abs(V - delta) <= rtol * delta:
            break
        if V < delta:
            lo = w
        else:
            hi = w
        dV = w * (float(psi.gradient(np.array([[xv + w]]))[0, 0])
                  - float(psi.gradient(np.array([[xv - w]]))[0, 0]))
        wn = w - (V ** (1 / 3) - target) / (dV / (3 * V ** (2 / 3))) if V > 0 and dV > 0 else math.nan
        if not lo < wn < hi:
            wn = 2 * w if math.isinf(hi) else 0.5 * (lo + hi)
        if math.isfinite(hi) and hi - lo <= 4e-16 * hi:
            break
        w = wn
    psi_x = float(psi.value(x[None])[0])
    return FloatingEvaluation((xv,), psi_x, 0.5 * (fl + fh), (s,), V, "chord")


def _centroid(psi, x, params, limit, iters: int = 40) -> FloatingEvaluation | None:
    """2D: drive the wet-region centroid to x. Returns None on stagnation."""
    delta, rtol = params.delta, params.cut_volume_rtol
    gx = psi.gradient(x[None])[0]
    a = gx.copy()
    apex = x.copy()
    tol = 1e-9 * (1 + np.linalg.norm(x))
    prev = math.inf
    stall = 0
    for _ in range(iters):
        off = _solve_offset(psi, a, delta, rtol, limit, apex_hint=apex)
        apex = off.apex
        miss = np.linalg.norm(off.centroid - x)
        if miss <= tol:
            psi_x = float(psi.value(x[None])[0])
            return FloatingEvaluation(tuple(map(float, x)), psi_x, float(a @ x + off.offset), tuple(a),
                                      off.volume, "centroid")
        stall = stall + 1 if miss > 0.5 * prev else 0
        if stall >= 4:
            return None
        prev = miss
        a = a + gx - psi.gradient(off.centroid[None])[0]
    return None


def _search(psi, x, params, limit) -> FloatingEvaluation:
    delta, rtol = params.delta, params.cut_volume_rtol
    gx = psi.gradient(x[None])[0]
    hw = params.search.half_width or 4 * (1 + float(np.linalg.norm(gx)))

    def objective(a):
        try:
            return float(a @ x) + _solve_offset(psi, a, delta, rtol, limit).offset
        except (RegionError, ValueError):
            return -math.inf

    res = maximize(objective, params.search, center=gx, half_width=hw)
    retried = False
    if res.boundary_hit:
        warnings.warn(f"slope search hit the box boundary at x={x.tolist()}; enlarging", RuntimeWarning)
        retried = True
        res = maximize(objective, params.search, center=res.argmax, half_width=4 * hw)
        if res.boundary_hit:
            raise SearchBoxError(f"slope maximizer on the box boundary at x={x.tolist()}")
    if not math.isfinite(res.value):
        raise RegionError(f"no admissible cut found at x={x.tolist()}")
    a = np.asarray(res.argmax, dtype=float)
    off = _solve_offset(psi, a, delta, rtol, limit)
    psi_x = float(psi.value(x[None])[0])
    return FloatingEvaluation(tuple(map(float, x)), psi_x, float(a @ x + off.offset), tuple(map(float, a)),
                              off.volume, "search", retried)


def floating_value(psi: ConvexFunction, x, params: FloatParams) -> FloatingEvaluation:
    """psi_delta(x) with the maximizing slope and the achieved cut volume.

    Raises:
      RegionError: delta too large for the truncation ball, or x outside it.
      SearchBoxError: the slope search keeps hitting the box boundary.
    """
    spec = spec_for(psi, params.quad)
    _check_delta(psi, params.delta, spec)
    limit = region_limit(psi, spec)
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(psi.dim)
    if np.linalg.norm(x) > limit:
        raise RegionError(f"x={x.tolist()} lies outside the admissible region")
    method = params.method
    if method == "auto":
        method = "chord" if psi.dim == 1 else "centroid"
    if method == "chord":
        if psi.dim != 1:
            raise ValueError("the chord method is one-dimensional")
        return _chord(psi, x, params, limit)
    if method == "centroid":
        ev = _centroid(psi, x, params, limit)
        if ev is not None:
            return ev
        if params.method == "centroid":
            raise SearchBoxError(f"centroid iteration stalled at x={x.tolist()}")
    return _search(psi, x, params, limit)


def floating_log_concave(psi: ConvexFunction, x, params: FloatParams) -> float:
    """f_delta(x) = exp(-psi_delta(x))."""
    return math.exp(-floating_value(psi, x, params).psi_delta)


# ----------------------------------------------------------------- grids


@dataclass
class FloatingTable:
    """Ordered grid evaluations; failed points keep their index in ``errors``."""

    dim: int
    evaluations: list[FloatingEvaluation | None]
    errors: dict[int, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.evaluations)

    def ok(self) -> list[FloatingEvaluation]:
        return [e for e in self.evaluations if e is not None]

    def to_csv(self) -> str:
        n = self.dim
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(n)] + ["psi", "psi_delta"]
                   + [f"slope{i + 1}" for i in range(n)] + ["cutvol"])
        for e in self.ok():
            row = list(e.point) + [e.psi, e.psi_delta] + list(e.slope) + [e.cut_volume]
            w.writerow([f"{v:.9g}" for v in row])
        return buf.getvalue()


def _threads() -> int:
    """Worker cap from FLOATLAB_THREADS (unset: 1, 0: one per CPU)."""
    try:
        k = int(os.environ.get("FLOATLAB_THREADS", "1"))
    except ValueError:
        return 1
    return os.cpu_count() or 1 if k == 0 else max(1, k)


def floating_grid(psi: ConvexFunction, grid, params: FloatParams, threads: int | None = None) -> FloatingTable:
    """floating_value at each grid point (rows of ``grid``), in grid order.

    Per-point failures are recorded in ``errors`` and do not stop the run.
    """
    G = np.asarray(grid, dtype=float).reshape(-1, psi.dim)

    def one(i):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return i, floating_value(psi, G[i], params), None
        except (RegionError, SearchBoxError, ValueError, ArithmeticError) as exc:
            return i, None, f"{type(exc).__name__}: {exc}"

    if len(G):
        # resolve the cached minorant and feasibility volume before any fan-out
        _check_delta(psi, params.delta, spec_for(psi, params.quad))
    threads = threads or _threads()
    if threads > 1 and len(G) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(len(G))))
    else:
        results = [one(i) for i in range(len(G))]
    table = FloatingTable(psi.dim, [None] * len(G))
    for i, ev, err in results:
        table.evaluations[i] = ev
        if err is not None:
            table.errors[i] = err
    return table


# --------------------------------------------------------- disk oracle


def segment_area(r: float, h: float) -> float:
    """Area of the circular segment of height h in a disk of radius r."""
    return r * r * math.acos(1 - h / r) - (r - h) * math.sqrt(max(2 * r * h - h * h, 0.0))


def disk_floating_body(radius: float, delta: float) -> float:
    """Radius of the floating body of a disk: r - h with segment area delta."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    if not 0 <= delta < math.pi * radius ** 2 / 2:
        raise DomainError("delta must lie in [0, area/2)")
    if delta == 0:
        return float(radius)
    h = find_root_monotone(lambda t: segment_area(radius, t) - delta, (0.0, radius), tol=1e-15)
    return radius - h
