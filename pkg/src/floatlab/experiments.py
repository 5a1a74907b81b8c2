"""Convergence harness for the floating-function asymptotics.

D(delta) = int (f - f_delta) is compared with c_{n+1} as(f) delta^{2/(n+2)};
the same limit governs int |psi_delta - psi| exp(-psi). Pointwise rates and
the uniform bound in terms of the rolling function are checked node-wise.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator, RegularGridInterpolator

from .convexfn import ConvexFunction, gradient_weighted_integral, spec_for
from .epigraph import (DomainError, EllipsoidSpec, ROLLING_FLOOR, ellipsoid_cap_bounds, ellipsoid_cap_volume,
                       rolling_radii, rolling_weighted_integral, unit_ball_volume)
from .floating import FloatParams, floating_grid, floating_value
from .numerics import Box, QuadratureSpec, integrate
from .surface import CheckReport, asa

__all__ = [
    "constant_c",
    "uniform_bound_constant",
    "DeltaLadder",
    "GridSpec",
    "DeltaRow",
    "ConvergenceReport",
    "PointwiseRow",
    "PointwiseTable",
    "default_ladder",
    "effective_radius",
    "theorem_ratio",
    "proposition_ratio",
    "pointwise_rate",
    "uniform_bound_check",
    "finiteness_suite",
    "cap_sandwich_check",
]


def constant_c(n: int) -> float:
    """1/2 ((n+2)/vol_n(B))^{2/(n+2)}."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    return 0.5 * ((n + 2) / unit_ball_volume(n)) ** (2 / (n + 2))


def uniform_bound_constant(n: int) -> float:
    """2^{(3n+4)/(n+2)} ((n+2)/vol_n(B))^{2/(n+2)}."""
    return 2 ** ((3 * n + 4) / (n + 2)) * ((n + 2) / unit_ball_volume(n)) ** (2 / (n + 2))


@dataclass(frozen=True)
class DeltaLadder:
    """Geometric ladder from delta_max down to delta_min."""

    delta_max: float
    delta_min: float
    count: int

    def __post_init__(self):
        if not 0 < self.delta_min < self.delta_max:
            raise ValueError("need 0 < delta_min < delta_max")
        if self.count < 3:
            raise ValueError("a ladder needs at least 3 points")

    def values(self) -> np.ndarray:
        return np.geomspace(self.delta_max, self.delta_min, self.count)


def default_ladder(n: int) -> DeltaLadder:
    return DeltaLadder(1e-2, 1e-5, 8) if n == 1 else DeltaLadder(1e-2, 1e-4, 6)


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid with ``count`` nodes per axis on [-half_width, half_width]^n.

    ``half_width=None`` uses :func:`effective_radius`.
    """

    count: int | None = None
    half_width: float | None = None

    def resolve(self, psi: ConvexFunction) -> tuple[list[np.ndarray], np.ndarray]:
        count = self.count or (201 if psi.dim == 1 else 41)
        if count < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        hw = self.half_width or effective_radius(psi)
        axes = [np.linspace(-hw, hw, count) for _ in range(psi.dim)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, psi.dim)
        return axes, pts


def effective_radius(psi: ConvexFunction, level: float = 30.0, directions: int = 64) -> float:
    """Radius beyond which psi exceeds its minimum by at least ``level`` in
    every probed direction, so exp(-psi) is below e^{-level} of its peak."""
    n = psi.dim
    if n == 1:
        U = np.array([[-1.0], [1.0]])
    else:
        th = 2 * np.pi * np.arange(directions) / directions
        U = np.stack([np.cos(th), np.sin(th)], axis=1)
    r = np.geomspace(1e-3, 1e4, 2000)
    vals = psi.value(r[:, None, None] * U[None])
    floor = min(float(vals.min()), float(psi.value(np.zeros((1, n)))[0]))
    above = np.all(vals - floor >= level, axis=1)
    hit = np.argmax(above) if above.any() else len(r) - 1
    return float(r[hit])


# ------------------------------------------------------------- reports


@dataclass
class DeltaRow:
    delta: float
    value: float
    ratio: float
    failed_nodes: int = 0
    excluded_measure: float = 0.0


@dataclass
class ConvergenceReport:
    kind: str
    function: str
    n: int
    rows: list[DeltaRow]
    slope: float
    limit: float
    target: float
    config: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def rel_deviation(self) -> float:
        return abs(self.limit - self.target) / abs(self.target) if self.target else math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rel_deviation"] = self.rel_deviation
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "value", "ratio", "failed_nodes", "excluded_measure"])
        for r in self.rows:
            w.writerow([f"{r.delta:.9g}", f"{r.value:.9g}", f"{r.ratio:.9g}", r.failed_nodes,
                        f"{r.excluded_measure:.9g}"])
        return buf.getvalue()


def _loglog_slope(deltas, values) -> float:
    d, v = np.asarray(deltas), np.asarray(values)
    ok = v > 0
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(d[ok]), np.log(v[ok]), 1)[0])


def _extrapolate(deltas, ratios, n: int, k: int = 4) -> float:
    """Intercept of a linear fit of R against delta^{2/(n+2)} on the k smallest deltas."""
    d, r = np.asarray(deltas), np.asarray(ratios)
    idx = np.argsort(d)[:k]
    return float(np.polyfit(d[idx] ** (2 / (n + 2)), r[idx], 1)[1])


def _gap_interpolant(psi, axes, gaps):
    """Piecewise-cubic monotone (1D) or bilinear (2D) interpolant of the gap;
    NaN in cells touching a failed node."""
    if psi.dim == 1:
        x = axes[0]
        ok = np.isfinite(gaps)
        if ok.sum() < 2:
            return lambda X: np.full(len(X), np.nan)
        pchip = PchipInterpolator(x[ok], gaps[ok], extrapolate=True)
        bad_cells = ~(ok[:-1] & ok[1:])

        def f(X):
            t = X[:, 0]
            cell = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
            return np.where(bad_cells[cell], np.nan, pchip(t))

        return f
    G = gaps.reshape(len(axes[0]), len(axes[1]))
    rgi = RegularGridInterpolator(axes, G, method="linear", bounds_error=False, fill_value=None)
    return lambda X: rgi(X)


def _difference(psi, deltas, grid, params, spec, weight_kind):
    axes, pts = grid.resolve(psi)
    hw = float(axes[0][-1])
    rows = []
    qs = QuadratureSpec(dimension=psi.dim, abs_tol=1e-14, rel_tol=1e-9, max_subdivisions=400_000)
    for delta in deltas:
        p = FloatParams(float(delta), params.cut_volume_rtol, params.search, spec, params.method)
        table = floating_grid(psi, pts, p)
        gaps = np.array([e.gap if e is not None else np.nan for e in table.evaluations])
        interp = _gap_interpolant(psi, axes, gaps)

        def g(X):
            gp = interp(X)
            bad = ~np.isfinite(gp)
            gp = np.where(bad, 0.0, np.maximum(gp, 0.0))
            e = np.exp(-psi.value(X))
            val = -np.expm1(-gp) * e if weight_kind == "f" else gp * e
            return np.where(bad, 0.0, val)

        def excl(X):
            return np.where(np.isfinite(interp(X)), 0.0, np.exp(-psi.value(X)))

        bps = [a for a in axes] if psi.dim == 2 else list(axes[0])
        box = Box((-hw,) * psi.dim, (hw,) * psi.dim)
        D = integrate(g, box, qs, breakpoints=bps)
        failed = len(table.errors)
        measure = integrate(excl, box, qs, breakpoints=bps) if failed else 0.0
        rows.append(DeltaRow(float(delta), D, D / delta ** (2 / (psi.dim + 2)), failed, measure))
    return rows, hw


def _report(kind, psi, ladder, grid, params, spec):
    n = psi.dim
    ladder = ladder or default_ladder(n)
    grid = grid or GridSpec()
    params = params or FloatParams(ladder.delta_max)
    spec = spec_for(psi, spec if spec is not None else params.quad)
    deltas = ladder.values()
    rows, hw = _difference(psi, deltas, grid, params, spec, kind)
    target = constant_c(n) * asa(psi, spec)
    report = ConvergenceReport(
        "theorem" if kind == "f" else "proposition", psi.name, n, rows,
        _loglog_slope(deltas, [r.value for r in rows]),
        _extrapolate(deltas, [r.ratio for r in rows], n), target,
        config={"ladder": asdict(ladder), "grid_count": len(grid.resolve(psi)[0][0]),
                "grid_half_width": hw, "cut_volume_rtol": params.cut_volume_rtol,
                "method": params.method, "abs_tol": spec.abs_tol, "rel_tol": spec.rel_tol,
                "truncation_radius": spec.truncation_radius, "extrapolation_points": 4})
    failed = sum(r.failed_nodes for r in rows)
    if failed:
        report.notes.append(f"{failed} grid evaluations failed; their cells are excluded "
                            "(see excluded_measure per row)")
    return report


def theorem_ratio(psi: ConvexFunction, ladder: DeltaLadder | None = None, grid: GridSpec | None = None,
                  params: FloatParams | None = None, spec: QuadratureSpec | None = None) -> ConvergenceReport:
    """D(delta) = int (exp(-psi) - exp(-psi_delta)) and D/delta^{2/(n+2)} along a ladder."""
    return _report("f", psi, ladder, grid, params, spec)


def proposition_ratio(psi: ConvexFunction, ladder: DeltaLadder | None = None, grid: GridSpec | None = None,
                      params: FloatParams | None = None, spec: QuadratureSpec | None = None) -> ConvergenceReport:
    """int |psi_delta - psi| exp(-psi) over delta^{2/(n+2)} along a ladder."""
    return _report("psi", psi, ladder, grid, params, spec)


# -------------------------------------------------------------- pointwise


class PointwiseRow(NamedTuple):
    delta: float
    gap: float
    ratio: float


@dataclass
class PointwiseTable:
    point: tuple[float, ...]
    det: float
    target: float
    rows: list[PointwiseRow]
    degenerate: bool

    @property
    def last_ratio(self) -> float:
        return self.rows[-1].ratio

    @property
    def rel_deviation(self) -> float:
        return abs(self.last_ratio - self.target) / self.target if self.target > 0 else math.inf

    def to_dict(self) -> dict:
        return {"point": list(self.point), "det": self.det, "target": self.target,
                "degenerate": self.degenerate, "rows": [r._asdict() for r in self.rows]}


def pointwise_rate(psi: ConvexFunction, x, ladder: DeltaLadder | None = None,
                   params: FloatParams | None = None) -> PointwiseTable:
    """(psi_delta(x) - psi(x)) / delta^{2/(n+2)} along a ladder, with the
    limit c_{n+1} det(Hess psi(x))^{1/(n+2)} (0 where the Hessian is singular)."""
    n = psi.dim
    ladder = ladder or default_ladder(n)
    params = params or FloatParams(ladder.delta_max)
    X = psi.points(np.asarray(x, dtype=float)).reshape(1, n)
    det = float(psi.hessian_det(X)[0])
    degenerate = not det > 1e-12
    target = 0.0 if degenerate else constant_c(n) * det ** (1 / (n + 2))
    rows = []
    for d in ladder.values():
        ev = floating_value(psi, X[0], FloatParams(float(d), params.cut_volume_rtol, params.search,
                                                     params.quad, params.method))
        rows.append(PointwiseRow(float(d), ev.gap, float(ev.gap / d ** (2 / (n + 2)))))
    return PointwiseTable(tuple(map(float, X[0])), det, target, rows, degenerate)


# ------------------------------------------------------------ uniform bound


def uniform_bound_check(psi: ConvexFunction, grid, delta: float, params: FloatParams | None = None,
                        r_floor: float = ROLLING_FLOOR) -> CheckReport:
    """Max over grid nodes of gap / (delta^{2/(n+2)} * bound) must not exceed 1,
    with bound = C_n sqrt(1+|grad|^2) / r^{n/(n+2)}. Nodes with r below the
    rolling floor (kinks) are excluded and listed."""
    n = psi.dim
    pts = psi.points(np.asarray(grid, dtype=float)).reshape(-1, n)
    C = uniform_bound_constant(n)
    rep = CheckReport("uniform_bound", 0.0, 1.0, 0.0, relation="le")
    rep.config = {"delta": delta, "constant": C, "r_floor": r_floor, "nodes": len(pts)}
    if delta == 0:
        rep.notes.append("delta = 0: every ratio is 0")
        return rep
    r = rolling_radii(psi, pts)
    keep = r >= r_floor
    excluded = pts[~keep]
    if len(excluded):
        rep.notes.append(f"{len(excluded)} nodes with r below {r_floor:g} excluded")
        rep.details["excluded_nodes"] = excluded.tolist()
    if not keep.any():
        return rep
    delta0 = 1e-3 * float(r[keep].min()) ** ((n + 2) / 2)
    rep.details["delta0_heuristic"] = delta0
    if delta > delta0:
        rep.notes.append(f"delta={delta:g} above the delta0 heuristic {delta0:.3g}")
    params = params or FloatParams(delta)
    table = floating_grid(psi, pts[keep], FloatParams(delta, params.cut_volume_rtol, params.search,
                                                      params.quad, params.method))
    gaps = np.array([e.gap if e is not None else np.nan for e in table.evaluations])
    G = psi.gradient(pts[keep])
    bound = C * np.sqrt(1 + np.sum(G * G, axis=-1)) / r[keep] ** (n / (n + 2))
    ratio = gaps / delta ** (2 / (n + 2)) / bound
    worst = np.nanmax(ratio)
    rep.lhs = float(worst)
    violations = pts[keep][ratio > 1]
    rep.details.update({"max_ratio_over_bound": float(worst), "violations": violations.tolist(),
                        "failed_nodes": len(table.errors)})
    if table.errors:
        rep.notes.append(f"{len(table.errors)} floating evaluations failed")
    return rep


def finiteness_suite(psi: ConvexFunction, spec: QuadratureSpec | None = None,
                     alpha: float | None = None) -> CheckReport:
    """Gradient-weighted and rolling-weighted integrals (alpha = n/(n+2) by
    default): both finite with converged quadrature."""
    n = psi.dim
    alpha = n / (n + 2) if alpha is None else alpha
    if not 0 <= alpha < 1:
        raise DomainError("alpha must lie in [0, 1)")
    gw = gradient_weighted_integral(psi, spec, full_output=True)
    rw = rolling_weighted_integral(psi, alpha, full_output=True)
    rep = CheckReport("finiteness", rw.value, gw.value, 0.0, relation="finite")
    rep.details = {"alpha": alpha, "gradient_weighted": gw.value, "gradient_error": gw.error,
                   "rolling_weighted": rw.value, "rolling_error": rw.error,
                   "skipped_nodes": rw.skipped_nodes, "floor_contribution": rw.floor_contribution}
    probe = psi.points(np.linspace(-3, 3, 61)) if n == 1 else np.stack(
        np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13)), -1).reshape(-1, 2)
    r = rolling_radii(psi, probe.reshape(-1, n))
    rep.details["sampled_r_min"] = float(r.min())
    rep.details["sampled_r_max"] = float(r.max())
    if r.max() <= 1:
        rep.notes.append("sampled r <= 1: rolling-weighted >= gradient-weighted expected")
    elif r[r > 0].min() >= 1:
        rep.notes.append("sampled r >= 1: rolling-weighted <= gradient-weighted expected")
    return rep


def cap_sandwich_check(samples: int = 200, seed: int = 0, max_dim: int = 5) -> CheckReport:
    """Exact ellipsoid cap volumes against the sandwich bounds for random
    semi-axes (dimension 2..max_dim) and heights; lhs counts failures."""
    rng = np.random.default_rng(seed)
    failures = []
    worst = 0.0
    for _ in range(samples):
        m = int(rng.integers(2, max_dim + 1))
        axes = tuple(float(a) for a in rng.uniform(0.2, 3.0, m))
        h = float(rng.uniform(0.0, 1.0) * axes[-1])
        e = EllipsoidSpec(axes)
        v = ellipsoid_cap_volume(e, h)
        lo, hi = ellipsoid_cap_bounds(e, h)
        slack = 1e-12 * max(v, 1e-300)
        if not (lo - slack <= v <= hi + slack):
            failures.append({"axes": axes, "h": h, "exact": v, "bounds": [lo, hi]})
        if hi > 0:
            worst = max(worst, (v - hi) / hi, (lo - v) / hi)
    rep = CheckReport("cap_sandwich", float(len(failures)), 0.0, 0.0, relation="le", absolute=True)
    rep.details = {"failures": failures, "worst_relative_excess": worst}
    rep.config = {"samples": samples, "seed": seed, "max_dim": max_dim}
    return rep
