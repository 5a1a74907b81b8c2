"""End-to-end acceptance criteria, one test each, at their stated tolerances."""

import math
import time

import numpy as np
import pytest
from scipy.special import erfc

from floatlab.convexfn import Ellipse, catalog, lq_norm_square, quadratic_form
from floatlab.experiments import (DeltaLadder, GridSpec, cap_sandwich_check, pointwise_rate,
                                  proposition_ratio, theorem_ratio, uniform_bound_check)
from floatlab.floating import FloatParams, floating_value
from floatlab.surface import (check_affine_invariance, check_gauge_relation, check_isoperimetric,
                              check_valuation)

CAT = catalog()
C2_SQRT2PI = 1.642325
TWO_SQRT_PI = 2 * math.sqrt(math.pi)


def rel(a, b):
    return abs(a - b) / abs(b)


def test_01_parabola_floating_exactness(verdict):
    t0 = time.perf_counter()
    psi = CAT["parabola"]
    errs = []
    for d in (1e-2, 1e-3, 1e-4):
        ev = floating_value(psi, 0.0, FloatParams(delta=d))
        errs.append(abs(ev.psi_delta - 0.5 * (1.5 * d) ** (2 / 3)))
    slope = floating_value(psi, 1.0, FloatParams(delta=1e-3)).slope[0]
    dt = time.perf_counter() - t0
    ok = max(errs) <= 1e-5 and abs(slope - 1) <= 1e-3 and dt <= 10
    verdict(1, "parabola floating exactness", ok,
            f"max|psi_d(0)-closed form|={max(errs):.2e} slope(1)={slope:.9f} time={dt:.1f}s")


def test_02_theorem_ratio_1d(verdict):
    t0 = time.perf_counter()
    rep = theorem_ratio(CAT["parabola"])
    r4 = theorem_ratio(CAT["parabola"], DeltaLadder(1e-2, 1e-4, 3)).rows[-1]
    dt = time.perf_counter() - t0
    ok = rel(rep.limit, C2_SQRT2PI) <= 1e-2 and rel(r4.ratio, 1.641125) <= 1e-2 and dt <= 60
    verdict(2, "theorem ratio n=1", ok,
            f"limit={rep.limit:.7f} (target {C2_SQRT2PI}) R(1e-4)={r4.ratio:.7f} (target 1.641125) "
            f"time={dt:.1f}s")


@pytest.mark.slow
def test_03_theorem_ratio_2d(verdict):
    t0 = time.perf_counter()
    rep = theorem_ratio(CAT["paraboloid"], DeltaLadder(1e-2, 1e-4, 6), GridSpec(count=41))
    dt = time.perf_counter() - t0
    ok = rel(rep.limit, TWO_SQRT_PI) <= 3e-2 and dt <= 600
    verdict(3, "theorem ratio n=2", ok,
            f"limit={rep.limit:.6f} (target {TWO_SQRT_PI:.6f}) rel_dev={rel(rep.limit, TWO_SQRT_PI):.2e} "
            f"grid=41x41 time={dt:.1f}s")


def test_04_proposition_ratio(verdict):
    rep = proposition_ratio(CAT["parabola"])
    devs = [rel(r.ratio, C2_SQRT2PI) for r in rep.rows]
    ok = max(devs) <= 1e-2
    verdict(4, "proposition ratio constant", ok,
            f"{len(devs)} ladder points, max rel dev from {C2_SQRT2PI} = {max(devs):.2e}")


def test_05_pointwise_rate(verdict):
    smooth = pointwise_rate(CAT["x^2"], 0.0)
    flat = pointwise_rate(CAT["huber"], 1.5)
    ok = (smooth.rows[-1].delta == pytest.approx(1e-5) and rel(smooth.last_ratio, 0.825486) <= 2e-2
          and flat.rows[-1].delta == pytest.approx(1e-5) and flat.last_ratio <= 0.05)
    verdict(5, "pointwise rate", ok,
            f"x^2 at 0: ratio(1e-5)={smooth.last_ratio:.6f} (target 0.825486); "
            f"huber at 1.5 (affine piece): ratio(1e-5)={flat.last_ratio:.4f} <= 0.05")


def test_06_uniform_bound(verdict):
    rep = uniform_bound_check(CAT["parabola"], np.linspace(-2, 2, 81), 1e-4)
    ok = rep.passed and not rep.details["violations"] and rep.config["nodes"] == 81
    verdict(6, "uniform bound", ok,
            f"81 nodes, constant={rep.config['constant']:.6f}, max ratio/bound={rep.lhs:.4f}, "
            f"violations={len(rep.details['violations'])}")


def test_07_valuation(verdict):
    rep = check_valuation(CAT["max(x^2,-x)"], CAT["max(x^2,x)"], tol=1e-3)
    exact = 2 ** (1 / 3) * math.sqrt(math.pi) * (1 + erfc(1.0))
    ok = rep.passed and abs(rep.lhs - exact) <= 1e-3 and abs(rep.rhs - exact) <= 1e-3
    verdict(7, "valuation identity", ok, f"lhs={rep.lhs:.6f} rhs={rep.rhs:.6f} closed form={exact:.6f}")


def test_08_affine_invariance(verdict):
    rng = np.random.default_rng(2024)
    worst, fails = 0.0, 0
    for k in range(20):
        n = 1 + k % 2
        while True:
            A = rng.normal(size=(n, n))
            if np.linalg.cond(A) <= 10 and abs(abs(np.linalg.det(A)) - 1) > 0.1:
                break
        M = rng.normal(size=(n, n))
        psi = quadratic_form(M @ M.T / 2 + 0.3 * np.eye(n))
        rep = check_affine_invariance(psi, A, rng.normal(size=n), tol=5e-3)
        worst = max(worst, rep.rel_gap)
        fails += not rep.passed
    verdict(8, "affine invariance", fails == 0, f"20 random maps, failures={fails}, worst rel gap={worst:.2e}")


def test_09_isoperimetric(verdict):
    a = check_isoperimetric(CAT["x^2"], tol=2e-3)
    b = check_isoperimetric(CAT["paraboloid"], tol=2e-3)
    c = check_isoperimetric(lq_norm_square(4.0, 1.0), tol=2e-3)
    ok = (a.details["equality"] and b.details["equality"] and c.passed and c.rhs - c.lhs > 0
          and abs(b.lhs - 2 * math.pi) <= 2e-3 * 2 * math.pi)
    verdict(9, "isoperimetric inequality", ok,
            f"x^2: {a.lhs:.6f} vs {a.rhs:.6f}; paraboloid: {b.lhs:.6f} vs {b.rhs:.6f}; "
            f"l4 gauge: gap={c.rhs - c.lhs:.4f}")


def test_10_gauge_relation(verdict):
    rep = check_gauge_relation(Ellipse(1.0, 1.0), tol=1e-2)
    asp = rep.details["as_p_body"]
    ok = (rel(rep.lhs, 2 * math.pi) <= 5e-3 and rel(asp, 2 * math.pi) <= 5e-3
          and abs(rep.details["ratio_derivation_final"] - 1) <= 1e-2
          and rep.details["matched"] == ["derivation_final"]
          and any("factor 2" in s for s in rep.notes))
    verdict(10, "gauge relation discriminator", ok,
            f"asa={rep.lhs:.6f} as_2/3={asp:.6f} ratio(derivation final)={rep.details['ratio_derivation_final']:.6f} "
            f"ratio(displayed)={rep.details['ratio_displayed']:.6f}")


def test_11_cap_sandwich(verdict):
    rep = cap_sandwich_check(200, seed=0)
    verdict(11, "cap sandwich", rep.passed and rep.lhs == 0,
            f"200 configurations, failures={int(rep.lhs)}")


@pytest.mark.slow
def test_12_property_suites(verdict):
    rng = np.random.default_rng(7)
    problems = []
    deltas = (1e-4, 1e-3, 1e-2)
    for key, psi in CAT.items():
        n = psi.dim
        pts = rng.uniform(-2, 2, size=(4, n))
        for x in pts:
            vals = [floating_value(psi, x, FloatParams(delta=d)).psi_delta for d in deltas]
            fx = float(psi(x))
            if not (vals[0] <= vals[1] <= vals[2]):
                problems.append(f"{key}: psi_delta not monotone at {x}")
            if vals[0] < fx:
                problems.append(f"{key}: psi_delta < psi at {x}")
            if math.exp(-vals[0]) > math.exp(-fx):
                problems.append(f"{key}: f_delta > f at {x}")
        if n == 1:
            rep = theorem_ratio(psi)
        else:
            rep = theorem_ratio(psi, DeltaLadder(1e-2, 1e-4, 5), GridSpec(count=21))
        D = [r.value for r in rep.rows]
        if not all(a >= b >= 0 for a, b in zip(D, D[1:])):
            problems.append(f"{key}: D(delta) not monotone")
        if abs(rep.slope - 2 / (n + 2)) > 0.05:
            problems.append(f"{key}: log-log slope {rep.slope:.4f}")
    verdict(12, "property suites", not problems,
            f"{len(CAT)} catalog functions; " + ("all properties hold" if not problems else "; ".join(problems)))
