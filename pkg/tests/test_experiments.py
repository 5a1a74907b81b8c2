import json
import math

import numpy as np
import pytest

from floatlab.convexfn import catalog
from floatlab.epigraph import DomainError
from floatlab.experiments import (ConvergenceReport, DeltaLadder, GridSpec, cap_sandwich_check, constant_c,
                                  default_ladder, finiteness_suite, pointwise_rate, proposition_ratio,
                                  theorem_ratio, uniform_bound_check, uniform_bound_constant)
from floatlab.surface import asa

CAT = catalog()
C2 = 0.5 * 1.5 ** (2 / 3)


def test_constants():
    assert constant_c(1) == pytest.approx(0.655185, abs=1e-6)
    assert constant_c(2) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)
    assert constant_c(1) * (2 / 3) ** (2 / 3) == pytest.approx(0.5)
    assert constant_c(2) * (math.pi / 4) ** 0.5 == pytest.approx(0.5)
    assert uniform_bound_constant(1) == pytest.approx(2 ** (7 / 3) * 1.5 ** (2 / 3), rel=1e-14)
    with pytest.raises(ValueError):
        constant_c(3)


def test_ladder():
    v = DeltaLadder(1e-2, 1e-5, 4).values()
    assert v == pytest.approx([1e-2, 1e-3, 1e-4, 1e-5])
    assert default_ladder(1).count == 8 and default_ladder(2).count == 6
    with pytest.raises(ValueError):
        DeltaLadder(1e-5, 1e-2, 4)
    with pytest.raises(ValueError):
        DeltaLadder(1e-2, 1e-5, 2)


def test_theorem_ratio_parabola():
    mid = theorem_ratio(CAT["parabola"], DeltaLadder(1e-2, 1e-4, 3)).rows[1]
    assert mid.delta == pytest.approx(1e-3)
    x = C2 * 1e-2
    assert mid.ratio == pytest.approx(math.sqrt(2 * math.pi) * -math.expm1(-x) / 1e-2, rel=5e-3)
    assert mid.ratio == pytest.approx(1.636946, rel=5e-3)
    rep = theorem_ratio(CAT["parabola"])
    assert rep.limit == pytest.approx(C2 * math.sqrt(2 * math.pi), rel=1e-3)
    assert rep.target == pytest.approx(constant_c(1) * asa(CAT["parabola"]), rel=1e-12)
    values = [r.value for r in rep.rows]
    assert all(v >= 0 for v in values)
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert abs(rep.slope - 2 / 3) <= 0.05
    for key in ("ladder", "grid_count", "abs_tol", "truncation_radius"):
        assert key in rep.config


def test_proposition_ratio_constant():
    rep = proposition_ratio(CAT["parabola"], DeltaLadder(1e-2, 1e-4, 3))
    for r in rep.rows:
        assert r.ratio == pytest.approx(1.642306, rel=1e-4)
    rep = proposition_ratio(CAT["x^2"], DeltaLadder(1e-2, 1e-5, 6))
    assert rep.limit == pytest.approx(C2 * 2 ** (1 / 3) * math.sqrt(math.pi), rel=1e-3)


def test_proposition_ratio_paraboloid_coarse():
    rep = proposition_ratio(CAT["paraboloid"], DeltaLadder(1e-2, 1e-4, 3), GridSpec(count=15))
    for r in rep.rows:
        assert r.ratio == pytest.approx(2 * math.sqrt(math.pi), rel=2e-2)


def test_theorem_and_proposition_share_limit():
    psi = CAT["x^2/2+x^4/4"]
    a = theorem_ratio(psi, DeltaLadder(1e-2, 1e-5, 6))
    b = proposition_ratio(psi, DeltaLadder(1e-2, 1e-5, 6))
    assert a.limit == pytest.approx(b.limit, rel=2e-2)


def test_report_serialization():
    rep = proposition_ratio(CAT["parabola"], DeltaLadder(1e-2, 1e-4, 3))
    d = json.loads(rep.to_json())
    assert d["kind"] == "proposition" and len(d["rows"]) == 3 and "rel_deviation" in d
    lines = rep.to_csv().splitlines()
    assert lines[0] == "delta,value,ratio,failed_nodes,excluded_measure"
    assert len(lines) == 4
    assert isinstance(rep, ConvergenceReport)


def test_pointwise_rates():
    t = pointwise_rate(CAT["parabola"], 1.3, DeltaLadder(1e-2, 1e-4, 3))
    assert t.last_ratio == pytest.approx(0.655185, rel=1e-2)
    t = pointwise_rate(CAT["x^2"], 0.0)
    assert t.target == pytest.approx(0.655185 * 2 ** (1 / 3), rel=1e-6)
    assert t.rel_deviation <= 2e-2
    t = pointwise_rate(CAT["huber"], 1.5)
    assert t.degenerate and t.target == 0.0
    assert t.last_ratio <= 0.05
    ratios = [r.ratio for r in t.rows]
    assert ratios[-1] < ratios[0]


def test_uniform_bound():
    grid = np.linspace(-2, 2, 81)
    rep = uniform_bound_check(CAT["parabola"], grid, 1e-4)
    assert rep.passed and rep.lhs < 1
    assert rep.config["constant"] == pytest.approx(6.603854, abs=1e-5)
    assert rep.details["violations"] == []
    rep0 = uniform_bound_check(CAT["parabola"], grid, 0.0)
    assert rep0.passed and rep0.lhs == 0.0


def test_uniform_bound_excludes_kinks():
    rep = uniform_bound_check(CAT["max(x^2,-x)"], [-1.0, 0.5, 1.0], 1e-5)
    assert rep.details["excluded_nodes"] == [[-1.0]]
    assert rep.passed


def test_finiteness():
    rep = finiteness_suite(CAT["parabola"])
    assert rep.passed
    d = rep.details
    assert d["alpha"] == pytest.approx(1 / 3)
    assert d["sampled_r_min"] >= 1 - 1e-6
    assert d["rolling_weighted"] <= d["gradient_weighted"]
    rep = finiteness_suite(CAT["parabola"], alpha=0.0)
    assert rep.lhs == pytest.approx(rep.rhs)
    with pytest.raises(DomainError):
        finiteness_suite(CAT["parabola"], alpha=1.0)


def test_cap_sandwich():
    rep = cap_sandwich_check(200, seed=0)
    assert rep.passed and rep.lhs == 0
    assert rep.details["worst_relative_excess"] <= 0


def test_determinism():
    a = proposition_ratio(CAT["huber"], DeltaLadder(1e-2, 1e-3, 3), GridSpec(count=41))
    b = proposition_ratio(CAT["huber"], DeltaLadder(1e-2, 1e-3, 3), GridSpec(count=41))
    assert a.to_json() == b.to_json()
