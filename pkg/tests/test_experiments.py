import itertools
import json
import math
from fractions import Fraction

import pytest

from torsorcount.experiments import (
    ExperimentPlan,
    FitError,
    PlanError,
    congruence_compatible,
    run_equidist,
    run_flat_complement,
    run_manin,
    run_plan,
    two_term_fit,
    write_outputs,
)
from torsorcount.torsor_points import CountQuery, count

from conftest import fan_data


def test_plan_validation():
    with pytest.raises(PlanError, match="increasing"):
        ExperimentPlan("p1", "manin", (100, 10))
    with pytest.raises(PlanError, match="unknown experiment kind"):
        ExperimentPlan("p1", "bogus", (10,))
    with pytest.raises(PlanError, match="missing parameter"):
        ExperimentPlan("p1", "flat_complement", (10,))
    with pytest.raises(PlanError, match="unknown plan field"):
        ExperimentPlan.from_dict({"fan": "p1", "kind": "manin", "schedule": [4], "colour": 1})
    with pytest.raises(PlanError, match="missing field"):
        ExperimentPlan.from_dict({"fan": "p1", "kind": "manin"})


def test_plan_load(tmp_path):
    p = tmp_path / "plan.json"
    p.write_text("{oops")
    with pytest.raises(PlanError, match="JSON"):
        ExperimentPlan.load(p)
    p.write_text(json.dumps({"fan": "p1", "kind": "manin", "schedule": [10, 100]}))
    assert ExperimentPlan.load(p).schedule == (10, 100)


def test_two_term_fit_recovers_exact_coefficients():
    sched = [10**3, 10**4, 10**5, 10**6]
    counts = [0.3 * B * math.log(B) + 0.2 * B for B in sched]
    C1, C2, res = two_term_fit(sched, counts, 2)
    assert abs(C1 - 0.3) < 1e-9 and abs(C2 - 0.2) < 1e-9 and res < 1e-9
    with pytest.raises(FitError):
        two_term_fit(sched[:2], counts[:2], 2)


def test_manin_p1_small():
    rep = run_manin(fan_data("p1"), [10**4], fit=False)
    total = rep.rows[0]
    assert total.count == 6087
    # kappa is truncated at p <= 10^4, a relative bias of about 1/(P log P)
    assert abs(total.reference / (10**4 * 6 / math.pi**2) - 1) < 2e-5
    assert abs(total.ratio - 1) < 0.002


def test_manin_needs_three_points_to_fit():
    with pytest.raises(FitError):
        run_manin(fan_data("p1"), [10, 100])


def test_equidist_l1_matches_manin_per_cone():
    for name in ("p1", "p2", "f1"):
        fd = fan_data(name)
        sched = [50, 400, 2000]
        man = run_manin(fd, sched, fit=False)
        for s in range(len(fd.cones)):
            eq = run_equidist(fd, sched, cone=s)
            per_cone = [r.count for r in man.rows if r.param == f"cone{s}"]
            assert [r.count for r in eq.rows] == per_cone


def test_equidist_empty_class():
    rep = run_equidist(fan_data("p1"), [100, 1000], [(2, (0, 0))])
    assert [r.count for r in rep.rows] == [0, 0]
    assert rep.notes and "no coprime point" in rep.notes[0]


def test_congruence_additivity():
    for name, l in (("p1", 2), ("p1", 3), ("p2", 2), ("f1", 2)):
        fd = fan_data(name)
        B = 1000
        for cone in range(len(fd.cones)):
            full = run_equidist(fd, [B], cone=cone).rows[0].count
            parts = run_equidist(fd, [B], [(l, xi) for xi in itertools.product(range(l), repeat=fd.n)], cone)
            assert parts.rows[0].count == full


def test_congruence_compatible():
    P1, PP = fan_data("p1"), fan_data("p1xp1")
    assert not congruence_compatible(P1, 2, (0, 0))
    assert congruence_compatible(P1, 4, (2, 1))
    assert not congruence_compatible(P1, 6, (3, 3))
    assert congruence_compatible(PP, 2, (0, 1, 0, 1))
    assert not congruence_compatible(PP, 2, (0, 0, 1, 1))


def test_equidist_p1_against_box_oracle():
    import oracles

    fd = fan_data("p1")
    rep = run_equidist(fd, [10**4], [(2, (1, 0))], 0)
    pts = oracles.naive_box_points(fd.fan, 10**4, 0, [1])
    assert rep.rows[0].count == sum(1 for X in pts if X[0] % 2 == 1 and X[1] % 2 == 0) == 1037


def test_flat_complement_runner():
    rep = run_flat_complement(fan_data("p1"), [4, 100], 1)
    assert rep.rows[0].count == 3
    assert rep.rows[1].count == count(fan_data("p1"), CountQuery(100)) - sum(
        1 for a in range(1, 11) for b in range(1, 11) if min(a, b) >= math.log(100)
        and max(a, b) <= 10
    )


def _plans(tmp_path):
    return [
        {"fan": "p2", "kind": "manin", "schedule": [100, 1000, 5000]},
        {"fan": "p1", "kind": "equidist", "schedule": [100, 1000], "params": {"l": 3, "xi": [1, 2], "lambda": ["1/2"]}},
        {"fan": "p1xp1", "kind": "flat_complement", "schedule": [100, 1000], "params": {"A": 1}},
        {"fan": "p2", "kind": "geom_sieve", "schedule": [100, 1000], "params": {"f": "X0", "g": "X1", "N": [2, 5]}},
        {"fan": "p2", "kind": "subvariety", "schedule": [100, 1000], "params": {"phi": "X0 - X1"}},
        {"fan": "p1", "kind": "prime_section", "schedule": [100, 1000], "params": {"s": "X0 + X1"}},
    ]


def test_every_kind_runs_and_is_deterministic(tmp_path):
    for k, d in enumerate(_plans(tmp_path)):
        plan = ExperimentPlan.from_dict(d)
        a = write_outputs(run_plan(plan), tmp_path / f"a{k}")
        b = write_outputs(run_plan(plan, workers=2), tmp_path / f"b{k}")
        for x, y in zip(a, b):
            assert x.read_bytes() == y.read_bytes()
        rows = a[0].read_text()
        assert rows.splitlines()[0] == "B,param,count,reference,ratio"
        summary = json.loads(a[1].read_text())
        assert summary["kind"] == d["kind"]
        assert summary["constants"]["plan"]["fan"] == d["fan"]


def test_summary_echoes_exact_alpha():
    rep = run_manin(fan_data("p2"), [10, 100, 1000])
    d = rep.to_dict()
    assert d["constants"]["alpha"] == {"exact": "1/3", "decimal": 1 / 3}
    assert d["fit"]["C1"] is not None


def test_equidist_prediction_uses_box_volume():
    fd = fan_data("p1")
    full = run_equidist(fd, [1000], cone=0)
    half = run_equidist(fd, [1000], cone=0, lam=[Fraction(1, 2)])
    assert abs(half.predicted - full.predicted / 2) < 1e-15
