import math

import numpy as np
import pytest

from powercpd.edcost import (build_probe_grid, check_superadditivity, default_num_probes, ed_cost_model,
                             empirical_cdf_at, probe_probabilities)

from conftest import pareto_series


def recount_cost(y, probes, start, end, n, augmented=False):
    """Literal formula on the raw segment, independent of the prefix tables."""
    seg = np.asarray(y[start:end])
    ell = seg.size
    total = 0.0
    for t in probes:
        F = (np.sum(seg < t) + 0.5 * np.sum(seg == t)) / ell
        for f in (F, 1 - F):
            if f > 0:
                total += ell * f * math.log(f)
    cost = -(2 * math.log(2 * n - 1) / len(probes)) * total
    return cost + (math.log(ell) if augmented else 0.0)


def test_probe_probabilities_k2():
    p = probe_probabilities(13, 2)
    assert p == pytest.approx([1 / 6, 5 / 6], rel=1e-14)


@pytest.mark.parametrize("n,K", [(10, 3), (600, 25), (50, 1)])
def test_middle_probe_is_median(n, K):
    assert probe_probabilities(n, K)[(K - 1) // 2] == pytest.approx(0.5, abs=1e-15)


def test_default_num_probes():
    assert default_num_probes(600) == 26
    assert default_num_probes(3) == 3


def test_grid_validation():
    with pytest.raises(ValueError):
        build_probe_grid([1.0, 2.0], K=3)
    with pytest.raises(ValueError):
        build_probe_grid([1.0, 2.0], K=0)
    with pytest.raises(ValueError):
        build_probe_grid([])


def test_grid_invariants(rng):
    y = pareto_series(rng, 80)
    g = build_probe_grid(y)
    assert np.all(np.diff(g.probes) >= 0)
    assert np.all(np.diff(g.below, axis=1) >= 0)
    assert np.all(g.below[:, -1] + g.tied[:, -1] <= g.n)
    # nearest-rank: every probe is a data value
    assert set(g.probes) <= set(y)


def test_empirical_cdf_ties_convention():
    g = build_probe_grid([5.0, 10.0, 15.0], K=1)
    assert g.probes[0] == 10.0
    assert empirical_cdf_at(g, 0, 0, 3) == 0.5
    assert empirical_cdf_at(g, 0, 0, 1) == 1.0   # probe above segment max
    assert empirical_cdf_at(g, 0, 2, 3) == 0.0   # probe below segment min
    with pytest.raises(IndexError):
        empirical_cdf_at(g, 1, 0, 3)
    with pytest.raises(IndexError):
        empirical_cdf_at(g, 0, 2, 2)


def test_hand_evaluated_three_point_costs():
    model = ed_cost_model([5.0, 10.0, 15.0], K=1)
    # probe 10 sits strictly outside the singletons 5 and 15
    assert model.cost(0, 1) == 0.0
    assert model.cost(2, 3) == 0.0
    # tied singleton: F = 0.5 contributes 2 ln 5 ln 2
    assert model.cost(1, 2) == pytest.approx(2.2311547025799614, rel=1e-13)
    assert model.cost(0, 3) == pytest.approx(6.693464107739884, rel=1e-13)


def test_constant_segment_zero_cost():
    y = np.array([1.0] * 5 + [100.0] * 5)
    model = ed_cost_model(y, K=2)
    assert set(model.grid.probes) == {1.0, 100.0} or len(set(model.grid.probes)) <= 2
    y = np.array([1.0, 2.0, 3.0, 50.0, 50.0, 50.0, 98.0, 99.0, 100.0])
    model = ed_cost_model(y, K=2)
    # segment 50,50,50 lies strictly between the two tail probes
    assert model.grid.probes[0] < 50 < model.grid.probes[1]
    assert model.cost(3, 6) == 0.0


def test_prefix_tables_match_recount(rng):
    for trial in range(10):
        n = int(rng.integers(5, 120))
        y = np.round(pareto_series(rng, n), 1 if trial % 2 else 6)  # some ties
        model = ed_cost_model(y)
        aug = model.with_augmentation(True)
        for _ in range(100):
            s = int(rng.integers(0, n))
            t = int(rng.integers(s + 1, n + 1))
            ref = recount_cost(y, model.grid.probes, s, t, n)
            assert model.cost(s, t) == pytest.approx(ref, rel=1e-9, abs=1e-12)
            assert aug.cost(s, t) == pytest.approx(recount_cost(y, model.grid.probes, s, t, n, True),
                                                   rel=1e-9, abs=1e-12)


def test_cost_nonnegative_and_zero_iff_degenerate(rng):
    y = np.round(pareto_series(rng, 60), 0)
    model = ed_cost_model(y)
    g = model.grid
    for s in range(0, 60, 3):
        for t in range(s + 1, 61, 5):
            c = model.cost(s, t)
            assert c >= 0
            F = [empirical_cdf_at(g, k, s, t) for k in range(g.K)]
            assert (c == 0) == all(f in (0.0, 1.0) for f in F)


def test_rank_invariance_under_cubing(rng):
    y = pareto_series(rng, 200)
    a, b = ed_cost_model(y), ed_cost_model(y**3)
    for _ in range(200):
        s = int(rng.integers(0, 199))
        t = int(rng.integers(s + 1, 201))
        assert a.cost(s, t) == b.cost(s, t)


def test_superadditivity(rng):
    y = pareto_series(rng, 300)
    model = ed_cost_model(y)
    assert check_superadditivity(model, rng, 2000) == 0
    # the log-length augmentation is not superadditive
    assert check_superadditivity(model.with_augmentation(True), rng, 2000) > 0
