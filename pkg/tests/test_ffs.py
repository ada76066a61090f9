import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rarebench.errors import ConfigError, InsufficientFlux
from rarebench.ffs import (BranchConfig, CrossingRecord, InterfaceLadder, collect_initial_crossings,
                           committer_probabilities, grow_branches, initial_flux, run_bgffs, run_sweep,
                           stream, transition_probability, write_forest_csv, write_summary_json)
from rarebench.process import build_model
from rarebench.walk import RandomWalk, gamblers_ruin, walk_committor_closed_form

LADDER = InterfaceLadder((0.0, 5.0, 10.0, 15.0, 20.0))


def _rec(i, parent=None, children=()):
    return CrossingRecord(0, i, np.zeros(1), 0.0, parent, 0, list(children))


def _tree(spec):
    """Build records from ``[(interface, parent_index), ...]``; ids follow list order."""
    recs = []
    for k, (i, parent) in enumerate(spec):
        r = CrossingRecord(k, i, np.zeros(1), 0.0, parent, 0)
        recs.append(r)
        if parent is not None:
            recs[parent].children.append(k)
    return recs


# --------------------------------------------------------------------------
# ladders and configs


def test_ladder_validation():
    assert InterfaceLadder.uniform(830, 430, 4).sign == -1
    assert InterfaceLadder.uniform(0, 20, 4).values == LADDER.values
    with pytest.raises(ConfigError):
        InterfaceLadder((0.0, 5.0, 5.0))
    with pytest.raises(ConfigError):
        InterfaceLadder((1.0,))
    with pytest.raises(ConfigError):
        BranchConfig((2, 0))


def test_initial_flux_substitution():
    assert initial_flux(5, 100.0) == 0.05


# --------------------------------------------------------------------------
# recursion on hand-built trees


def test_transition_probability_examples():
    full = _tree([(0, None), (1, 0), (1, 0), (2, 1), (2, 1), (2, 2), (2, 2)])
    assert transition_probability(full, (2, 2), 2) == 1.0
    one = _tree([(0, None), (1, 0), (2, 1)])
    assert transition_probability(one, (2, 2), 2) == 0.25
    none = _tree([(0, None), (1, 0)])
    assert transition_probability(none, (2, 2), 2) == 0.0


def test_committer_recursion_examples():
    # lambda_{n-1} point with one of two children reaching B
    t = _tree([(0, None), (1, 0), (2, 1)])
    committer_probabilities(t, (2, 2), 2)
    assert t[1].p_B == 0.5
    # children at the next interface with p_B {1/2, 0}
    t = _tree([(0, None), (1, 0), (1, 0), (2, 1)])
    committer_probabilities(t, (2, 2), 2)
    assert [t[1].p_B, t[2].p_B] == [0.5, 0.0]
    assert t[0].p_B == 0.25
    assert t[3].p_B == 1.0


def test_success_fraction_substitution():
    t = _tree([(0, None), (1, 0), (1, 0), (1, 0)])
    committer_probabilities(t, (5,), 1)
    assert t[0].p_B == 3 / 5
    t = _tree([(0, None), (1, 0), (1, 0)])
    committer_probabilities(t, (2,), 1)
    assert t[0].p_B == 1.0


@st.composite
def random_trees(draw):
    n = draw(st.integers(1, 4))
    m = tuple(draw(st.lists(st.integers(1, 3), min_size=n, max_size=n)))
    spec = [(0, None)]
    frontier = [0]
    for i in range(n):
        nxt = []
        for parent in frontier:
            for _ in range(draw(st.integers(0, m[i]))):
                spec.append((i + 1, parent))
                nxt.append(len(spec) - 1)
        frontier = nxt
    return spec, m, n


@given(random_trees())
def test_root_committer_equals_transition_probability(case):
    spec, m, n = case
    tree = _tree(spec)
    committer_probabilities(tree, m, n)
    assert tree[0].p_B == transition_probability(tree, m, n)
    assert all(0.0 <= r.p_B <= 1.0 for r in tree)


# --------------------------------------------------------------------------
# walk system


def test_gamblers_ruin_known_values():
    assert gamblers_ruin(5, 10, 0.5) == 0.5
    r = 0.55 / 0.45
    assert gamblers_ruin(1, 20, 0.45) == pytest.approx((1 - r) / (1 - r**20), rel=1e-12)
    assert walk_committor_closed_form(10, 0, 20, 0.45) == gamblers_ruin(10, 20, 0.45)


def _brute_force_flux(model, ladder, seed, target, block=8192):
    """Independent replay of the flux run: same uniforms, plain python walk."""
    rng = stream(seed, 0, 0)
    z, crossings, steps_in_a = 0.0, 0, 0
    p_up, floor = model.params.p_up, model.params.floor
    while crossings < target:
        for u in rng.random(block):
            prev = z
            z = max(z + 1.0 if u < p_up else z - 1.0, floor)
            if prev <= ladder.values[0]:
                steps_in_a += 1
                if z > ladder.values[0]:
                    crossings += 1
                    if crossings == target:
                        break
            if z >= ladder.values[-1]:
                z = 0.0
    return crossings / steps_in_a


def test_walk_flux_matches_independent_counter():
    model = RandomWalk()
    crossings, r0, t_a = collect_initial_crossings(model, LADDER, stream(9, 0, 0), 200)
    assert len(crossings) == 200
    assert all(x[0] == 1.0 for x, _ in crossings)
    assert r0 == _brute_force_flux(model, LADDER, 9, 200)


def test_walk_never_leaving_basin_raises():
    stuck = RandomWalk(p_up=0.0)
    with pytest.raises(InsufficientFlux):
        collect_initial_crossings(stuck, LADDER, stream(0, 0), 3, max_steps=10_000)


def test_branch_success_fraction_matches_gamblers_ruin():
    model = RandomWalk()
    parent = CrossingRecord(0, 1, np.array([5.0]), 0.0, None, 0, path=(0,))
    kids, failed, unresolved = grow_branches(model, parent, 4000, LADDER, master_seed=3)
    p = len(kids) / 4000
    exact = gamblers_ruin(5, 10, 0.45)
    assert abs(p - exact) < 4 * math.sqrt(exact * (1 - exact) / 4000)
    assert failed + len(kids) == 4000 and unresolved == 0
    assert all(x[0] == 10.0 for x, _, _ in kids)


def test_unresolved_branches_count_as_failures():
    model = RandomWalk(p_up=0.5, floor=2.0)
    parent = CrossingRecord(0, 1, np.array([5.0]), 0.0, None, 0, path=(0,))
    ladder = InterfaceLadder((0.0, 5.0, 1e9))
    kids, failed, unresolved = grow_branches(model, parent, 3, ladder, 0, max_steps=50)
    assert kids == [] and failed == 3 and unresolved == 3


@pytest.fixture(scope="module")
def walk_result():
    return run_bgffs(RandomWalk(), LADDER, BranchConfig.constant(6, 4, n_seeds=8), master_seed=4,
                     response_name="p_up")


def test_forest_structure(walk_result):
    res = walk_result
    by_id = {c.id: c for c in res.forest}
    assert len(by_id) == len(res.forest)
    for c in res.forest:
        assert len(c.children) <= (res.m[c.interface] if c.interface < 4 else 0)
        if c.interface == 0:
            assert c.parent is None
        else:
            parent = by_id[c.parent]
            assert parent.interface == c.interface - 1 and c.id in parent.children
        assert c.x[0] >= LADDER.values[c.interface]
        assert c.response_value == 0.45
    roots = res.crossings_at(0)
    assert [r.p_B for r in roots] == res.p_seeds
    assert res.r_mean == res.r0 * res.p_mean


def test_mean_committor_increases_along_ladder(walk_result):
    means = [np.mean([c.p_B for c in walk_result.crossings_at(i)]) for i in range(5)
             if walk_result.crossings_at(i)]
    assert all(b >= a for a, b in zip(means, means[1:]))


def test_single_seed_mean():
    res = run_bgffs(RandomWalk(), LADDER, BranchConfig.constant(4, 4, n_seeds=1), master_seed=1)
    assert res.p_mean == res.p_seeds[0]


def test_worker_count_does_not_change_forest():
    cfg = BranchConfig.constant(5, 4, n_seeds=4)
    a = run_bgffs(RandomWalk(), LADDER, cfg, 17, jobs=1)
    b = run_bgffs(RandomWalk(), LADDER, cfg, 17, jobs=3)
    assert [(c.id, c.parent, c.interface, c.p_B, float(c.x[0])) for c in a.forest] == \
           [(c.id, c.parent, c.interface, c.p_B, float(c.x[0])) for c in b.forest]
    assert a.r0 == b.r0


def test_sweep_one_result_per_value_and_exports(tmp_path):
    values = [0.0875, 0.09, 0.095, 0.0975, 0.1, 0.1025, 0.105, 0.1075]
    walk_values = [0.40 + 0.01 * k for k in range(len(values))]
    res = run_sweep(RandomWalk(), LADDER, BranchConfig.constant(2, 4, n_seeds=2), 5, "p_up", walk_values)
    assert [r.response_value for r in res] == walk_values
    write_forest_csv(res, tmp_path / "f.csv")
    write_summary_json(res, tmp_path / "s.json")
    header = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert header == "interface_index,crossing_id,parent_id,p_B,z,p_up"
    summary = json.loads((tmp_path / "s.json").read_text())
    assert len(summary) == 8
    assert summary[0]["r_mean"] == summary[0]["r_0"] * summary[0]["p_mean"]


def test_exothermic_branches_stop_at_interfaces():
    model = build_model("exothermic", {"tau": 0.53}, 3.0)
    ladder = InterfaceLadder.uniform(830.0, 400.0, 5)
    crossings, r0, _ = collect_initial_crossings(model, ladder, stream(2, 0), 3, model.steady_state(), 500)
    assert r0 > 0 and all(x[1] < 830.0 for x, _ in crossings)
    parent = CrossingRecord(0, 0, crossings[0][0], crossings[0][1], None, 0, path=(0,))
    kids, failed, _ = grow_branches(model, parent, 4, ladder, 2)
    for x, _, _ in kids:
        assert x[1] <= ladder.values[1]
