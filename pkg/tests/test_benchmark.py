import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rarebench.benchmark import (DEFAULT_WEIGHTS, METRIC_NAMES, MetricVector, WeightBounds, WeightVector,
                                 average_local_ranking, cost, global_ranking, local_ranking, rank_models,
                                 read_metric_table, rmse, sample_weight_vectors, scale_metrics,
                                 write_global_ranking, write_report)


def _table(rng, models=("dnn", "gbdt_level", "knn", "rf", "svr")):
    return {m: MetricVector(*rng.uniform(0.01, 5.0, 7)) for m in models}


# --------------------------------------------------------------------------
# rmse and scaling


def test_rmse_examples():
    assert rmse([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert rmse([1, 1], [0, 0]) == 1.0
    assert rmse([0, 0], [0, 2]) == math.sqrt(2)
    with pytest.raises(ValueError):
        rmse([], [])
    with pytest.raises(ValueError):
        rmse([1.0], [1.0, 2.0])


def test_scale_column():
    t = {"a": MetricVector(2, 1, 1, 1, 1, 1, 1), "b": MetricVector(4, 1, 1, 1, 1, 1, 1)}
    s = scale_metrics(t)
    assert (s["a"].rmse, s["b"].rmse) == (0.5, 1.0)


def test_scale_single_model_and_zero_columns():
    with pytest.warns(UserWarning, match="zero for every model"):
        s = scale_metrics({"a": MetricVector(3, 1, 2, 5, 1, 0, 0)})
    assert s["a"].as_array().tolist() == [1, 1, 1, 1, 1, 0, 0]


@given(st.integers(0, 10_000))
def test_scaled_metrics_in_unit_interval(seed):
    s = scale_metrics(_table(np.random.default_rng(seed)))
    M = np.array([v.as_array() for v in s.values()])
    assert M.min() >= 0 and M.max() <= 1
    assert np.all(M.max(axis=0) == 1.0)
    for v in s.values():
        assert 0.0 <= cost(v, DEFAULT_WEIGHTS) <= 1.0 + 1e-15


def test_metric_vector_rejects_negative():
    with pytest.raises(ValueError):
        MetricVector(0, 0, 0, 0, 0, -1e-9, 0)


# --------------------------------------------------------------------------
# cost and ranks


def test_cost_examples():
    ones = MetricVector(*[1.0] * 7)
    assert cost(ones, DEFAULT_WEIGHTS) == pytest.approx(1.0, abs=1e-15)
    selector = WeightVector((1e-300,) * 5 + (1.0, 1e-300))
    m = MetricVector(0.0, 0.0, 0.0, 0.0, 0.0, 0.37, 0.0)
    assert cost(m, selector) == 0.37
    assert cost(MetricVector(*[0.0] * 7), DEFAULT_WEIGHTS) == 0.0


def test_rank_examples():
    assert rank_models({"A": 0.2, "B": 0.5}) == {"A": 1, "B": 2}
    assert rank_models({"A": 0.3, "B": 0.3, "C": 0.1}) == {"A": 2, "B": 2, "C": 1}
    assert rank_models({"B": 0.5, "A": 0.2}) == rank_models({"A": 0.2, "B": 0.5})


def test_average_local_ranking():
    assert average_local_ranking({"I": {"x": 1}, "II": {"x": 3}}) == {"x": 2.0}
    assert average_local_ranking({"I": {"x": 1, "y": 2}, "II": {"x": 1, "y": 2}})["x"] == 1.0
    with pytest.raises(KeyError):
        average_local_ranking({"I": {"x": 1, "y": 2}, "II": {"x": 1}})


def test_weight_sampling_bounds():
    ws = sample_weight_vectors(WeightBounds(), 500, seed=3)
    assert len(ws) == 500
    A = np.array([w.a for w in ws])
    assert np.all((A[:, 0] >= 0.1) & (A[:, 0] <= 0.2))
    assert np.all(A >= np.array(WeightBounds().lo)) and np.all(A <= np.array(WeightBounds().hi))
    assert A[:, 5].max() > 0.4
    fixed = WeightBounds((0.1,) * 7, (0.1,) * 7)
    assert all(w.a == (0.1,) * 7 for w in sample_weight_vectors(fixed, 5))
    capped = WeightBounds.alarm_cap(0.4)
    assert capped.hi[5:] == (0.4, 0.4)
    assert np.array_equal(A, np.array([w.a for w in sample_weight_vectors(WeightBounds(), 500, seed=3)]))


def test_rank_invariant_under_weight_scaling():
    rng = np.random.default_rng(0)
    table = _table(rng)
    for w in sample_weight_vectors(count=20, seed=1):
        assert local_ranking(table, w)[2] == local_ranking(table, w.scaled(3.0))[2]


def test_global_ranking_cases():
    rng = np.random.default_rng(4)
    t1, t2 = _table(rng), _table(rng)
    w = sample_weight_vectors(count=1, seed=0)
    # one dataset and one weight vector reduce to the local ranking
    g = global_ranking({"I": t1}, w)
    assert g == {m: float(r) for m, r in sorted(local_ranking(t1, w[0])[2].items(), key=lambda kv: (kv[1], kv[0]))}
    # with one weight vector the double average is the average local ranking
    per_ds = {ds: local_ranking(t, w[0])[2] for ds, t in (("I", t1), ("II", t2))}
    assert global_ranking({"I": t1, "II": t2}, w) == pytest.approx(average_local_ranking(per_ds))
    ws = sample_weight_vectors(count=30, seed=2)
    assert list(global_ranking({"I": t1, "II": t2}, ws)) == \
        list(global_ranking({"I": t1, "II": t2}, [v.scaled(3.0) for v in ws]))


def test_dominant_model_has_global_rank_one():
    rng = np.random.default_rng(5)
    tables = {}
    for ds in ("I", "II", "III"):
        t = _table(rng, ("a", "b", "c"))
        t["best"] = MetricVector(*(0.5 * min(v.as_array()[j] for v in t.values()) for j in range(7)))
        tables[ds] = t
    g = global_ranking(tables, sample_weight_vectors(count=50, seed=0))
    assert next(iter(g)) == "best" and g["best"] == 1.0
    del tables["II"]["a"]
    with pytest.raises(KeyError):
        global_ranking(tables, sample_weight_vectors(count=2))


# --------------------------------------------------------------------------
# reports


def test_report_bundle_layout(tmp_path):
    table = _table(np.random.default_rng(6))
    ranks = write_report(table, tmp_path)
    with open(tmp_path / "metrics_scaled.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["model", *METRIC_NAMES]
    assert len(rows) == 1 + len(table) and all(len(r) == 8 for r in rows)
    assert read_metric_table(tmp_path / "metrics.csv") == table
    with open(tmp_path / "ranking.csv") as fh:
        ranking = list(csv.DictReader(fh))
    assert [r["model"] for r in ranking] == sorted(ranks, key=lambda m: (ranks[m], m))
    write_global_ranking(global_ranking({"I": table}, [DEFAULT_WEIGHTS]), tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "model,mean_rank"
