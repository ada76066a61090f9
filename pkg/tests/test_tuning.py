import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rarebench.dataset import TabularDataset
from rarebench.errors import ConfigError
from rarebench.tuning import (DEFAULT_SPACES, Categorical, HyperparamSpace, IntRange, RealRange, SearchConfig,
                              cross_validate, default_space, kfold_split, read_trials_csv, search,
                              write_trials_csv)


def _line_data(n=60):
    x = np.linspace(0, 1, n)
    return TabularDataset(x ** 2, x[:, None], ["x"], {"x": "continuous"})


# --------------------------------------------------------------------------
# folds


def test_nine_rows_three_folds():
    folds = kfold_split(9, 3, seed=0)
    assert [len(f) for f in folds] == [3, 3, 3]
    assert sorted(np.concatenate(folds).tolist()) == list(range(9))


@given(st.integers(2, 200), st.integers(2, 10), st.integers(0, 99))
def test_folds_partition_and_balance(n, k, seed):
    if n < k:
        with pytest.raises(ValueError):
            kfold_split(n, k, seed)
        return
    folds = kfold_split(n, k, seed)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert sorted(np.concatenate(folds).tolist()) == list(range(n))
    assert all(np.array_equal(a, b) for a, b in zip(folds, kfold_split(n, k, seed)))


# --------------------------------------------------------------------------
# cross-validation


def test_constant_mean_fold_scores():
    # fold targets (0,0,0), (0.5,0.5,0.5), (1,1,1): held-out fold 1 sees a training mean of 0.75
    y = np.repeat([0.0, 0.5, 1.0], 3)
    data = TabularDataset(y, np.arange(9.0)[:, None], ["x"], {"x": "continuous"})
    folds = [np.arange(0, 3), np.arange(3, 6), np.arange(6, 9)]
    mean, scores = cross_validate("mean", {}, data, folds)
    assert scores == pytest.approx([0.75, 0.0, 0.75], abs=1e-15)
    assert mean == pytest.approx(0.5, abs=1e-15)


def test_duplicated_rows_score_zero():
    x = np.linspace(0, 1, 10)
    data = TabularDataset(np.tile(x, 2), np.tile(x, 2)[:, None], ["x"], {"x": "continuous"})
    mean, scores = cross_validate("knn", {"k": 1}, data, [np.arange(10), np.arange(10, 20)])
    assert mean == 0.0 and scores == [0.0, 0.0]


def test_failed_fold_scores_infinity():
    data = _line_data(12)
    with pytest.warns(UserWarning, match="fold failed"):
        mean, scores = cross_validate("knn", {"k": 50}, data, kfold_split(12, 3))
    assert math.isinf(mean) and all(math.isinf(s) for s in scores)


# --------------------------------------------------------------------------
# search


def test_argmin_and_failed_trials_never_win(tmp_path):
    data = _line_data()
    space = HyperparamSpace({"k": Categorical((1000, 30, 1))})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = search("knn", space, data, SearchConfig(budget=3, sampler="grid", k=3, seed=1))
    scores = [t.mean_rmse for t in res.trials]
    assert math.isinf(scores[0]) and scores[2] < scores[1]
    assert res.best_params == {"k": 1} and res.best_index == 2
    assert res.t_hyper > 0
    for t in res.trials[1:]:
        assert t.mean_rmse == float(np.mean(t.fold_scores))
    write_trials_csv(res, tmp_path / "trials.csv")
    assert (tmp_path / "trials.csv").read_text().splitlines()[0] == "trial,params_json,mean_rmse,wall_time_s"
    rows = read_trials_csv(tmp_path / "trials.csv")
    assert [r["mean_rmse"] for r in rows] == scores
    assert min(rows, key=lambda r: (r["mean_rmse"], r["trial"]))["trial"] == res.best_index


def test_single_candidate_wins():
    res = search("tree", default_space("tree"), _line_data(), SearchConfig(budget=1))
    assert res.best_index == 0 and len(res.trials) == 1


def test_ties_go_to_earliest_trial():
    space = HyperparamSpace({"k": Categorical((3, 3))})
    res = search("knn", space, _line_data(), SearchConfig(budget=2, sampler="grid"))
    assert res.trials[0].mean_rmse == res.trials[1].mean_rmse and res.best_index == 0


def test_all_failed_raises():
    space = HyperparamSpace({"k": Categorical((500,))})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(RuntimeError):
            search("knn", space, _line_data(), SearchConfig(budget=1))


def test_search_is_deterministic_and_job_independent():
    data = _line_data()
    cfg = SearchConfig(budget=4, seed=7)
    a = search("gbdt_level", HyperparamSpace({"eta": RealRange(0.01, 0.5, log=True)}, {"n_estimators": 10}),
               data, cfg)
    b = search("gbdt_level", HyperparamSpace({"eta": RealRange(0.01, 0.5, log=True)}, {"n_estimators": 10}),
               data, SearchConfig(budget=4, seed=7, jobs=2))
    assert [(t.params, t.fold_scores) for t in a.trials] == [(t.params, t.fold_scores) for t in b.trials]
    assert a.best_params == b.best_params


# --------------------------------------------------------------------------
# spaces


def test_space_round_trip_and_samples_in_range():
    for kind, space in DEFAULT_SPACES.items():
        back = HyperparamSpace.from_dict(space.to_dict())
        assert back.to_dict() == space.to_dict()
        rng = np.random.default_rng(0)
        for _ in range(20):
            params = space.sample(rng)
            for name, dom in space.domains.items():
                if isinstance(dom, (IntRange, RealRange)):
                    assert dom.lo <= params[name] <= dom.hi
                else:
                    assert params[name] in [list(v) if isinstance(v, tuple) else v for v in dom.values]


def test_grid_is_product():
    space = HyperparamSpace({"a": IntRange(1, 3), "b": Categorical(("x", "y"))}, {"c": 0})
    grid = space.grid(3)
    assert len(grid) == 6 and all(g["c"] == 0 for g in grid)


def test_invalid_spaces_and_configs():
    with pytest.raises(ConfigError):
        IntRange(3, 1)
    with pytest.raises(ConfigError):
        RealRange(0.0, 1.0, log=True)
    with pytest.raises(ConfigError):
        Categorical(())
    with pytest.raises(ConfigError):
        SearchConfig(budget=0)
    with pytest.raises(ConfigError):
        SearchConfig(k=1)
    with pytest.raises(ConfigError):
        default_space("catboost")
