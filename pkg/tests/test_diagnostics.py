from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayesbt import models
from bayesbt.data import Hyperparams, RankingData
from bayesbt.diagnostics import (
    autocorrelation,
    fig1_experiment,
    pl_test_loglik,
    posterior_summary,
    simulate_pl,
    ties_predict,
    ties_predict_mse,
)
from bayesbt.exceptions import DiagnosticError, EvaluationError, UnseenPlayerWarning
from bayesbt.gibbs import ChainConfig, run_chain


def test_acf_lag_zero_and_alternating():
    x = np.array([1.0, 3.0, 2.0, 7.0])
    assert autocorrelation(x, 0) == 1.0
    n = 10
    alt = np.tile([1.0, -1.0], n // 2)
    assert autocorrelation(alt, 1) == pytest.approx(-(n - 1) / n)


def test_acf_iid_near_zero(rng):
    x = rng.normal(size=40_000)
    assert abs(autocorrelation(x, 1)) < 3 / math.sqrt(x.size)


def test_acf_errors():
    with pytest.raises(DiagnosticError):
        autocorrelation(np.ones(10), 1)
    with pytest.raises(DiagnosticError):
        autocorrelation([1.0, 2.0], 1)
    with pytest.raises(DiagnosticError):
        autocorrelation([1.0, 2.0, 3.0], -1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40), st.integers(1, 2))
def test_acf_bounded(xs, lag):
    x = np.array(xs)
    if x.size <= lag + 1 or np.ptp(x) < 1e-6:
        return
    assert -1.0 - 1e-12 <= autocorrelation(x, lag) <= 1.0 + 1e-12


def test_summary_single_row_and_pi(rng):
    s = posterior_summary(np.array([[1.0, 2.0, 3.0]]))
    assert np.all(s.sd == 0) and s.mean.tolist() == [1.0, 2.0, 3.0]
    draws = rng.gamma(2.0, 1.0, (500, 4))
    p = posterior_summary(draws, "pi")
    assert p.mean.sum() == pytest.approx(1.0)
    assert p.names[0] == "pi[0]"
    b = posterior_summary(draws, "beta")
    direct = np.log(draws / draws.sum(axis=1, keepdims=True)) + np.log(4)
    assert np.allclose(b.mean, direct.mean(axis=0))
    assert np.allclose(b.quantiles, np.quantile(direct, (0.025, 0.5, 0.975), axis=0))
    assert len(list(b.as_rows())) == 4


def test_summary_errors():
    with pytest.raises(DiagnosticError):
        posterior_summary(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        posterior_summary(np.ones((2, 3)), "logit")


def test_summary_uses_chain_labels():
    d = RankingData(2, [[0, 1]])
    out = run_chain("pl", d, Hyperparams(2.0, 1.0), ChainConfig(iterations=50), labels=["x", "y"])
    assert posterior_summary(out, "pi").names == ["pi[x]", "pi[y]"]


# ---------------------------------------------------------------- PL held-out likelihood


def test_pl_loglik_uniform_and_pairs():
    assert pl_test_loglik(np.ones(3), [[0, 1, 2]]) == pytest.approx(math.log(1 / 6))
    lam = np.array([1.0, 2.0, 5.0])
    pairs = [[0, 1], [2, 0], [1, 2]]
    expected = sum(math.log(models.bt_win_probability(lam[i], lam[j])) for i, j in pairs)
    assert pl_test_loglik(lam, pairs) == pytest.approx(expected)


def test_pl_loglik_bayes_one_draw_equals_plugin():
    lam = np.array([0.3, 1.2, 2.0])
    test = RankingData(3, [[2, 0, 1], [1, 2]])
    assert pl_test_loglik(lam[None, :], test) == pytest.approx(pl_test_loglik(lam, test))


def test_pl_loglik_monte_carlo_converges():
    a, b = 3.0, 3.0
    test = [[0, 1, 2], [1, 0]]
    lls = []
    for n in (50_000, 100_000, 200_000):
        draws = np.random.default_rng(n).gamma(a, 1 / b, (n, 3))
        lls.append(pl_test_loglik(draws, test))
    assert abs(lls[2] - lls[1]) < 1e-2 and abs(lls[2] - lls[0]) < 2e-2
    # the predictive averages probabilities, so it exceeds the mean log (Jensen)
    draws = np.random.default_rng(0).gamma(a, 1 / b, (20_000, 3))
    per = np.mean([pl_test_loglik(row, test) for row in draws[:2000]])
    assert pl_test_loglik(draws, test) > per


def test_pl_loglik_unseen_players():
    with pytest.warns(UnseenPlayerWarning):
        ll = pl_test_loglik(np.ones(2), [[0, 2, 1]], Hyperparams(2.0, 2.0))
    assert ll == pytest.approx(math.log(1 / 6))
    with pytest.raises(EvaluationError):
        pl_test_loglik(np.ones(2), [[0, 2, 1]])


# ---------------------------------------------------------------- ties prediction


def test_ties_prediction_examples():
    assert ties_predict(np.ones(2), 1.7, [(0, 1, 1.0)])[0] == pytest.approx(0.5)
    lam = np.array([1.0, 3.0])
    p = ties_predict(lam, 1.0 + 1e-12, [(0, 1, 0.0)])[0]
    assert p == pytest.approx(1.0 / 4.0, abs=1e-9)
    assert ties_predict_mse(np.ones(2), 2.0, [(0, 1, 1.0)]) == pytest.approx(0.25)


def test_ties_prediction_bayes_average():
    draws = np.array([[1.0, 2.0], [3.0, 1.0]])
    thetas = np.array([1.5, 2.5])
    one = [ties_predict(draws[k], thetas[k], [(0, 1, 1)])[0] for k in range(2)]
    assert ties_predict(draws, thetas, [(0, 1, 1)])[0] == pytest.approx(np.mean(one))
    with pytest.raises(EvaluationError):
        ties_predict(draws, [1.5, 2.0, 3.0], [(0, 1, 1)])


def test_ties_prediction_errors():
    with pytest.raises(EvaluationError):
        ties_predict(np.ones(2), 1.5, [(0, 0, 1)])
    with pytest.raises(EvaluationError):
        ties_predict(np.ones(2), 1.5, [(0, 1, 0.7)])
    with pytest.raises(EvaluationError):
        ties_predict_mse(np.ones(2), 1.5, np.zeros((0, 3)))
    with pytest.raises(EvaluationError):
        ties_predict(np.ones(2), 1.5, [(0, 3, 1)])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=5), st.floats(1.0001, 50.0),
       st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.sampled_from([0.0, 0.5, 1.0])),
                min_size=1, max_size=6))
def test_ties_scores_in_unit_interval(lam, theta, games):
    K = len(lam)
    games = [(i % K, j % K, s) for i, j, s in games if i % K != j % K]
    if not games:
        return
    pred = ties_predict(np.array(lam), theta, games)
    assert np.all((pred >= 0) & (pred <= 1))
    mse = ties_predict_mse(np.array(lam), theta, games)
    assert 0 <= mse <= 1
    # symmetry: swapping the players complements the expected score
    swapped = ties_predict(np.array(lam), theta, [(j, i, s) for i, j, s in games])
    assert np.allclose(pred + swapped, 1.0)


# ---------------------------------------------------------------- simulation and the mixing study


def test_simulate_pl_first_place_frequencies(rng):
    lam = np.array([1.0, 2.0, 5.0])
    r = np.array(simulate_pl(lam, 30_000, rng))
    assert sorted(r[0].tolist()) == [0, 1, 2]
    freq = np.bincount(r[:, 0], minlength=3) / r.shape[0]
    p = lam / lam.sum()
    assert np.all(np.abs(freq - p) < 4 * np.sqrt(p * (1 - p) / r.shape[0]))


def test_fig1_small_scale_shape_and_stability():
    kw = dict(n_grid=(4, 8), replications=2, iterations=200, burn_in=50, seed=3)
    rows = fig1_experiment(**kw)
    assert len(rows) == 4
    assert {r["sampler"] for r in rows} == {"pl_gibbs", "gm_mh"}
    assert all(r["q05"] <= r["mean_acf"] + 1e-12 <= r["q95"] + 2e-12 for r in rows)
    assert fig1_experiment(**kw) == rows
    assert fig1_experiment(**kw, workers=2) == rows
