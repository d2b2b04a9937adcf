from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import gammaln

from bayesbt import models
from bayesbt.data import (
    GraphData,
    GroupData,
    GroupOutcome,
    HomeCounts,
    Hyperparams,
    PairwiseCounts,
    RankingData,
    TieCounts,
)
from bayesbt.exceptions import ConfigurationError, DomainError, StructureError
from bayesbt.gibbs import (
    ChainConfig,
    ChainState,
    a_log_acceptance,
    bt_gibbs_step,
    bt_lambda_conditional,
    gm_mh_step,
    gm_proposal_parameters,
    graph_lambda_conditional,
    group_gibbs_step,
    group_lambda_conditional,
    home_lambda_conditional,
    home_theta_conditional,
    pl_gibbs_step,
    pl_lambda_conditional,
    pl_stage_rates,
    rescale_step,
    run_chain,
    run_chains,
    sample_a_mh,
    sample_group_winners,
    sample_ties_theta,
    ties_theta_rate,
)

from conftest import batch_means_se, ks_statistic, make_rng, numeric_cdf


def close_in_mc(x, y, k=3.0):
    se = math.hypot(batch_means_se(x), batch_means_se(y))
    return abs(np.mean(x) - np.mean(y)) < k * se


# ---------------------------------------------------------------- conditionals read off the model


def test_bt_conditional_example():
    d = PairwiseCounts.from_matrix([[0, 3], [0, 0]])
    shape, rate = bt_lambda_conditional(d, np.array([2.0]), Hyperparams(1.0, 1.0))
    assert shape[0] == 4.0 and rate[0] == 3.0


def test_bt_latents_only_for_played_pairs(rng):
    d = PairwiseCounts.from_matrix([[0, 1, 0], [2, 0, 0], [0, 0, 0]])
    st = bt_gibbs_step(d, ChainState(np.ones(3)), Hyperparams(1.0, 1.0), rng)
    assert st.z.shape == (1,) and np.all(st.z > 0)


def test_home_theta_conditional_example():
    d = HomeCounts.from_matrices([[0, 5], [0, 0]], [[0, 0], [0, 0]])
    # lambda_0 * Z_01 = 2
    shape, rate = home_theta_conditional(d, np.array([1.0]), np.array([2.0, 1.0]),
                                         Hyperparams(1.0, 1.0, 1.0, 0.0))
    assert (shape, rate) == (6.0, 2.0)


def test_home_at_theta_one_matches_bt_conditionals():
    rng = np.random.default_rng(0)
    a_mat = rng.integers(0, 4, (3, 3))
    b_mat = rng.integers(0, 4, (3, 3))
    np.fill_diagonal(a_mat, 0)
    np.fill_diagonal(b_mat, 0)
    home = HomeCounts.from_matrices(a_mat, b_mat)
    bt = home.fold()
    hp = Hyperparams(2.0, 1.0)
    z_home = rng.gamma(1.0, 1.0, home.n.size)
    # the pair latent of the folded model is the sum of the two venue latents
    key = np.minimum(home.home, home.away) * 3 + np.maximum(home.home, home.away)
    z_bt = np.array([z_home[key == i * 3 + j].sum() for i, j in zip(bt.pair_i, bt.pair_j)])
    s1, r1 = home_lambda_conditional(home, z_home, 1.0, hp)
    s2, r2 = bt_lambda_conditional(bt, z_bt, hp)
    assert np.array_equal(s1, s2) and r1 == pytest.approx(r2)


def test_ties_theta_rate_uses_opponent_skill():
    d = TieCounts.from_matrices([[0, 1], [0, 0]], [[0, 1], [1, 0]])
    z = np.array([2.0, 3.0])  # ordered pairs (0, 1), (1, 0)
    lam = np.array([5.0, 7.0])
    assert ties_theta_rate(d, z, lam) == pytest.approx(2.0 * 7.0 + 3.0 * 5.0)


def test_ties_theta_zero_rate_is_an_error(rng):
    d = TieCounts(2, [], [], None, [], [], None)
    with pytest.raises(DomainError):
        sample_ties_theta(d, np.zeros(0), np.ones(2), 1.5, rng)


def test_group_conditional_example():
    d = GroupData(3, [GroupOutcome((0,), (1,)), GroupOutcome((0, 2), (1,))])
    z = np.array([1.0, 2.0])
    c = np.array([0, 0])
    shape, rate = group_lambda_conditional(d, z, c, Hyperparams(2.0, 1.0))
    assert shape[0] == 4.0 and rate[0] == 4.0


def test_group_winner_choice(rng):
    d = GroupData(4, [GroupOutcome((1,), (0,)), GroupOutcome((0, 2, 3), (1,))] * 20_000)
    lam = np.array([1.0, 5.0, 2.0, 3.0])
    c = sample_group_winners(d, lam, rng)
    assert np.all(c[0::2] == 1)
    counts = np.bincount(c[1::2], minlength=4)[[0, 2, 3]] / 20_000
    expected = np.array([1.0, 2.0, 3.0]) / 6.0
    assert np.all(np.abs(counts - expected) < 4 * np.sqrt(expected * (1 - expected) / 20_000))


def test_pl_stage_count_and_pair_conditionals():
    d = RankingData(4, [[0, 1, 2, 3], [2, 1], [3, 0, 1]])
    assert d.n_stages == 3 + 1 + 2
    assert pl_stage_rates(d, np.ones(4)).tolist() == [4, 3, 2, 2, 3, 2]
    pairs = RankingData(3, [[0, 1], [2, 0], [1, 0]])
    bt = models.rankings_to_pairwise(pairs)
    hp = Hyperparams(1.5, 2.0)
    z = np.array([0.5, 1.0, 2.0])
    s_pl, r_pl = pl_lambda_conditional(pairs, z, hp)
    # the BT pair latent is the sum of the stage latents of that pair's games
    z_bt = np.array([0.5 + 2.0, 1.0])  # pairs (0, 1) and (0, 2)
    s_bt, r_bt = bt_lambda_conditional(bt, z_bt, hp)
    assert np.array_equal(s_pl, s_bt) and r_pl == pytest.approx(r_bt)


def test_graph_conditional_parameters():
    g = GraphData(3, [(0, 1)])
    hp = Hyperparams(2.0, 0.5)
    z = np.array([1.0, 2.0, 3.0])  # pairs (0,1), (0,2), (1,2)
    alpha, beta, gamma = graph_lambda_conditional(g, z, hp)
    assert alpha.tolist() == [2 * (3.0 + 0.5), 2 * (3.0 + 0.5), 2 * 0.5]
    assert beta.tolist() == [0.0, 2 * 1.0, 2 * 5.0]
    assert gamma.tolist() == [2.0 + 1, 2.0 + 0 - 0, 2.0 - 1 - 1]


def test_gm_proposal_is_conditional_at_latent_means():
    d = RankingData(3, [[0, 1, 2], [2, 0]])
    lam = np.array([1.0, 2.0, 3.0])
    hp = Hyperparams(2.0, 1.0)
    s_gm, r_gm = gm_proposal_parameters(d, lam, hp)
    s_pl, r_pl = pl_lambda_conditional(d, 1.0 / pl_stage_rates(d, lam), hp)
    assert np.array_equal(s_gm, s_pl) and r_gm == pytest.approx(r_pl)


# ---------------------------------------------------------------- moves


def test_rescale_keeps_pi(rng):
    lam = rng.gamma(2.0, 1.0, 6)
    new = rescale_step(lam, Hyperparams(2.0, 3.0), rng)
    assert np.allclose(new / new.sum(), lam / lam.sum(), rtol=1e-14, atol=0)
    assert new.sum() != pytest.approx(lam.sum())


def test_a_acceptance_identity_and_k1():
    lam = np.array([0.4, 1.3, 2.2])
    assert a_log_acceptance(2.0, 2.0, lam, 1.5) == 0.0
    assert a_log_acceptance(2.0, 2.0, lam, 1.5, jacobian=False) == 0.0
    b = 4.0
    lr = a_log_acceptance(1.3, 2.9, np.array([1 / b]), b, jacobian=False)
    assert lr == pytest.approx(gammaln(1.3) - gammaln(2.9), abs=1e-12)
    prior = (2.0, 0.5)
    lr = a_log_acceptance(1.3, 2.9, np.array([1 / b]), b, prior=prior, jacobian=False)
    lp = lambda a: (prior[0] - 1) * math.log(a) - prior[1] * a
    assert lr == pytest.approx(lp(2.9) - lp(1.3) + gammaln(1.3) - gammaln(2.9), abs=1e-12)


def _a_chain_final_states(jacobian, n=100_000, steps=400, seed=11):
    rng = make_rng(seed)
    lam = np.array([0.6, 1.1, 2.0])
    b = 1.5
    a = rng.gamma(2.0, 1.0, size=n) + 0.2
    for _ in range(steps):
        a, _ = sample_a_mh(lam, a, b, rng, sigma_a=0.5, jacobian=jacobian)
    s = lam.size * math.log(b) + np.log(lam).sum()
    log_target = lambda x: x * s - lam.size * gammaln(x)
    return a, log_target


def test_a_move_corrected_targets_posterior():
    a, log_target = _a_chain_final_states(jacobian=True)
    cdf = numeric_cdf(log_target, 1e-6, 60.0, log_grid=True)
    assert ks_statistic(a, cdf) < 0.02


def test_a_move_verbatim_targets_density_over_a():
    a, log_target = _a_chain_final_states(jacobian=False)
    cdf_over_a = numeric_cdf(lambda x: log_target(x) - np.log(x), 1e-6, 60.0, log_grid=True)
    cdf = numeric_cdf(log_target, 1e-6, 60.0, log_grid=True)
    assert ks_statistic(a, cdf_over_a) < 0.02
    # the displayed ratio does not leave p(a | lambda) invariant
    assert ks_statistic(a, cdf) > 0.05


def test_a_move_scalar_and_prior(rng):
    a, acc = sample_a_mh(np.array([1.0, 2.0]), 1.5, 1.0, rng, prior=(2.0, 1.0))
    assert isinstance(a, float) and acc in (0, 1)


def test_gm_mh_matches_pl_gibbs():
    d = RankingData(4, [[0, 1, 2, 3], [1, 0, 3, 2], [0, 2, 1], [3, 1]])
    hp = Hyperparams(2.0, 3.0)
    cfg = ChainConfig(iterations=30_000, burn_in=1000, seed=21)
    g = run_chain("pl", d, hp, cfg)
    m = run_chain("pl", d, hp, cfg, kernel="gm_mh")
    assert 0 < m.acceptance_rates()["skills"] < 1
    for k in range(4):
        assert close_in_mc(g.pi[:, k], m.pi[:, k])


def test_gm_mh_step_returns_flag(rng):
    d = RankingData(3, [[0, 1, 2]])
    lam, acc = gm_mh_step(d, np.ones(3), Hyperparams(2.0, 1.0), rng)
    assert lam.shape == (3,) and isinstance(acc, bool)


# ---------------------------------------------------------------- the driver


def test_row_count_and_columns():
    d = PairwiseCounts.from_matrix([[0, 2], [1, 0]])
    out = run_chain("bt", d, Hyperparams(2.0, 1.0), ChainConfig(iterations=10, burn_in=2, thin=2))
    assert out.samples.shape == (4, 2) and out.columns == ["lambda[0]", "lambda[1]"]
    cfg = ChainConfig(iterations=1000, burn_in=100, thin=3, sample_a=True, rescale_enabled=True)
    out = run_chain("ties", TieCounts.from_matrices([[0, 1], [1, 0]], [[0, 1], [1, 0]]),
                    Hyperparams(2.0, 1.0), cfg, labels=["x", "y"])
    assert out.samples.shape == (300, 5)
    assert out.columns == ["lambda[x]", "lambda[y]", "theta", "a", "Lambda"]
    assert np.allclose(out.column("Lambda"), out.skills.sum(axis=1))
    assert np.all(out.column("theta") > 1)


def test_determinism_and_seed_sensitivity():
    d = RankingData(3, [[0, 1, 2], [2, 0]])
    hp = Hyperparams(2.0, 1.0)
    cfg = ChainConfig(iterations=300, seed=5, rescale_enabled=True, sample_a=True)
    a = run_chain("pl", d, hp, cfg)
    b = run_chain("pl", d, hp, cfg)
    c = run_chain("pl", d, hp, ChainConfig(iterations=300, seed=6, rescale_enabled=True, sample_a=True))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_configuration_errors():
    d = PairwiseCounts.from_matrix([[0, 2], [1, 0]])
    with pytest.raises(ConfigurationError):
        run_chain("bt", d, Hyperparams(1.0, 0.0), ChainConfig(iterations=10))
    with pytest.raises(ConfigurationError):
        run_chain("graph", GraphData(2, [(0, 1)]), Hyperparams(2.0, 1.0),
                  ChainConfig(iterations=10, rescale_enabled=True))
    with pytest.raises(ConfigurationError):
        run_chain("bt", d, Hyperparams(2.0, 1.0), ChainConfig(iterations=10), kernel="gm_mh")
    with pytest.raises(StructureError):
        run_chain("pl", d, Hyperparams(2.0, 1.0), ChainConfig(iterations=10))
    with pytest.raises(ConfigurationError):
        ChainConfig(iterations=10, burn_in=10)
    with pytest.raises(ConfigurationError):
        ChainConfig(iterations=10, thin=0)
    with pytest.raises(DomainError):
        run_chain("ties", TieCounts.from_matrices([[0, 1], [1, 0]], [[0, 1], [1, 0]]),
                  Hyperparams(2.0, 1.0), ChainConfig(iterations=10), theta0=1.0)


@pytest.mark.parametrize("model, data", [
    ("bt", PairwiseCounts(3, [], [])),
    ("pl", RankingData(3, [])),
    ("group", GroupData(3, [])),
])
def test_no_data_chain_samples_the_prior(model, data):
    a, b = 3.0, 2.0
    out = run_chain(model, data, Hyperparams(a, b), ChainConfig(iterations=20_000, seed=1))
    x = out.skills[:, 0]
    assert abs(x.mean() - a / b) < 3 * batch_means_se(x)
    sq = (x - a / b) ** 2
    assert abs(sq.mean() - a / b ** 2) < 3 * batch_means_se(sq)


def test_home_prior_only_theta():
    d = HomeCounts(3, [], [], [], [])
    out = run_chain("home", d, Hyperparams(2.0, 1.0, 2.0, 3.0), ChainConfig(iterations=20_000, seed=2))
    th = out.column("theta")
    assert abs(th.mean() - 2 / 3) < 3 * batch_means_se(th)


def test_graph_last_node_alpha_is_prior_only():
    g = GraphData(4, [(0, 1), (2, 3)])
    alpha, _, _ = graph_lambda_conditional(g, np.ones(6), Hyperparams(2.0, 0.7))
    assert alpha[-1] == pytest.approx(2 * 0.7)


def test_block_orders_agree_home():
    d = HomeCounts.from_matrices([[0, 3, 1], [2, 0, 2], [1, 1, 0]], [[0, 1, 2], [1, 0, 0], [2, 1, 0]])
    hp = Hyperparams(2.0, 2.0, 2.0, 2.0)
    kw = dict(iterations=30_000, burn_in=500, seed=3)
    a = run_chain("home", d, hp, ChainConfig(**kw, strict_paper_order=True))
    b = run_chain("home", d, hp, ChainConfig(**kw, strict_paper_order=False))
    assert close_in_mc(a.column("theta"), b.column("theta"))
    assert close_in_mc(a.pi[:, 0], b.pi[:, 0])


def test_ties_exact_and_random_walk_theta_agree():
    w = np.array([[0, 3, 1], [2, 0, 2], [1, 1, 0]])
    t = np.array([[0, 2, 1], [2, 0, 1], [1, 1, 0]])
    d = TieCounts.from_matrices(w, t)
    hp = Hyperparams(2.0, 2.0)
    kw = dict(iterations=40_000, burn_in=1000, seed=4)
    exact = run_chain("ties", d, hp, ChainConfig(**kw))
    rw = run_chain("ties", d, hp, ChainConfig(**kw, theta_mixture_threshold=0, sigma_theta=0.3))
    assert "theta" not in exact.acceptance and rw.acceptance["theta"][1] == kw["iterations"]
    assert close_in_mc(exact.column("theta"), rw.column("theta"))


def test_group_singletons_agree_with_bt():
    w = np.array([[0, 2, 1], [1, 0, 3], [2, 0, 0]])
    bt = PairwiseCounts.from_matrix(w)
    hp = Hyperparams(2.0, 1.0)
    cfg = ChainConfig(iterations=20_000, burn_in=500, seed=9)
    a = run_chain("bt", bt, hp, cfg)
    b = run_chain("group", models.pairwise_to_groups(bt), hp, cfg)
    for k in range(3):
        assert close_in_mc(a.pi[:, k], b.pi[:, k])


def test_run_chains_parallel_matches_serial():
    d = RankingData(3, [[0, 1, 2], [1, 2]])
    hp = Hyperparams(2.0, 1.0)
    cfg = ChainConfig(iterations=200, seed=8, sample_a=True)
    par = run_chains("pl", d, hp, cfg, 3, parallel=True)
    ser = run_chains("pl", d, hp, cfg, 3, parallel=False)
    for p, s in zip(par, ser):
        assert np.array_equal(p.samples, s.samples)
    assert not np.array_equal(par[0].samples, par[1].samples)
    assert [c.metadata["chain"] for c in par] == [0, 1, 2]


def test_pl_and_group_steps_keep_latents(rng):
    d = RankingData(3, [[0, 1, 2]])
    st = pl_gibbs_step(d, ChainState(np.ones(3)), Hyperparams(2.0, 1.0), rng)
    assert st.z.shape == (2,)
    g = GroupData(3, [GroupOutcome((0, 1), (2,))])
    st = group_gibbs_step(g, ChainState(np.ones(3)), Hyperparams(2.0, 1.0), rng)
    assert st.z.shape == (1,) and st.c[0] in (0, 1)
