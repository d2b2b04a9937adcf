"""Chain diagnostics, posterior summaries and held-out predictive scores."""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import models
from .data import Hyperparams, RankingData
from .em import EmConfig, pl_em
from .exceptions import DiagnosticError, DomainError, EvaluationError, UnseenPlayerWarning
from .gibbs import ChainConfig, ChainOutput, run_chain

SUMMARY_QUANTILES = (0.025, 0.5, 0.975)


def autocorrelation(series, lag: int = 1) -> float:
    """Sample autocorrelation at ``lag`` with the biased 1/n covariance estimator.

    Because both numerator and denominator use 1/n, a perfectly alternating
    series of length n gives ``-(n-1)/n`` at lag 1 rather than exactly -1.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DiagnosticError("autocorrelation expects a 1-D series")
    lag = int(lag)
    if lag < 0:
        raise DiagnosticError("lag must be nonnegative")
    if x.size <= lag + 1:
        raise DiagnosticError(f"series of length {x.size} too short for lag {lag}")
    d = x - x.mean()
    denom = float(np.dot(d, d))
    if denom == 0.0 or not np.isfinite(denom):
        raise DiagnosticError("autocorrelation is undefined for a constant series")
    if lag == 0:
        return 1.0
    return float(np.dot(d[:-lag], d[lag:]) / denom)


@dataclass(frozen=True)
class PosteriorSummary:
    names: list[str]
    mean: np.ndarray
    sd: np.ndarray
    quantiles: np.ndarray  # shape (len(SUMMARY_QUANTILES), n_params)
    transform: str

    def as_rows(self):
        for k, name in enumerate(self.names):
            yield (name, self.mean[k], self.sd[k], *self.quantiles[:, k])


def transform_draws(draws, transform: str) -> np.ndarray:
    lam = np.atleast_2d(np.asarray(draws, dtype=float))
    if transform == "identity":
        return lam
    pi = lam / lam.sum(axis=1, keepdims=True)
    if transform == "pi":
        return pi
    if transform == "beta":
        return models.beta_transform(pi)
    raise DomainError(f"unknown transform {transform!r}")


def posterior_summary(chain, transform: str = "identity") -> PosteriorSummary:
    """Per-parameter mean, sd and quantiles of the skills after a per-draw transform.

    ``chain`` is a :class:`ChainOutput` or a (draws x K) array of skills.
    """
    if isinstance(chain, ChainOutput):
        draws, names = chain.skills, [chain.columns[i] for i in chain.skill_columns]
    else:
        draws = np.atleast_2d(np.asarray(chain, dtype=float))
        names = [f"lambda[{k}]" for k in range(draws.shape[1])]
    if draws.shape[0] == 0:
        raise DiagnosticError("cannot summarise an empty chain")
    x = transform_draws(draws, transform)
    if transform != "identity":
        prefix = "pi" if transform == "pi" else "beta"
        names = [prefix + n[len("lambda"):] for n in names]
    return PosteriorSummary(
        names=names,
        mean=x.mean(axis=0),
        sd=x.std(axis=0),
        quantiles=np.quantile(x, SUMMARY_QUANTILES, axis=0),
        transform=transform,
    )


def _fit_draws(fit) -> np.ndarray:
    if isinstance(fit, ChainOutput):
        return fit.skills
    return np.atleast_2d(np.asarray(fit, dtype=float))


def _extend_unseen(draws: np.ndarray, K_needed: int, hp: Hyperparams | None) -> np.ndarray:
    K_fit = draws.shape[1]
    if K_needed <= K_fit:
        return draws
    if hp is None or hp.b <= 0:
        raise EvaluationError(
            f"test data mentions {K_needed - K_fit} player(s) absent from the fit and no "
            "proper prior was given for the prior-mean fallback")
    warnings.warn(f"players {list(range(K_fit, K_needed))} are absent from the fit; "
                  f"using the prior mean {hp.a / hp.b:g}", UnseenPlayerWarning, stacklevel=3)
    fill = np.full((draws.shape[0], K_needed - K_fit), hp.a / hp.b)
    return np.hstack([draws, fill])


def pl_test_loglik(fit, test, hp: Hyperparams | None = None) -> float:
    """Held-out Plackett-Luce log-likelihood.

    A 1-D ``fit`` is a point estimate and the result is the plug-in
    log-likelihood.  A 2-D array (or :class:`ChainOutput`) of draws gives the
    sum over rankings of the log of the draw-averaged ranking probability.
    Players with index >= K of the fit get the prior mean ``a/b`` when ``hp``
    is supplied, else :class:`EvaluationError` is raised.
    """
    if not isinstance(test, RankingData):
        rankings = [list(r) for r in test]
        K = max((max(r) for r in rankings), default=-1) + 1
        test = RankingData(K, rankings)
    draws = _extend_unseen(_fit_draws(fit), test.K, hp)
    if draws.shape[1] > test.K:
        test = RankingData(draws.shape[1], test.rankings)
    per_draw = np.array([models.pl_ranking_log_likelihoods(test, row) for row in draws])
    if per_draw.shape[0] == 1:
        return float(per_draw[0].sum())
    return float(np.sum(logsumexp(per_draw, axis=0) - np.log(per_draw.shape[0])))


def ties_expected_score(skills, theta, i, j):
    """Expected score of ``i`` against ``j``: ``P(win) + 0.5 P(tie)``."""
    win, tie, _ = models.ties_outcome_probabilities(skills[..., i], skills[..., j], theta)
    return win + 0.5 * tie


def _as_games(games):
    g = np.asarray(games, dtype=float).reshape(-1, 3)
    i = g[:, 0].astype(np.int64)
    j = g[:, 1].astype(np.int64)
    if np.any(g[:, :2] != np.stack([i, j], axis=1)) or np.any(i < 0) or np.any(j < 0):
        raise EvaluationError("player ids must be nonnegative integers")
    if np.any(i == j):
        raise EvaluationError("a player cannot play itself")
    if not np.all(np.isin(g[:, 2], (0.0, 0.5, 1.0))):
        raise EvaluationError("scores must be 0, 0.5 or 1")
    return i, j, g[:, 2]


def ties_predict(fit, theta, games, hp: Hyperparams | None = None) -> np.ndarray:
    """Predicted scores for ``(i, j, score)`` games, averaged over draws when ``fit`` is 2-D."""
    i, j, _ = _as_games(games)
    draws = _fit_draws(fit)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size not in (1, draws.shape[0]):
        raise EvaluationError("need one theta per skill draw")
    K_needed = int(max(i.max(initial=-1), j.max(initial=-1))) + 1
    draws = _extend_unseen(draws, K_needed, hp)
    scores = ties_expected_score(draws, theta[:, None], i, j)
    return scores.mean(axis=0)


def ties_predict_mse(fit, theta, games, hp: Hyperparams | None = None) -> float:
    """Mean squared error of the predicted expected score against the observed 1/0.5/0 result."""
    _, _, actual = _as_games(games)
    if actual.size == 0:
        raise EvaluationError("no test games")
    pred = ties_predict(fit, theta, games, hp)
    return float(np.mean((pred - actual) ** 2))


def simulate_pl(skills, n: int, rng: np.random.Generator) -> list[list[int]]:
    """Draw ``n`` full Plackett-Luce rankings (best first).

    Item k finishes at an exponential time with rate ``skills[k]``; sorting
    the arrival times gives a ranking with the Plackett-Luce distribution.
    """
    lam = np.asarray(skills, dtype=float)
    times = rng.exponential(1.0 / lam, size=(n, lam.size))
    return np.argsort(times, axis=1).tolist()


FIG1_SAMPLERS = (("pl_gibbs", "gibbs"), ("gm_mh", "gm_mh"))


def _fig1_replicate(args):
    n, K, a, iterations, burn_in, seq = args
    b = K * a - 1.0
    hp = Hyperparams(a=a, b=b)
    data_seq, *chain_seqs = seq.spawn(1 + len(FIG1_SAMPLERS))
    rng = np.random.Generator(np.random.PCG64(data_seq))
    lam = rng.gamma(a, 1.0 / b, size=K)
    data = RankingData(K, simulate_pl(lam, n, rng))
    cfg = ChainConfig(iterations=iterations, burn_in=burn_in)
    # both chains start at the posterior mode; the M-H proposal is centred on
    # an MM step from the current point and rarely accepts far from the mode
    init = pl_em(data, hp, EmConfig(tol=1e-8)).skills
    out = []
    for (_, kernel), cseq in zip(FIG1_SAMPLERS, chain_seqs):
        chain = run_chain("pl", data, hp, cfg, init=init, kernel=kernel,
                          rng=np.random.Generator(np.random.PCG64(cseq)))
        pi = chain.pi
        acfs = []
        for k in range(K):
            try:
                acfs.append(autocorrelation(pi[:, k], 1))
            except DiagnosticError:
                # a chain that never moved is perfectly autocorrelated
                acfs.append(1.0)
        out.append(float(np.mean(acfs)))
    return out


def fig1_experiment(n_grid=(4, 16, 64, 256), replications: int = 50, K: int = 4, a: float = 5.0,
                    iterations: int = 2500, burn_in: int = 500, seed: int = 0,
                    workers: int | None = None) -> list[dict]:
    """Lag-1 autocorrelation of the PL Gibbs sampler and the joint M-H baseline.

    For each sample size and replicate, skills are drawn from the G(a, Ka-1)
    prior, ``n`` rankings of all K items are simulated, and both samplers are
    run on the same data from the same start at the posterior mode.  The per-replicate value is the lag-1
    autocorrelation of the normalised skills averaged over items.  Returns one
    row per (n, sampler) with the replicate mean and 5%/95% quantiles.
    Replicates use independent streams spawned from ``seed`` so the table
    does not depend on ``workers``.
    """
    n_grid = [int(n) for n in n_grid]
    if not n_grid or min(n_grid) < 1 or replications < 1 or K < 2:
        raise DomainError("fig1_experiment needs a nonempty grid of positive sizes, K >= 2 "
                          "and at least one replicate")
    seqs = np.random.SeedSequence(seed).spawn(len(n_grid) * replications)
    jobs = [(n, K, a, iterations, burn_in, seqs[g * replications + r])
            for g, n in enumerate(n_grid) for r in range(replications)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(_fig1_replicate, jobs, chunksize=4))
    else:
        res = [_fig1_replicate(j) for j in jobs]
    res = np.asarray(res).reshape(len(n_grid), replications, len(FIG1_SAMPLERS))
    rows = []
    for g, n in enumerate(n_grid):
        for s, (name, _) in enumerate(FIG1_SAMPLERS):
            v = res[g, :, s]
            rows.append({
                "n": n,
                "sampler": name,
                "mean_acf": float(v.mean()),
                "q05": float(np.quantile(v, 0.05)),
                "q95": float(np.quantile(v, 0.95)),
            })
    return rows
