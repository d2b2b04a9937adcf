"""Outcome probabilities, log-likelihoods, priors and reparameterisations.

All log-likelihoods are evaluated in log space.  Every model except the
random-graph model is invariant to a global rescaling of the skills.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .data import (
    ChoiceData,
    GraphData,
    GroupData,
    GroupOutcome,
    HomeCounts,
    Hyperparams,
    PairwiseCounts,
    RankingData,
    TieCounts,
    as_skills,
)
from .exceptions import DegenerateComparisonError, DomainError, StructureError


def _positive_scalar(x, name):
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise DomainError(f"{name} must be positive and finite, got {x}")
    return x


def bt_win_probability(lambda_i: float, lambda_j: float) -> float:
    """Probability that a player of skill ``lambda_i`` beats one of skill ``lambda_j``."""
    li = _positive_scalar(lambda_i, "lambda_i")
    lj = _positive_scalar(lambda_j, "lambda_j")
    return li / (li + lj)


def bt_log_likelihood(data: PairwiseCounts, skills) -> float:
    lam = as_skills(skills, data.K)
    return float(np.dot(data.wins, np.log(lam))
                 - np.dot(data.pair_n, np.log(lam[data.pair_i] + lam[data.pair_j])))


def home_log_likelihood(data: HomeCounts, skills, theta: float) -> float:
    lam = as_skills(skills, data.K)
    theta = _positive_scalar(theta, "theta")
    return float(data.c * np.log(theta) + np.dot(data.wins, np.log(lam))
                 - np.dot(data.n, np.log(theta * lam[data.home] + lam[data.away])))


def ties_outcome_probabilities(lambda_i, lambda_j, theta):
    """Return ``(P(i beats j), P(i ties j), P(j beats i))`` under the Rao-Kupper model."""
    li = np.asarray(lambda_i, dtype=float)
    lj = np.asarray(lambda_j, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 1):
        raise DomainError("tie parameter theta must exceed 1")
    d1 = li + theta * lj
    d2 = theta * li + lj
    win = li / d1
    loss = lj / d2
    tie = (theta * theta - 1.0) * li * lj / (d1 * d2)
    return win, tie, loss


def ties_log_likelihood(data: TieCounts, skills, theta: float) -> float:
    lam = as_skills(skills, data.K)
    theta = float(theta)
    if not np.isfinite(theta) or theta <= 1:
        raise DomainError(f"tie parameter theta must exceed 1, got {theta}")
    ll = np.dot(data.s, np.log(lam[data.s_i]) - np.log(lam[data.s_i] + theta * lam[data.s_j]))
    if data.T:
        ll += data.T * np.log((theta - 1.0) * (theta + 1.0))
    return float(ll)


def group_win_probability(winners, losers, skills) -> float:
    outcome = GroupOutcome(tuple(winners), tuple(losers))
    lam = as_skills(skills)
    if max(outcome.winners + outcome.losers) >= lam.size:
        raise StructureError("player id out of range")
    top = lam[list(outcome.winners)].sum()
    return float(top / (top + lam[list(outcome.losers)].sum()))


def group_log_likelihood(data: GroupData, skills) -> float:
    lam = as_skills(skills, data.K)
    top = np.bincount(data.win_comp, weights=lam[data.win_items], minlength=data.n)
    tot = np.bincount(data.team_comp, weights=lam[data.team_items], minlength=data.n)
    return float(np.sum(np.log(top) - np.log(tot)))


def pl_log_probability(ranking, skills) -> float:
    """Log Plackett-Luce probability of ``ranking`` (best first)."""
    r = [int(k) for k in ranking]
    if len(r) < 2:
        raise StructureError("a ranking needs at least two items")
    if len(set(r)) != len(r):
        raise StructureError("ranking repeats an id")
    lam = as_skills(skills)
    if max(r) >= lam.size or min(r) < 0:
        raise StructureError("ranking id out of range")
    v = lam[r]
    # denominators are suffix sums: sum_{m >= j} v[m]
    tails = np.cumsum(v[::-1])[::-1]
    return float(np.sum(np.log(v[:-1]) - np.log(tails[:-1])))


def pl_ranking_probability(ranking, skills) -> float:
    return float(np.exp(pl_log_probability(ranking, skills)))


def pl_log_likelihood(data: RankingData, skills) -> float:
    lam = as_skills(skills, data.K)
    stage_sum = np.bincount(data.member_stage, weights=lam[data.member_item],
                            minlength=data.n_stages)
    return float(np.sum(np.log(lam[data.stage_top])) - np.sum(np.log(stage_sum)))


def pl_ranking_log_likelihoods(data: RankingData, skills) -> np.ndarray:
    """Per-ranking log-probabilities."""
    lam = as_skills(skills, data.K)
    stage_sum = np.bincount(data.member_stage, weights=lam[data.member_item],
                            minlength=data.n_stages)
    per_stage = np.log(lam[data.stage_top]) - np.log(stage_sum)
    return np.bincount(data.stage_ranking, weights=per_stage, minlength=data.n)


def graph_edge_probability(lambda_i, lambda_j):
    p = np.asarray(lambda_i, dtype=float) * np.asarray(lambda_j, dtype=float)
    return p / (1.0 + p)


def graph_log_likelihood(data: GraphData, skills) -> float:
    lam = as_skills(skills, data.K)
    lp = np.log(lam[data.pair_i]) + np.log(lam[data.pair_j])
    return float(np.dot(data.r, lp) - np.sum(np.logaddexp(0.0, lp)))


def log_prior(skills, hp: Hyperparams) -> float:
    """Log density of independent G(a, b) priors; unnormalised when ``b = 0``."""
    lam = as_skills(skills)
    out = (hp.a - 1.0) * np.sum(np.log(lam))
    if hp.b > 0:
        out += lam.size * (hp.a * np.log(hp.b) - gammaln(hp.a)) - hp.b * np.sum(lam)
    return float(out)


def log_prior_gradient(skills, hp: Hyperparams) -> np.ndarray:
    lam = as_skills(skills)
    return (hp.a - 1.0) / lam - hp.b


def log_theta_prior(theta: float, hp: Hyperparams) -> float:
    """Log G(a_theta, b_theta) density of the home-advantage parameter."""
    out = (hp.a_theta - 1.0) * np.log(theta)
    if hp.b_theta > 0:
        out += hp.a_theta * np.log(hp.b_theta) - gammaln(hp.a_theta) - hp.b_theta * theta
    return float(out)


def normalize_to_pi(skills) -> tuple[np.ndarray, float]:
    """Split skills into the identified simplex part and the total scale."""
    lam = as_skills(skills)
    total = float(lam.sum())
    return lam / total, total


def beta_transform(pi) -> np.ndarray:
    """Map simplex weights to the real line: ``beta_i = log(pi_i) + log(K)``.

    Works row-wise on a 2-D array of draws.
    """
    p = np.asarray(pi, dtype=float)
    if np.any(p <= 0):
        raise DomainError("beta transform requires strictly positive weights")
    return np.log(p) + np.log(p.shape[-1])


def beta_to_pi(beta) -> np.ndarray:
    b = np.asarray(beta, dtype=float)
    p = np.exp(b - np.log(b.shape[-1]))
    return p / p.sum(axis=-1, keepdims=True)


def lambda_map_scale(hp: Hyperparams, K: int) -> float:
    """Mode of the marginal posterior of ``sum(lambda)``, which is G(Ka, b) distributed.

    This is not the total of the joint MAP skills, which is ``K(a - 1)/b``.
    """
    if hp.b <= 0:
        raise DomainError("the scale mode requires b > 0")
    if hp.a * K <= 1:
        raise DomainError("the scale mode requires a*K > 1")
    return (hp.a * K - 1.0) / hp.b


def choice_probability(f_i, f_j, weights) -> float:
    """Probability that an object with features ``f_i`` is chosen over one with ``f_j``."""
    f_i = np.asarray(f_i)
    f_j = np.asarray(f_j)
    lam = as_skills(weights)
    own = np.dot(lam, f_i * (1 - f_j))
    other = np.dot(lam, f_j * (1 - f_i))
    if own == 0 or other == 0:
        raise DegenerateComparisonError("both objects need an exclusive feature")
    return float(own / (own + other))


def choice_to_group(data: ChoiceData) -> GroupData:
    """Rewrite binary choices as team comparisons between exclusive feature sets."""
    f = data.features
    outcomes = []
    for n, (i, j, o) in enumerate(data.comparisons):
        if o == 0:
            i, j = j, i
        winners = np.flatnonzero(f[i] * (1 - f[j]))
        losers = np.flatnonzero(f[j] * (1 - f[i]))
        if winners.size == 0 or losers.size == 0:
            raise DegenerateComparisonError(
                f"comparison {n}: objects {i} and {j} lack exclusive features")
        outcomes.append(GroupOutcome(tuple(winners), tuple(losers)))
    return GroupData(data.K, outcomes)


def rankings_to_pairwise(data: RankingData) -> PairwiseCounts:
    """Win counts induced by rankings of length two."""
    if any(len(r) != 2 for r in data.rankings):
        raise StructureError("only rankings of length two reduce to pairwise counts")
    arr = np.asarray(data.rankings, dtype=np.int64).reshape(-1, 2)
    return PairwiseCounts(data.K, arr[:, 0], arr[:, 1])


def pairwise_to_rankings(data: PairwiseCounts) -> RankingData:
    games = np.repeat(np.stack([data.winner, data.loser], axis=1), data.count, axis=0)
    return RankingData(data.K, games.tolist())


def pairwise_to_groups(data: PairwiseCounts) -> GroupData:
    games = np.repeat(np.stack([data.winner, data.loser], axis=1), data.count, axis=0)
    return GroupData(data.K, [GroupOutcome((int(w),), (int(l),)) for w, l in games])
