"""MAP / ML point estimation by EM for every model.

All coordinates are updated simultaneously from the previous iterate.  With
``a = 1`` and ``b = 0`` the updates coincide with the MM algorithms for the
corresponding generalised Bradley-Terry models, so the same code computes
maximum-likelihood estimates.

Skills whose optimum lies on the boundary (a player who never wins under a
flat prior, say) are clamped at ``floor * sum(lambda)`` and reported through a
:class:`~bayesbt.exceptions.DegenerateWarning`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import models
from .data import (
    GraphData,
    GroupData,
    HomeCounts,
    Hyperparams,
    PairwiseCounts,
    RankingData,
    TieCounts,
    as_skills,
)
from .exceptions import DegenerateWarning, DomainError, StructureError

MODEL_DATA = {
    "bt": PairwiseCounts,
    "home": HomeCounts,
    "ties": TieCounts,
    "group": GroupData,
    "pl": RankingData,
    "graph": GraphData,
    "nb": PairwiseCounts,
}

ASCENT_SLACK = 1e-10


@dataclass(frozen=True)
class EmConfig:
    max_iter: int = 10000
    tol: float = 1e-9
    floor: float = 1e-12

    def __post_init__(self):
        if self.max_iter < 0:
            raise DomainError("max_iter must be nonnegative")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if not 0 < self.floor < 1e-3:
            raise DomainError("floor must be a small positive number")


@dataclass
class EmResult:
    model: str
    skills: np.ndarray
    theta: float | None
    log_posterior_trace: list[float]
    iterations: int
    converged: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def pi(self) -> np.ndarray:
        return self.skills / self.skills.sum()

    @property
    def beta(self) -> np.ndarray:
        return models.beta_transform(self.pi)

    @property
    def log_posterior(self) -> float:
        return self.log_posterior_trace[-1]


class _Clamp:
    """Collects the coordinates that had to be clamped during a fit."""

    def __init__(self, floor: float):
        self.floor = floor
        self.low: set[int] = set()
        self.high: set[int] = set()
        self.notes: set[str] = set()

    def ratio(self, num, den, old, floor_abs):
        """Elementwise ``num/den`` with boundary optima sent to ``floor_abs``.

        ``den == 0`` leaves the coordinate unconstrained by data and prior; it
        keeps its previous value.
        """
        out = np.array(old, dtype=float, copy=True)
        ok = den > 0
        out[ok] = num[ok] / den[ok]
        if np.any(~ok & (num > 0)):
            self.notes.add("some skills are unbounded above (no data and b = 0); kept at previous value")
        low = ok & (out <= floor_abs)
        if np.any(low):
            self.low.update(np.flatnonzero(low).tolist())
            out[low] = floor_abs
        return out


# --------------------------------------------------------------------------
# per-model updates; each maps the previous iterate to the next one


def bt_em_update(data: PairwiseCounts, lam, hp: Hyperparams, clamp: _Clamp | None = None):
    """``lambda_i <- (a - 1 + w_i) / (b + sum_j n_ij / (lambda_i + lambda_j))``."""
    clamp = clamp or _Clamp(0.0)
    d = data.pair_n / (lam[data.pair_i] + lam[data.pair_j])
    den = hp.b + np.bincount(data.pair_i, d, data.K) + np.bincount(data.pair_j, d, data.K)
    num = hp.a - 1.0 + data.wins
    return clamp.ratio(num, den, lam, clamp.floor * lam.sum())


def home_em_update(data: HomeCounts, lam, theta, hp: Hyperparams, clamp: _Clamp | None = None,
                   update_theta: bool = True):
    clamp = clamp or _Clamp(0.0)
    h, aw = data.home, data.away
    d = data.n / (theta * lam[h] + lam[aw])
    den = hp.b + theta * np.bincount(h, d, data.K) + np.bincount(aw, d, data.K)
    new = clamp.ratio(hp.a - 1.0 + data.wins, den, lam, clamp.floor * lam.sum())
    if not update_theta:
        return new, theta
    num_t = hp.a_theta - 1.0 + data.c
    den_t = hp.b_theta + float(np.dot(d, new[h]))
    if den_t <= 0:
        new_theta = theta
    elif num_t <= 0:
        new_theta = clamp.floor
        clamp.notes.add("home-advantage parameter clamped at the floor (no home wins)")
    else:
        new_theta = max(num_t / den_t, clamp.floor)
    return new, new_theta


def ties_theta_update(c: float) -> float:
    """Maximiser ``1/(2c) + sqrt(1 + 1/(4c^2))`` of the tie-parameter surrogate.

    ``c`` is the surrogate's linear coefficient divided by ``2T``.
    """
    c = float(c)
    if not c > 0:
        raise DomainError("tie-parameter update needs c > 0")
    return 1.0 / (2.0 * c) + math.sqrt(1.0 + 1.0 / (4.0 * c * c))


def ties_em_update(data: TieCounts, lam, theta, hp: Hyperparams, clamp: _Clamp | None = None,
                   update_theta: bool = True):
    clamp = clamp or _Clamp(1e-12)
    si, sj = data.s_i, data.s_j
    d = data.s / (lam[si] + theta * lam[sj])
    den = hp.b + np.bincount(si, d, data.K) + theta * np.bincount(sj, d, data.K)
    new = clamp.ratio(hp.a - 1.0 + data.s_total, den, lam, clamp.floor * lam.sum())
    if not update_theta:
        return new, theta
    c = float(np.dot(d, new[sj]))
    if c <= 0:
        raise DomainError("tie-parameter update undefined: no comparisons")
    if data.T == 0:
        clamp.notes.add("no ties observed: theta clamped just above 1")
        return new, 1.0 + clamp.floor
    return new, max(ties_theta_update(c / (2.0 * data.T)), 1.0 + clamp.floor)


def group_em_update(data: GroupData, lam, hp: Hyperparams, clamp: _Clamp | None = None):
    clamp = clamp or _Clamp(0.0)
    top = np.bincount(data.win_comp, lam[data.win_items], data.n)
    tot = np.bincount(data.team_comp, lam[data.team_items], data.n)
    num = hp.a - 1.0 + lam * np.bincount(data.win_items, 1.0 / top[data.win_comp], data.K)
    den = hp.b + np.bincount(data.team_items, 1.0 / tot[data.team_comp], data.K)
    return clamp.ratio(num, den, lam, clamp.floor * lam.sum())


def pl_em_update(data: RankingData, lam, hp: Hyperparams, clamp: _Clamp | None = None):
    clamp = clamp or _Clamp(0.0)
    stage_sum = np.bincount(data.member_stage, lam[data.member_item], data.n_stages)
    den = hp.b + np.bincount(data.member_item, 1.0 / stage_sum[data.member_stage], data.K)
    return clamp.ratio(hp.a - 1.0 + data.wins, den, lam, clamp.floor * lam.sum())


def graph_quadratic_root(A, B, C):
    """Positive root of ``-B x^2 + A x + C = 0`` (``B, C >= 0``), elementwise.

    Returns ``nan`` where no finite positive maximiser exists (``B = 0`` with
    ``A >= 0``) and ``0`` where the maximiser is the boundary (``C = 0``,
    ``A <= 0``).
    """
    A, B, C = (np.asarray(v, dtype=float) for v in (A, B, C))
    A, B, C = np.broadcast_arrays(A, B, C)
    out = np.full(A.shape, np.nan)
    pos = B > 0
    disc = np.sqrt(A * A + 4.0 * B * C)
    plus = pos & (A >= 0)
    out[plus] = (A[plus] + disc[plus]) / (2.0 * B[plus])
    minus = pos & (A < 0)
    # same root, rearranged to avoid cancellation
    out[minus] = 2.0 * C[minus] / (disc[minus] - A[minus])
    lin = ~pos & (A < 0)
    out[lin] = -C[lin] / A[lin]
    return out


def graph_em_update(data: GraphData, lam, hp: Hyperparams, clamp: _Clamp | None = None):
    clamp = clamp or _Clamp(1e-12)
    pi_, pj = data.pair_i, data.pair_j
    A = (hp.a - 1.0) + np.bincount(pi_, data.r, data.K) - np.bincount(pj, 1.0 - data.r, data.K)
    e = 1.0 / (lam[pi_] + 1.0 / lam[pj])
    B = hp.b + np.bincount(pi_, e, data.K)
    C = np.bincount(pj, e, data.K)
    new = graph_quadratic_root(A, B, C)
    lo, hi = clamp.floor, 1.0 / clamp.floor
    unbounded = np.isnan(new) | (new > hi)
    if np.any(unbounded):
        clamp.high.update(np.flatnonzero(unbounded).tolist())
        new[unbounded] = hi
    low = new < lo
    if np.any(low):
        clamp.low.update(np.flatnonzero(low).tolist())
        new[low] = lo
    return new


def nb_em_update(data: PairwiseCounts, pi, a: float, clamp: _Clamp | None = None):
    """Negative-binomial augmentation EM step, acting directly on the simplex.

    ``pi_k <- a - 1 + w_k + pi_k * sum over pairs {i, j} not containing k of
    n_ij / (pi_i + pi_j)``, then renormalised.
    """
    clamp = clamp or _Clamp(0.0)
    d = data.pair_n / (pi[data.pair_i] + pi[data.pair_j])
    touching = np.bincount(data.pair_i, d, data.K) + np.bincount(data.pair_j, d, data.K)
    num = a - 1.0 + data.wins + pi * (d.sum() - touching)
    new = clamp.ratio(num, np.ones_like(num), pi, clamp.floor * num.clip(min=0).sum())
    return new / new.sum()


# --------------------------------------------------------------------------
# log-posteriors


def nb_log_posterior(data: PairwiseCounts, pi, a: float) -> float:
    return float(np.dot(data.wins, np.log(pi))
                 - np.dot(data.pair_n, np.log(pi[data.pair_i] + pi[data.pair_j]))
                 + (a - 1.0) * np.sum(np.log(pi)))


def log_posterior(model: str, data, hp: Hyperparams, skills, theta=None) -> float:
    """Unnormalised log-posterior used to monitor EM."""
    if model == "bt":
        ll = models.bt_log_likelihood(data, skills)
    elif model == "home":
        ll = models.home_log_likelihood(data, skills, theta) + models.log_theta_prior(theta, hp)
    elif model == "ties":
        ll = models.ties_log_likelihood(data, skills, theta)
    elif model == "group":
        ll = models.group_log_likelihood(data, skills)
    elif model == "pl":
        ll = models.pl_log_likelihood(data, skills)
    elif model == "graph":
        ll = models.graph_log_likelihood(data, skills)
    elif model == "nb":
        return nb_log_posterior(data, np.asarray(skills) / np.sum(skills), hp.a)
    else:
        raise StructureError(f"unknown model {model!r}")
    return ll + models.log_prior(skills, hp)


# --------------------------------------------------------------------------
# driver


def _default_theta(model):
    return {"home": 1.0, "ties": 1.5}.get(model)


def run_em(model: str, data, hp: Hyperparams | None = None, cfg: EmConfig | None = None,
           init=None, theta0: float | None = None, update_theta: bool = True) -> EmResult:
    """Iterate the EM update of ``model`` until the largest relative change is below ``cfg.tol``.

    ``init`` defaults to ``1/K`` for every skill; ``theta0`` to 1 (home) or
    1.5 (ties).  With ``update_theta=False`` theta is held at ``theta0``.
    The log-posterior is recorded at the initial point and after every
    iteration; a decrease beyond rounding raises a ``RuntimeWarning``.
    """
    hp = hp or Hyperparams()
    cfg = cfg or EmConfig()
    if model not in MODEL_DATA:
        raise StructureError(f"unknown model {model!r}")
    if not isinstance(data, MODEL_DATA[model]):
        raise StructureError(f"model {model!r} expects {MODEL_DATA[model].__name__}, "
                             f"got {type(data).__name__}")
    K = data.K
    lam = as_skills(np.full(K, 1.0 / K) if init is None else init, K).copy()
    if model == "nb":
        lam = lam / lam.sum()
    theta = None
    if model in ("home", "ties"):
        theta = float(_default_theta(model) if theta0 is None else theta0)
        if model == "ties" and theta <= 1:
            raise DomainError("initial tie parameter must exceed 1")
        if model == "home" and theta <= 0:
            raise DomainError("initial home parameter must be positive")

    clamp = _Clamp(cfg.floor)

    def step(lam, theta):
        if model == "bt":
            return bt_em_update(data, lam, hp, clamp), None
        if model == "home":
            return home_em_update(data, lam, theta, hp, clamp, update_theta)
        if model == "ties":
            return ties_em_update(data, lam, theta, hp, clamp, update_theta)
        if model == "group":
            return group_em_update(data, lam, hp, clamp), None
        if model == "pl":
            return pl_em_update(data, lam, hp, clamp), None
        if model == "graph":
            return graph_em_update(data, lam, hp, clamp), None
        return nb_em_update(data, lam, hp.a, clamp), None

    trace = [log_posterior(model, data, hp, lam, theta)]
    messages: list[str] = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        new_lam, new_theta = step(lam, theta)
        change = float(np.max(np.abs(new_lam - lam) / lam))
        if theta is not None:
            change = max(change, abs(new_theta - theta) / theta)
        lam, theta = new_lam, new_theta
        trace.append(log_posterior(model, data, hp, lam, theta))
        if trace[-1] < trace[-2] - ASCENT_SLACK * max(1.0, abs(trace[-2])):
            msg = f"log-posterior decreased at iteration {it}: {trace[-2]!r} -> {trace[-1]!r}"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            messages.append(msg)
        if change < cfg.tol:
            converged = True
            break
    else:
        it = cfg.max_iter

    if clamp.low:
        messages.append(f"skills of players {sorted(clamp.low)} clamped at the lower floor")
    if clamp.high:
        messages.append(f"skills of players {sorted(clamp.high)} clamped at the upper bound")
    messages.extend(sorted(clamp.notes))
    if clamp.low or clamp.high or clamp.notes:
        warnings.warn("; ".join(m for m in messages if "clamp" in m or "unbounded" in m),
                      DegenerateWarning, stacklevel=2)
    return EmResult(model, lam, theta, trace, it, converged, messages)


def bt_em(data: PairwiseCounts, hp=None, cfg=None, init=None) -> EmResult:
    return run_em("bt", data, hp, cfg, init)


def home_em(data: HomeCounts, hp=None, cfg=None, init=None, theta0=None, update_theta=True) -> EmResult:
    return run_em("home", data, hp, cfg, init, theta0, update_theta)


def ties_em(data: TieCounts, hp=None, cfg=None, init=None, theta0=None, update_theta=True) -> EmResult:
    return run_em("ties", data, hp, cfg, init, theta0, update_theta)


def group_em(data: GroupData, hp=None, cfg=None, init=None) -> EmResult:
    return run_em("group", data, hp, cfg, init)


def pl_em(data: RankingData, hp=None, cfg=None, init=None) -> EmResult:
    return run_em("pl", data, hp, cfg, init)


def graph_em(data: GraphData, hp=None, cfg=None, init=None) -> EmResult:
    return run_em("graph", data, hp, cfg, init)


def nb_em(data: PairwiseCounts, a: float, cfg=None, init=None) -> EmResult:
    """EM on the simplex under a symmetric Dirichlet(a) prior; ``skills`` of the result are ``pi``."""
    return run_em("nb", data, Hyperparams(a=a), cfg, init)
