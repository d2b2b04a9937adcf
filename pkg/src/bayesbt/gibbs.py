"""Data-augmentation Gibbs samplers, auxiliary moves and the chain driver.

Each ``*_gibbs_step`` performs one sweep: latent variables given the current
skills, then skills (and theta where present) given the latents.  The
``*_conditional`` helpers return the shape/rate parameters of the gamma full
conditionals so they can be inspected and tested on their own.

Optional moves run after the model sweep:

* :func:`rescale_step` redraws the total scale ``sum(lambda)`` from its
  G(K a, b) marginal, leaving the normalised skills untouched;
* :func:`sample_a_mh` updates the prior shape ``a`` by a random walk on
  ``log a``.

:func:`gm_mh_step` is a joint Metropolis-Hastings update for Plackett-Luce
skills with a gamma proposal matched to the data, used as a baseline.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import gammaln

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
from .distributions import (
    DEFAULT_MIXTURE_THRESHOLD,
    GigParams,
    sample_gig,
    sample_theta_tie_mh,
    sample_theta_tie_mixture,
)
from .exceptions import ConfigurationError, DomainError, StructureError

MODEL_DATA = {
    "bt": PairwiseCounts,
    "home": HomeCounts,
    "ties": TieCounts,
    "group": GroupData,
    "pl": RankingData,
    "graph": GraphData,
}

RNG_ALGORITHM = "numpy PCG64 seeded through SeedSequence"


@dataclass(frozen=True)
class ChainConfig:
    iterations: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    rescale_enabled: bool = False
    sample_a: bool = False
    sigma_a: float = 0.1
    sigma_theta: float = 0.1
    theta_mixture_threshold: int = DEFAULT_MIXTURE_THRESHOLD
    # False: sample theta before the skills within a sweep
    strict_paper_order: bool = True
    # include the log-normal proposal ratio a*/a in the a-move acceptance
    a_jacobian: bool = True
    # None for the flat prior on (0, inf), else (shape, rate) of a gamma prior
    a_prior: tuple[float, float] | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigurationError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigurationError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ConfigurationError("thin must be >= 1")
        if self.sigma_a <= 0 or self.sigma_theta <= 0:
            raise ConfigurationError("random-walk step sizes must be positive")

    @property
    def n_kept(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class ChainState:
    """Current values of all blocks of the sampler.

    ``z`` holds the Z latents in the order of the data's pair/stage/comparison
    arrays; ``c`` the chosen winner of each team comparison.
    """

    skills: np.ndarray
    theta: float | None = None
    a: float | None = None
    z: np.ndarray | None = None
    c: np.ndarray | None = None


@dataclass
class ChainOutput:
    samples: np.ndarray
    columns: list[str]
    acceptance: dict[str, list[int]] = field(default_factory=dict)
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.samples[:, self.columns.index(name)]

    @property
    def skill_columns(self) -> list[int]:
        return [i for i, c in enumerate(self.columns) if c.startswith("lambda")]

    @property
    def skills(self) -> np.ndarray:
        return self.samples[:, self.skill_columns]

    @property
    def pi(self) -> np.ndarray:
        lam = self.skills
        return lam / lam.sum(axis=1, keepdims=True)

    def acceptance_rates(self) -> dict[str, float]:
        return {k: (acc / tot if tot else float("nan")) for k, (acc, tot) in self.acceptance.items()}


def _count(stats, name, accepted, proposed=1):
    if stats is not None:
        cur = stats.setdefault(name, [0, 0])
        cur[0] += int(accepted)
        cur[1] += int(proposed)


def _gamma(rng, shape, rate):
    return rng.gamma(shape, 1.0 / rate)


# --------------------------------------------------------------------------
# basic Bradley-Terry


def bt_latent_rates(data: PairwiseCounts, lam) -> np.ndarray:
    """Rates ``lambda_i + lambda_j`` of the pair latents ``Z_ij ~ G(n_ij, rate)``."""
    return lam[data.pair_i] + lam[data.pair_j]


def bt_lambda_conditional(data: PairwiseCounts, z, hp: Hyperparams):
    rate = hp.b + np.bincount(data.pair_i, z, data.K) + np.bincount(data.pair_j, z, data.K)
    return hp.a + data.wins, rate


def bt_gibbs_step(data: PairwiseCounts, state: ChainState, hp: Hyperparams,
                  rng: np.random.Generator, **_) -> ChainState:
    lam = state.skills
    z = _gamma(rng, data.pair_n, bt_latent_rates(data, lam))
    shape, rate = bt_lambda_conditional(data, z, hp)
    return replace(state, skills=_gamma(rng, shape, rate), z=z)


# --------------------------------------------------------------------------
# home advantage


def home_lambda_conditional(data: HomeCounts, z, theta: float, hp: Hyperparams):
    rate = (hp.b + theta * np.bincount(data.home, z, data.K)
            + np.bincount(data.away, z, data.K))
    return hp.a + data.wins, rate


def home_theta_conditional(data: HomeCounts, z, lam, hp: Hyperparams):
    return hp.a_theta + data.c, hp.b_theta + float(np.dot(lam[data.home], z))


def home_gibbs_step(data: HomeCounts, state: ChainState, hp: Hyperparams,
                    rng: np.random.Generator, strict_paper_order: bool = True, **_) -> ChainState:
    lam, theta = state.skills, state.theta
    z = _gamma(rng, data.n, theta * lam[data.home] + lam[data.away])
    if strict_paper_order:
        lam = _gamma(rng, *home_lambda_conditional(data, z, theta, hp))
        theta = float(_gamma(rng, *home_theta_conditional(data, z, lam, hp)))
    else:
        theta = float(_gamma(rng, *home_theta_conditional(data, z, lam, hp)))
        lam = _gamma(rng, *home_lambda_conditional(data, z, theta, hp))
    return replace(state, skills=lam, theta=theta, z=z)


# --------------------------------------------------------------------------
# ties


def ties_lambda_conditional(data: TieCounts, z, theta: float, hp: Hyperparams):
    rate = (hp.b + np.bincount(data.s_i, z, data.K)
            + theta * np.bincount(data.s_j, z, data.K))
    return hp.a + data.s_total, rate


def ties_theta_rate(data: TieCounts, z, lam) -> float:
    """``S = sum_{i != j} lambda_j Z_ij``, the rate of the tie-parameter conditional."""
    return float(np.dot(lam[data.s_j], z))


def sample_ties_theta(data: TieCounts, z, lam, theta, rng, threshold=DEFAULT_MIXTURE_THRESHOLD,
                      sigma_theta=0.1, stats=None) -> float:
    """Draw theta from its conditional, exactly when ``T <= threshold``, else one M-H step."""
    S = ties_theta_rate(data, z, lam)
    if S <= 0:
        raise DomainError("tie-parameter conditional is improper (no comparisons)")
    if data.T <= threshold:
        return sample_theta_tie_mixture(data.T, S, rng, threshold=None)
    new, acc = sample_theta_tie_mh(theta, data.T, S, rng, sigma=sigma_theta)
    _count(stats, "theta", acc)
    return new


def ties_gibbs_step(data: TieCounts, state: ChainState, hp: Hyperparams, rng: np.random.Generator,
                    strict_paper_order: bool = True, theta_mixture_threshold=DEFAULT_MIXTURE_THRESHOLD,
                    sigma_theta: float = 0.1, stats=None, **_) -> ChainState:
    lam, theta = state.skills, state.theta
    z = _gamma(rng, data.s, lam[data.s_i] + theta * lam[data.s_j])
    kw = dict(threshold=theta_mixture_threshold, sigma_theta=sigma_theta, stats=stats)
    if strict_paper_order:
        lam = _gamma(rng, *ties_lambda_conditional(data, z, theta, hp))
        theta = sample_ties_theta(data, z, lam, theta, rng, **kw)
    else:
        theta = sample_ties_theta(data, z, lam, theta, rng, **kw)
        lam = _gamma(rng, *ties_lambda_conditional(data, z, theta, hp))
    return replace(state, skills=lam, theta=theta, z=z)


# --------------------------------------------------------------------------
# group comparisons


def group_lambda_conditional(data: GroupData, z, c, hp: Hyperparams):
    shape = hp.a + np.bincount(c, minlength=data.K)
    rate = hp.b + np.bincount(data.team_items, z[data.team_comp], data.K)
    return shape, rate


def sample_group_winners(data: GroupData, lam, rng) -> np.ndarray:
    """For each comparison pick a winning-team member with probability proportional to skill."""
    if data.n == 0:
        return np.zeros(0, dtype=np.int64)
    cum = np.cumsum(lam[data.win_items])
    start, end = data.win_ptr[:-1], data.win_ptr[1:]
    base = np.concatenate([[0.0], cum])[start]
    u = base + rng.random(data.n) * (cum[end - 1] - base)
    idx = np.clip(np.searchsorted(cum, u, side="right"), start, end - 1)
    return data.win_items[idx]


def group_gibbs_step(data: GroupData, state: ChainState, hp: Hyperparams,
                     rng: np.random.Generator, **_) -> ChainState:
    lam = state.skills
    tot = np.bincount(data.team_comp, lam[data.team_items], data.n)
    z = rng.exponential(1.0 / tot)
    c = sample_group_winners(data, lam, rng)
    shape, rate = group_lambda_conditional(data, z, c, hp)
    return replace(state, skills=_gamma(rng, shape, rate), z=z, c=c)


# --------------------------------------------------------------------------
# Plackett-Luce


def pl_stage_rates(data: RankingData, lam) -> np.ndarray:
    """Total skill still in contention at each choice stage."""
    return np.bincount(data.member_stage, lam[data.member_item], data.n_stages)


def pl_lambda_conditional(data: RankingData, z, hp: Hyperparams):
    rate = hp.b + np.bincount(data.member_item, z[data.member_stage], data.K)
    return hp.a + data.wins, rate


def pl_gibbs_step(data: RankingData, state: ChainState, hp: Hyperparams,
                  rng: np.random.Generator, **_) -> ChainState:
    z = rng.exponential(1.0 / pl_stage_rates(data, state.skills))
    shape, rate = pl_lambda_conditional(data, z, hp)
    return replace(state, skills=_gamma(rng, shape, rate), z=z)


def _pl_log_target(data: RankingData, lam, hp: Hyperparams) -> float:
    stage = pl_stage_rates(data, lam)
    ll = np.sum(np.log(lam[data.stage_top])) - np.sum(np.log(stage))
    return float(ll + (hp.a - 1.0) * np.sum(np.log(lam)) - hp.b * np.sum(lam))


def gm_proposal_parameters(data: RankingData, lam, hp: Hyperparams):
    """Gamma proposal of the joint M-H baseline: the PL conditional with each
    stage latent replaced by its conditional mean."""
    rate = hp.b + np.bincount(data.member_item, 1.0 / pl_stage_rates(data, lam)[data.member_stage],
                              data.K)
    return hp.a + data.wins, rate


def _gamma_logpdf(x, shape, rate):
    return np.sum(shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x)


def gm_mh_step(data: RankingData, skills, hp: Hyperparams, rng: np.random.Generator):
    """Propose all skills jointly from the data-matched gamma proposal; accept or reject as a block."""
    lam = np.asarray(skills, dtype=float)
    shape, rate = gm_proposal_parameters(data, lam, hp)
    prop = _gamma(rng, shape, rate)
    _, rate_back = gm_proposal_parameters(data, prop, hp)
    log_r = (_pl_log_target(data, prop, hp) - _pl_log_target(data, lam, hp)
             + _gamma_logpdf(lam, shape, rate_back) - _gamma_logpdf(prop, shape, rate))
    if math.log(rng.random()) < log_r:
        return prop, True
    return lam, False


# --------------------------------------------------------------------------
# random graphs


def graph_latent_rates(data: GraphData, lam) -> np.ndarray:
    return lam[data.pair_i] + 1.0 / lam[data.pair_j]


def graph_lambda_conditional(data: GraphData, z, hp: Hyperparams):
    """GIG parameters ``(alpha, beta, gamma)`` of every skill's conditional."""
    alpha = 2.0 * (np.bincount(data.pair_i, z, data.K) + hp.b)
    beta = 2.0 * np.bincount(data.pair_j, z, data.K)
    gamma = (hp.a + np.bincount(data.pair_i, data.r, data.K)
             - np.bincount(data.pair_j, 1.0 - data.r, data.K))
    return alpha, beta, gamma


def graph_gibbs_step(data: GraphData, state: ChainState, hp: Hyperparams,
                     rng: np.random.Generator, **_) -> ChainState:
    z = rng.exponential(1.0 / graph_latent_rates(data, state.skills))
    alpha, beta, gamma = graph_lambda_conditional(data, z, hp)
    lam = np.array([sample_gig(GigParams(a_, b_, g_), rng)
                    for a_, b_, g_ in zip(alpha, beta, gamma)])
    return replace(state, skills=lam, z=z)


# --------------------------------------------------------------------------
# auxiliary moves


def rescale_step(skills, hp: Hyperparams, rng: np.random.Generator, a: float | None = None):
    """Keep ``skills / sum(skills)`` and redraw the total from G(K a, b)."""
    lam = np.asarray(skills, dtype=float)
    a = hp.a if a is None else a
    total = rng.gamma(lam.size * a, 1.0 / hp.b)
    return lam / lam.sum() * total


def _log_a_prior(a, prior):
    if prior is None:
        return np.zeros_like(np.asarray(a, dtype=float))
    shape, rate = prior
    return (shape - 1.0) * np.log(a) - rate * a


def a_log_acceptance(a, a_new, skills, b: float, prior=None, jacobian: bool = True):
    """Log acceptance ratio of the random-walk move on ``log a``.

    ``log p(a*)/p(a) + K (log Gamma(a) - log Gamma(a*)) + (a* - a) log(b^K prod lambda)``,
    plus ``log(a*/a)`` for the log-normal proposal when ``jacobian`` is set.
    """
    lam = np.asarray(skills, dtype=float)
    K = lam.shape[-1]
    s = K * math.log(b) + float(np.sum(np.log(lam)))
    a = np.asarray(a, dtype=float)
    a_new = np.asarray(a_new, dtype=float)
    out = (_log_a_prior(a_new, prior) - _log_a_prior(a, prior)
           + K * (gammaln(a) - gammaln(a_new)) + (a_new - a) * s)
    if jacobian:
        out = out + np.log(a_new) - np.log(a)
    return out


def sample_a_mh(skills, a, b: float, rng: np.random.Generator, sigma_a: float = 0.1,
                prior=None, jacobian: bool = True):
    """One random-walk M-H update ``a* = a exp(sigma_a z)`` of the prior shape.

    ``a`` may be an array of independent chain states sharing the same skills.
    Returns the new value(s) and the number of accepted proposals.
    """
    a_arr = np.array(a, dtype=float, ndmin=1)
    a_new = a_arr * np.exp(sigma_a * rng.standard_normal(a_arr.shape))
    log_r = a_log_acceptance(a_arr, a_new, skills, b, prior, jacobian)
    ok = np.log(rng.random(a_arr.shape)) < log_r
    out = np.where(ok, a_new, a_arr)
    if np.ndim(a) == 0:
        return float(out[0]), int(ok[0])
    return out, int(ok.sum())


# --------------------------------------------------------------------------
# driver

_STEPS = {
    "bt": bt_gibbs_step,
    "home": home_gibbs_step,
    "ties": ties_gibbs_step,
    "group": group_gibbs_step,
    "pl": pl_gibbs_step,
    "graph": graph_gibbs_step,
}


def chain_columns(model: str, K: int, cfg: ChainConfig, labels=None) -> list[str]:
    labels = [str(k) for k in range(K)] if labels is None else [str(x) for x in labels]
    cols = [f"lambda[{x}]" for x in labels]
    if model in ("home", "ties"):
        cols.append("theta")
    if cfg.sample_a:
        cols.append("a")
    if cfg.rescale_enabled:
        cols.append("Lambda")
    return cols


def run_chain(model: str, data, hp: Hyperparams, cfg: ChainConfig, init=None,
              theta0: float | None = None, kernel: str = "gibbs",
              rng: np.random.Generator | None = None, labels=None) -> ChainOutput:
    """Run one Markov chain and return the kept draws.

    Each iteration runs the model sweep (or the joint M-H baseline when
    ``kernel="gm_mh"``), then the optional rescaling and ``a`` moves.  The
    output is a pure function of ``(data, hp, cfg, init, theta0, kernel)``;
    pass ``rng`` only to share a stream across calls.
    """
    if model not in MODEL_DATA:
        raise StructureError(f"unknown model {model!r}")
    if not isinstance(data, MODEL_DATA[model]):
        raise StructureError(f"model {model!r} expects {MODEL_DATA[model].__name__}, "
                             f"got {type(data).__name__}")
    if not hp.proper:
        raise ConfigurationError("sampling requires a proper prior (b > 0)")
    if kernel not in ("gibbs", "gm_mh"):
        raise ConfigurationError(f"unknown kernel {kernel!r}")
    if kernel == "gm_mh" and model != "pl":
        raise ConfigurationError("the joint M-H kernel is only defined for Plackett-Luce data")
    if cfg.rescale_enabled and model == "graph":
        raise ConfigurationError("the random-graph likelihood is not scale invariant; rescaling is invalid")

    K = data.K
    lam = as_skills(np.full(K, 1.0 / K) if init is None else init, K).copy()
    theta = None
    if model == "ties":
        theta = 1.5 if theta0 is None else float(theta0)
        if theta <= 1:
            raise DomainError("initial tie parameter must exceed 1")
    elif model == "home":
        theta = 1.0 if theta0 is None else float(theta0)
        if theta <= 0:
            raise DomainError("initial home parameter must be positive")

    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    state = ChainState(skills=lam, theta=theta, a=hp.a)
    step = _STEPS[model]
    stats: dict[str, list[int]] = {}
    step_kw = dict(strict_paper_order=cfg.strict_paper_order,
                   theta_mixture_threshold=cfg.theta_mixture_threshold,
                   sigma_theta=cfg.sigma_theta, stats=stats)

    columns = chain_columns(model, K, cfg, labels)
    out = np.empty((cfg.n_kept, len(columns)))
    hp_t = hp
    row = 0
    for t in range(cfg.iterations):
        if cfg.sample_a and hp_t.a != state.a:
            hp_t = replace(hp, a=state.a)
        if kernel == "gibbs":
            state = step(data, state, hp_t, rng, **step_kw)
        else:
            new, acc = gm_mh_step(data, state.skills, hp_t, rng)
            _count(stats, "skills", acc)
            state = replace(state, skills=new)
        if cfg.rescale_enabled:
            state = replace(state, skills=rescale_step(state.skills, hp_t, rng))
        if cfg.sample_a:
            a_new, acc = sample_a_mh(state.skills, state.a, hp.b, rng, cfg.sigma_a,
                                     cfg.a_prior, cfg.a_jacobian)
            _count(stats, "a", acc)
            state = replace(state, a=a_new)
        if t >= cfg.burn_in and (t - cfg.burn_in + 1) % cfg.thin == 0:
            vals = [state.skills]
            if theta is not None:
                vals.append([state.theta])
            if cfg.sample_a:
                vals.append([state.a])
            if cfg.rescale_enabled:
                vals.append([state.skills.sum()])
            out[row] = np.concatenate(vals)
            row += 1

    meta = {
        "model": model,
        "kernel": kernel,
        "rng": RNG_ALGORITHM,
        "hyperparams": asdict(hp),
        "config": asdict(cfg),
    }
    return ChainOutput(out, columns, stats, cfg.seed, meta)


def _run_chain_star(args):
    model, data, hp, cfg, init, theta0, kernel, seq, labels = args
    rng = np.random.Generator(np.random.PCG64(seq))
    return run_chain(model, data, hp, cfg, init, theta0, kernel, rng=rng, labels=labels)


def run_chains(model: str, data, hp: Hyperparams, cfg: ChainConfig, n_chains: int, init=None,
               theta0=None, kernel: str = "gibbs", labels=None, parallel: bool = True):
    """Run ``n_chains`` chains with independent streams spawned from ``cfg.seed``.

    Results do not depend on ``parallel``.
    """
    seqs = np.random.SeedSequence(cfg.seed).spawn(n_chains)
    jobs = [(model, data, hp, cfg, init, theta0, kernel, s, labels) for s in seqs]
    if parallel and n_chains > 1:
        with ProcessPoolExecutor(max_workers=n_chains) as ex:
            outs = list(ex.map(_run_chain_star, jobs))
    else:
        outs = [_run_chain_star(j) for j in jobs]
    for k, o in enumerate(outs):
        o.metadata["chain"] = k
    return outs
