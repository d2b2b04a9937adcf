"""Rankings, teams and sampler efficiency.

Plackett-Luce rankings are a sequence of choices, each of which gets an
exponential latent variable.  The data-augmentation Gibbs sampler is compared
with an independence Metropolis-Hastings kernel whose gamma proposal is
centred on an MM step.  Lower lag-1 autocorrelation means better mixing.

Pass ``--full`` for the complete study (50 replicates, about a minute on
several cores); the default is a quick version.
"""
from __future__ import annotations

import sys

import numpy as np

from bayesbt import ChainConfig, GroupData, Hyperparams, RankingData, run_chain
from bayesbt.data import GroupOutcome
from bayesbt.diagnostics import fig1_experiment, pl_test_loglik, simulate_pl
from bayesbt.em import group_em, pl_em

rng = np.random.default_rng(7)
true = np.array([4.0, 2.0, 1.0, 0.5, 0.25])
train = RankingData(5, simulate_pl(true, 60, rng))
test = RankingData(5, simulate_pl(true, 30, rng))

# %% MAP and posterior fits, scored on held-out rankings.
hp = Hyperparams(a=2.0, b=1.0)
fit = pl_em(train, hp)
chain = run_chain("pl", train, hp, ChainConfig(iterations=3000, burn_in=500, seed=5))
print("true pi:", np.round(true / true.sum(), 3))
print("MAP pi: ", np.round(fit.pi, 3))
print("held-out log-lik, MAP:     ", round(pl_test_loglik(fit.skills, test), 3))
print("held-out log-lik, Bayesian:", round(pl_test_loglik(chain, test), 3))

# %% Teams: the winning team's strength is the sum of its members' skills.
games = GroupData(4, [GroupOutcome((0, 1), (2, 3)), GroupOutcome((0, 2), (1, 3)),
                      GroupOutcome((1, 3), (0, 2)), GroupOutcome((0, 3), (1, 2))])
print("team model pi:", np.round(group_em(games, hp).pi, 3))

# %% Mixing study.
full = "--full" in sys.argv
rows = fig1_experiment(replications=50 if full else 5, iterations=2500 if full else 800,
                       burn_in=500 if full else 200, workers=4)
print(f"{'n':>5s} {'sampler':>9s} {'mean ACF':>9s} {'5%':>7s} {'95%':>7s}")
for r in rows:
    print(f"{r['n']:5d} {r['sampler']:>9s} {r['mean_acf']:9.3f} {r['q05']:7.3f} {r['q95']:7.3f}")
