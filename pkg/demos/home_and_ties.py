"""Home advantage and ties.

The home-advantage model multiplies the home player's skill by theta.  The
ties model widens the win/loss boundary by theta > 1 so that draws get
positive probability.  Both are fitted by EM and sampled by Gibbs.
"""
from __future__ import annotations

import numpy as np

from bayesbt import ChainConfig, HomeCounts, Hyperparams, TieCounts, run_chain
from bayesbt.em import home_em, ties_em
from bayesbt.models import ties_outcome_probabilities

# %% Home advantage.  a_mat[i, j]: i won at home against j; b_mat[i, j]: i lost at home to j.
a_mat = np.array([[0, 3, 4], [2, 0, 3], [2, 2, 0]])
b_mat = np.array([[0, 1, 0], [1, 0, 1], [2, 1, 0]])
home = HomeCounts.from_matrices(a_mat, b_mat)
hp = Hyperparams(a=2.0, b=1.0, a_theta=2.0, b_theta=1.0)
fit = home_em(home, hp)
print("home advantage theta (MAP):", round(fit.theta, 3))
chain = run_chain("home", home, hp, ChainConfig(iterations=4000, burn_in=500, seed=3))
print("home advantage theta (posterior mean):", round(chain.column("theta").mean(), 3))

# %% Ties.  w[i, j] counts wins of i over j, t[i, j] counts draws.
w = np.array([[0, 5, 3], [2, 0, 4], [1, 2, 0]])
t = np.array([[0, 3, 2], [3, 0, 1], [2, 1, 0]])
ties = TieCounts.from_matrices(w, t)
fit = ties_em(ties, Hyperparams(a=2.0, b=1.0))
win, tie, loss = ties_outcome_probabilities(fit.skills[0], fit.skills[1], fit.theta)
print(f"ties theta {fit.theta:.3f}; player 0 vs 1: win {win:.3f} draw {tie:.3f} loss {loss:.3f}")

# The theta conditional is a finite gamma mixture when there are few ties.
chain = run_chain("ties", ties, Hyperparams(a=2.0, b=1.0), ChainConfig(iterations=4000, burn_in=500, seed=4))
print("ties theta posterior mean:", round(chain.column("theta").mean(), 3))
