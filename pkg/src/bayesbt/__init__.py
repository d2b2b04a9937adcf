"""Bayesian inference for Bradley-Terry models and their generalisations.

MAP estimation by EM lives in :mod:`bayesbt.em`, posterior sampling by data
augmentation in :mod:`bayesbt.gibbs`.
"""

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
)
from .em import EmConfig, EmResult, run_em
from .gibbs import ChainConfig, ChainOutput, run_chain, run_chains

__all__ = [
    "ChainConfig", "ChainOutput", "ChoiceData", "EmConfig", "EmResult", "GraphData",
    "GroupData", "GroupOutcome", "HomeCounts", "Hyperparams", "PairwiseCounts",
    "RankingData", "TieCounts", "run_chain", "run_chains", "run_em",
]
