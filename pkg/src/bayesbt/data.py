"""Containers for the observation structures handled by the package.

Player ids are dense integers ``0..K-1``; mapping to external string ids is
done in :mod:`bayesbt.io`.  Count data is stored as coordinate lists and the
aggregates needed by the estimators (pair totals, win counts, number of ties,
...) are computed once at construction.  Containers are treated as immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DomainError, StructureError


def as_skills(skills, K: int | None = None) -> np.ndarray:
    """Validate a skill vector and return it as a float array."""
    lam = np.asarray(skills, dtype=float)
    if lam.ndim != 1:
        raise StructureError("skills must be a 1-D array")
    if lam.shape[0] < 2:
        raise StructureError("at least two players are required")
    if K is not None and lam.shape[0] != K:
        raise StructureError(f"expected {K} skills, got {lam.shape[0]}")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise DomainError("skills must be strictly positive and finite")
    return lam


@dataclass(frozen=True)
class Hyperparams:
    """Gamma prior G(a, b) (shape, rate) on each skill, G(a_theta, b_theta) on theta.

    ``b = 0`` together with ``a = 1`` gives a flat prior, under which MAP
    estimation reduces to maximum likelihood.  Samplers refuse ``b = 0``.
    """

    a: float = 1.0
    b: float = 0.0
    a_theta: float = 1.0
    b_theta: float = 0.0

    def __post_init__(self):
        for name in ("a", "a_theta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise DomainError(f"{name} must be > 0, got {v}")
        for name in ("b", "b_theta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be >= 0, got {v}")

    @property
    def proper(self) -> bool:
        return self.b > 0

    @classmethod
    def map_normalized(cls, a: float, K: int, **kw) -> "Hyperparams":
        """Prior with ``b = K*a - 1`` so that the MAP skills sum to one."""
        return cls(a=a, b=K * a - 1.0, **kw)


def _as_index(values, K: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64).reshape(-1)
    if arr.size and (arr.min() < 0 or arr.max() >= K):
        raise StructureError(f"{what} ids must lie in [0, {K})")
    return arr


def _as_counts(values, n: int) -> np.ndarray:
    if values is None:
        return np.ones(n, dtype=np.int64)
    arr = np.asarray(values)
    if arr.shape != (n,):
        raise StructureError("counts must have one entry per record")
    if np.any(arr < 0) or np.any(arr != np.round(arr)):
        raise DomainError("counts must be nonnegative integers")
    return arr.astype(np.int64)


def _check_K(K: int) -> int:
    K = int(K)
    if K < 2:
        raise StructureError("at least two players are required")
    return K


def _aggregate(K: int, i: np.ndarray, j: np.ndarray, c: np.ndarray):
    """Sum counts of duplicated (i, j) records, drop zeros, sort by (i, j)."""
    key = i * K + j
    uniq, inv = np.unique(key, return_inverse=True)
    tot = np.bincount(inv, weights=c, minlength=uniq.size).astype(np.int64)
    keep = tot > 0
    uniq, tot = uniq[keep], tot[keep]
    return uniq // K, uniq % K, tot


class PairwiseCounts:
    """Win counts ``w_ij`` (i beats j) for the basic Bradley-Terry model.

    Attributes
    ----------
    winner, loser, count : coordinate list of the nonzero ``w_ij``.
    wins : ``w_i``, total wins of each player.
    pair_i, pair_j, pair_n : unordered pairs ``i < j`` with ``n_ij > 0``.
    """

    def __init__(self, K: int, winner, loser, count=None):
        self.K = _check_K(K)
        w = _as_index(winner, self.K, "winner")
        l = _as_index(loser, self.K, "loser")
        if w.shape != l.shape:
            raise StructureError("winner and loser must have the same length")
        if np.any(w == l):
            raise StructureError("a player cannot be compared with itself")
        c = _as_counts(count, w.size)
        self.winner, self.loser, self.count = _aggregate(self.K, w, l, c)
        self.wins = np.bincount(self.winner, weights=self.count, minlength=self.K)
        lo = np.minimum(self.winner, self.loser)
        hi = np.maximum(self.winner, self.loser)
        self.pair_i, self.pair_j, self.pair_n = _aggregate(self.K, lo, hi, self.count)
        self.pair_n = self.pair_n.astype(float)
        self.n_games = int(self.count.sum())

    @classmethod
    def from_matrix(cls, w) -> "PairwiseCounts":
        w = np.asarray(w)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise StructureError("win matrix must be square")
        if np.any(np.diag(w) != 0):
            raise StructureError("win matrix must have a zero diagonal")
        i, j = np.nonzero(w)
        return cls(w.shape[0], i, j, w[i, j])

    @classmethod
    def from_games(cls, K: int, games: Iterable[tuple[int, int]]) -> "PairwiseCounts":
        games = list(games)
        if not games:
            return cls(K, [], [])
        arr = np.asarray(games, dtype=np.int64)
        return cls(K, arr[:, 0], arr[:, 1])

    def to_matrix(self) -> np.ndarray:
        w = np.zeros((self.K, self.K), dtype=np.int64)
        w[self.winner, self.loser] = self.count
        return w

    def __repr__(self):
        return f"PairwiseCounts(K={self.K}, games={self.n_games})"


class HomeCounts:
    """Home-advantage data: per (home, away) pair, home wins ``a_ij`` and home losses ``b_ij``.

    ``wins`` counts every win of a player, at home or away.
    """

    def __init__(self, K: int, home, away, home_wins, home_losses):
        self.K = _check_K(K)
        h = _as_index(home, self.K, "home")
        aw = _as_index(away, self.K, "away")
        if h.shape != aw.shape:
            raise StructureError("home and away must have the same length")
        if np.any(h == aw):
            raise StructureError("a player cannot be compared with itself")
        hw = _as_counts(home_wins, h.size)
        hl = _as_counts(home_losses, h.size)
        key = h * self.K + aw
        uniq, inv = np.unique(key, return_inverse=True)
        a_ = np.bincount(inv, weights=hw, minlength=uniq.size).astype(np.int64)
        b_ = np.bincount(inv, weights=hl, minlength=uniq.size).astype(np.int64)
        keep = (a_ + b_) > 0
        self.home = uniq[keep] // self.K
        self.away = uniq[keep] % self.K
        self.home_wins = a_[keep]
        self.home_losses = b_[keep]
        self.n = (self.home_wins + self.home_losses).astype(float)
        self.c = int(self.home_wins.sum())
        self.wins = (np.bincount(self.home, weights=self.home_wins, minlength=self.K)
                     + np.bincount(self.away, weights=self.home_losses, minlength=self.K))

    @classmethod
    def from_matrices(cls, a_mat, b_mat) -> "HomeCounts":
        a_mat, b_mat = np.asarray(a_mat), np.asarray(b_mat)
        if a_mat.shape != b_mat.shape or a_mat.ndim != 2 or a_mat.shape[0] != a_mat.shape[1]:
            raise StructureError("home matrices must be square and of equal shape")
        if np.any(np.diag(a_mat) != 0) or np.any(np.diag(b_mat) != 0):
            raise StructureError("home matrices must have zero diagonals")
        i, j = np.nonzero(a_mat + b_mat)
        return cls(a_mat.shape[0], i, j, a_mat[i, j], b_mat[i, j])

    @classmethod
    def from_games(cls, K: int, games: Iterable[tuple[int, int, int]]) -> "HomeCounts":
        """``games`` holds ``(home, away, home_won)`` triples."""
        games = list(games)
        if not games:
            return cls(K, [], [], [], [])
        arr = np.asarray(games, dtype=np.int64)
        if np.any((arr[:, 2] != 0) & (arr[:, 2] != 1)):
            raise DomainError("home_won must be 0 or 1")
        return cls(K, arr[:, 0], arr[:, 1], arr[:, 2], 1 - arr[:, 2])

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        a_mat = np.zeros((self.K, self.K), dtype=np.int64)
        b_mat = np.zeros((self.K, self.K), dtype=np.int64)
        a_mat[self.home, self.away] = self.home_wins
        b_mat[self.home, self.away] = self.home_losses
        return a_mat, b_mat

    def fold(self) -> PairwiseCounts:
        """Forget venues and return plain win counts."""
        return PairwiseCounts(
            self.K,
            np.concatenate([self.home, self.away]),
            np.concatenate([self.away, self.home]),
            np.concatenate([self.home_wins, self.home_losses]),
        )

    def __repr__(self):
        return f"HomeCounts(K={self.K}, games={int(self.n.sum())}, home_wins={self.c})"


class TieCounts:
    """Win counts ``w_ij`` plus symmetric tie counts ``t_ij``.

    Derived: ordered pairs with ``s_ij = w_ij + t_ij > 0`` as ``s_i, s_j, s``,
    per-player totals ``s_total[i] = sum_j s_ij`` and the number of ties ``T``.
    """

    def __init__(self, K: int, winner, loser, win_count, tie_a, tie_b, tie_count):
        self.K = _check_K(K)
        w = _as_index(winner, self.K, "winner")
        l = _as_index(loser, self.K, "loser")
        ta = _as_index(tie_a, self.K, "tie")
        tb = _as_index(tie_b, self.K, "tie")
        if w.shape != l.shape or ta.shape != tb.shape:
            raise StructureError("paired id arrays must have equal lengths")
        if np.any(w == l) or np.any(ta == tb):
            raise StructureError("a player cannot be compared with itself")
        wc = _as_counts(win_count, w.size)
        tc = _as_counts(tie_count, ta.size)
        self.winner, self.loser, self.win_count = _aggregate(self.K, w, l, wc)
        self.tie_i, self.tie_j, self.tie_count = _aggregate(
            self.K, np.minimum(ta, tb), np.maximum(ta, tb), tc)
        self.T = int(self.tie_count.sum())
        si = np.concatenate([self.winner, self.tie_i, self.tie_j])
        sj = np.concatenate([self.loser, self.tie_j, self.tie_i])
        sc = np.concatenate([self.win_count, self.tie_count, self.tie_count])
        self.s_i, self.s_j, s = _aggregate(self.K, si, sj, sc)
        self.s = s.astype(float)
        self.s_total = np.bincount(self.s_i, weights=self.s, minlength=self.K)

    @classmethod
    def from_matrices(cls, w, t) -> "TieCounts":
        w, t = np.asarray(w), np.asarray(t)
        if w.shape != t.shape or w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise StructureError("win and tie matrices must be square and of equal shape")
        if np.any(t != t.T):
            raise StructureError("tie matrix must be symmetric")
        if np.any(np.diag(w) != 0) or np.any(np.diag(t) != 0):
            raise StructureError("matrices must have zero diagonals")
        wi, wj = np.nonzero(w)
        ti, tj = np.nonzero(np.triu(t, 1))
        return cls(w.shape[0], wi, wj, w[wi, wj], ti, tj, t[ti, tj])

    @classmethod
    def from_games(cls, K: int, games: Iterable[tuple[int, int, float]]) -> "TieCounts":
        """``games`` holds ``(player_a, player_b, score)`` with score 1 (a wins), 0.5 or 0."""
        wins, ties = [], []
        for a, b, score in games:
            if score == 1:
                wins.append((a, b))
            elif score == 0:
                wins.append((b, a))
            elif score == 0.5:
                ties.append((a, b))
            else:
                raise DomainError(f"score must be 0, 0.5 or 1, got {score}")
        w = np.asarray(wins, dtype=np.int64).reshape(-1, 2)
        t = np.asarray(ties, dtype=np.int64).reshape(-1, 2)
        return cls(K, w[:, 0], w[:, 1], None, t[:, 0], t[:, 1], None)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        w = np.zeros((self.K, self.K), dtype=np.int64)
        t = np.zeros((self.K, self.K), dtype=np.int64)
        w[self.winner, self.loser] = self.win_count
        t[self.tie_i, self.tie_j] = self.tie_count
        t[self.tie_j, self.tie_i] = self.tie_count
        return w, t

    def __repr__(self):
        return f"TieCounts(K={self.K}, wins={int(self.win_count.sum())}, ties={self.T})"


@dataclass(frozen=True)
class GroupOutcome:
    """One comparison in which team ``winners`` beat team ``losers``."""

    winners: tuple[int, ...]
    losers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "winners", tuple(int(k) for k in self.winners))
        object.__setattr__(self, "losers", tuple(int(k) for k in self.losers))
        if not self.winners or not self.losers:
            raise StructureError("both teams must be nonempty")
        if len(set(self.winners)) != len(self.winners) or len(set(self.losers)) != len(self.losers):
            raise StructureError("a team lists the same player twice")
        if set(self.winners) & set(self.losers):
            raise StructureError("winning and losing teams overlap")


class GroupData:
    """A list of team comparisons, flattened for vectorised updates.

    ``win_items/win_comp`` list each winning-team member with its comparison
    index; ``team_items/team_comp`` list every participant.
    """

    def __init__(self, K: int, outcomes: Sequence[GroupOutcome]):
        self.K = _check_K(K)
        self.outcomes = [o if isinstance(o, GroupOutcome) else GroupOutcome(*o) for o in outcomes]
        wi, wc, ti, tc = [], [], [], []
        for n, o in enumerate(self.outcomes):
            wi.extend(o.winners)
            wc.extend([n] * len(o.winners))
            ti.extend(o.winners + o.losers)
            tc.extend([n] * (len(o.winners) + len(o.losers)))
        self.n = len(self.outcomes)
        self.win_items = _as_index(wi, self.K, "player")
        self.win_comp = np.asarray(wc, dtype=np.int64)
        self.team_items = _as_index(ti, self.K, "player")
        self.team_comp = np.asarray(tc, dtype=np.int64)
        # winners are stored contiguously per comparison
        self.win_ptr = np.concatenate([[0], np.cumsum(np.bincount(self.win_comp, minlength=self.n))])
        self.appearances = np.bincount(self.team_items, minlength=self.K)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"GroupData(K={self.K}, comparisons={self.n})"


class RankingData:
    """Plackett-Luce rankings, best first, over subsets of ``0..K-1``.

    Each ranking of length ``p`` contributes ``p - 1`` choice stages; stage
    ``j`` chooses ``rho[j]`` among ``rho[j:]``.  ``member_item/member_stage``
    enumerate who is still present at each stage, ``stage_top`` the chosen
    item, and ``wins[k]`` the number of rankings in which ``k`` is not last.
    """

    def __init__(self, K: int, rankings: Sequence[Sequence[int]]):
        self.K = _check_K(K)
        self.rankings = [tuple(int(x) for x in r) for r in rankings]
        items, stages, tops, stage_rank = [], [], [], []
        s = 0
        for n, r in enumerate(self.rankings):
            p = len(r)
            if p < 2:
                raise StructureError("a ranking needs at least two items")
            if len(set(r)) != p:
                raise StructureError(f"ranking {n} repeats an id")
            for j in range(p - 1):
                items.extend(r[j:])
                stages.extend([s + j] * (p - j))
                tops.append(r[j])
                stage_rank.append(n)
            s += p - 1
        self.n = len(self.rankings)
        self.n_stages = s
        self.member_item = _as_index(items, self.K, "player")
        self.member_stage = np.asarray(stages, dtype=np.int64)
        self.stage_top = _as_index(tops, self.K, "player")
        self.stage_ranking = np.asarray(stage_rank, dtype=np.int64)
        self.wins = np.bincount(self.stage_top, minlength=self.K).astype(float)
        self.appearances = np.bincount(
            _as_index([k for r in self.rankings for k in r], self.K, "player"), minlength=self.K)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"RankingData(K={self.K}, rankings={self.n})"


class GraphData:
    """Undirected simple graph on ``K`` vertices; ``r`` holds every pair ``i < j``."""

    def __init__(self, K: int, edges: Iterable[tuple[int, int]]):
        self.K = _check_K(K)
        self.pair_i, self.pair_j = np.triu_indices(self.K, 1)
        r = np.zeros((self.K, self.K), dtype=np.int64)
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise StructureError("self-loops are not allowed")
            if not (0 <= i < self.K and 0 <= j < self.K):
                raise StructureError(f"vertex ids must lie in [0, {self.K})")
            lo, hi = min(i, j), max(i, j)
            if r[lo, hi]:
                raise StructureError(f"duplicate edge ({i}, {j})")
            r[lo, hi] = 1
        self.r = r[self.pair_i, self.pair_j].astype(float)
        self.degree = (np.bincount(self.pair_i, weights=self.r, minlength=self.K)
                       + np.bincount(self.pair_j, weights=self.r, minlength=self.K))

    @property
    def edges(self) -> list[tuple[int, int]]:
        m = self.r > 0
        return list(zip(self.pair_i[m].tolist(), self.pair_j[m].tolist()))

    def __repr__(self):
        return f"GraphData(K={self.K}, edges={int(self.r.sum())})"


@dataclass(frozen=True)
class ChoiceData:
    """Binary feature vectors of ``n`` objects and binary choices among them.

    ``comparisons`` holds ``(i, j, outcome)``: outcome 1 means object ``i``
    was chosen over ``j``, outcome 0 means ``j`` was chosen over ``i``.
    """

    features: np.ndarray
    comparisons: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        f = np.asarray(self.features)
        if f.ndim != 2 or not np.all((f == 0) | (f == 1)):
            raise StructureError("features must be a 0/1 matrix")
        object.__setattr__(self, "features", f.astype(np.int64))
        comps = tuple((int(i), int(j), int(o)) for i, j, o in self.comparisons)
        for i, j, o in comps:
            if o not in (0, 1):
                raise DomainError("choice outcome must be 0 or 1")
            if not (0 <= i < f.shape[0] and 0 <= j < f.shape[0]):
                raise StructureError("object ids out of range")
        object.__setattr__(self, "comparisons", comps)

    @property
    def K(self) -> int:
        return self.features.shape[1]
