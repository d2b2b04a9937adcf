"""Reading and writing datasets, fits and chains.

Dataset formats (UTF-8, one record per line, no quoting, ids matching
``[A-Za-z0-9_.-]+``):

``matches``   ``winner,loser[,count]``
``home``      ``home,away,home_won`` with ``home_won`` in {0, 1}
``ties``      ``player_a,player_b,score`` with score 1 (a won), 0.5 or 0
``groups``    ``w1,w2,...;l1,l2,...`` (winning team first)
``rankings``  ``id1,id2,...`` best first
``graph``     first line ``K``, then ``i,j`` edge lines with ``0 <= i, j < K``

The first three formats accept an optional header line naming the columns
exactly as above.  Blank lines are ignored.  Player ids are assigned dense
indices in order of first appearance, or appended to a supplied
:class:`IdMap` so that held-out files share the indexing of a fit.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (
    GraphData,
    GroupData,
    GroupOutcome,
    HomeCounts,
    PairwiseCounts,
    RankingData,
    TieCounts,
)
from .exceptions import StructureError
from .gibbs import ChainOutput

FORMATS = ("matches", "home", "ties", "groups", "rankings", "graph")
HEADERS = {
    "matches": (("winner", "loser"), ("winner", "loser", "count")),
    "home": (("home", "away", "home_won"),),
    "ties": (("player_a", "player_b", "score"),),
}
ID_PATTERN = re.compile(r"[A-Za-z0-9_.-]+")


class ParseError(StructureError):
    """A dataset line is malformed; the message names the file and line number."""

    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = str(path)
        self.lineno = lineno


class IdMap:
    """Bidirectional mapping between external string ids and dense indices."""

    def __init__(self, names=()):
        self.names: list[str] = []
        self._index: dict[str, int] = {}
        for n in names:
            self.add(n)

    def add(self, name: str) -> int:
        if name not in self._index:
            if not ID_PATTERN.fullmatch(name):
                raise StructureError(f"invalid id {name!r}; ids must match [A-Za-z0-9_.-]+")
            self._index[name] = len(self.names)
            self.names.append(name)
        return self._index[name]

    def __getitem__(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.names)

    def copy(self) -> "IdMap":
        return IdMap(self.names)


@dataclass
class Dataset:
    """Parsed file: the model container, the id map and the records in file order."""

    format: str
    data: object
    ids: IdMap
    records: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.data.K


def _split_ids(text, ids, path, lineno):
    parts = text.split(",")
    try:
        return [ids.add(p) for p in parts]
    except StructureError as exc:
        raise ParseError(path, lineno, str(exc)) from None


def _int_field(text, path, lineno, what, allowed=None):
    try:
        v = int(text)
    except ValueError:
        raise ParseError(path, lineno, f"{what} must be an integer, got {text!r}") from None
    if allowed is not None and v not in allowed:
        raise ParseError(path, lineno, f"{what} must be one of {sorted(allowed)}, got {v}")
    return v


def _parse_lines(fmt, lines, ids, path):
    records = []
    header_ok = HEADERS.get(fmt, ())
    first = True
    for lineno, raw in lines:
        line = raw.strip()
        if not line:
            continue
        if first and tuple(line.split(",")) in header_ok:
            first = False
            continue
        first = False
        if fmt == "groups":
            halves = line.split(";")
            if len(halves) != 2 or not halves[0] or not halves[1]:
                raise ParseError(path, lineno, "expected 'winners;losers'")
            w = _split_ids(halves[0], ids, path, lineno)
            l = _split_ids(halves[1], ids, path, lineno)
            if set(w) & set(l):
                raise ParseError(path, lineno, "a player appears on both teams (self-comparison)")
            if len(set(w)) != len(w) or len(set(l)) != len(l):
                raise ParseError(path, lineno, "a player is repeated within a team")
            records.append((tuple(w), tuple(l)))
            continue
        parts = line.split(",")
        if fmt == "rankings":
            r = _split_ids(line, ids, path, lineno)
            if len(r) < 2:
                raise ParseError(path, lineno, "a ranking needs at least two ids")
            if len(set(r)) != len(r):
                raise ParseError(path, lineno, "ranking repeats an id (self-comparison)")
            records.append(tuple(r))
            continue
        n_fields = {"matches": (2, 3), "home": (3,), "ties": (3,)}[fmt]
        if len(parts) not in n_fields:
            raise ParseError(path, lineno, f"expected {' or '.join(map(str, n_fields))} fields, "
                                           f"got {len(parts)}")
        i, j = _split_ids(",".join(parts[:2]), ids, path, lineno)
        if i == j:
            raise ParseError(path, lineno, f"self-comparison of {parts[0]!r}")
        if fmt == "matches":
            c = 1 if len(parts) == 2 else _int_field(parts[2], path, lineno, "count")
            if c < 0:
                raise ParseError(path, lineno, "count must be nonnegative")
            records.append((i, j, c))
        elif fmt == "home":
            records.append((i, j, _int_field(parts[2], path, lineno, "home_won", {0, 1})))
        else:
            try:
                s = float(parts[2])
            except ValueError:
                s = None
            if s not in (0.0, 0.5, 1.0):
                raise ParseError(path, lineno, f"score must be 0, 0.5 or 1, got {parts[2]!r}")
            records.append((i, j, s))
    return records


def _parse_graph(lines, path):
    lines = [(n, l.strip()) for n, l in lines if l.strip()]
    if not lines:
        raise ParseError(path, 1, "graph file needs a first line with K")
    lineno, head = lines[0]
    K = _int_field(head, path, lineno, "K")
    if K < 2:
        raise ParseError(path, lineno, "K must be at least 2")
    ids = IdMap(str(k) for k in range(K))
    seen = set()
    records = []
    for lineno, line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected 2 fields, got {len(parts)}")
        i = _int_field(parts[0], path, lineno, "vertex")
        j = _int_field(parts[1], path, lineno, "vertex")
        if not (0 <= i < K and 0 <= j < K):
            raise ParseError(path, lineno, f"vertex out of range [0, {K})")
        if i == j:
            raise ParseError(path, lineno, "self-loop")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(path, lineno, f"duplicate edge {key}")
        seen.add(key)
        records.append((i, j))
    return Dataset("graph", GraphData(K, records), ids, records)


def build_container(fmt: str, K: int, records):
    if fmt == "matches":
        arr = np.asarray(records, dtype=np.int64).reshape(-1, 3)
        return PairwiseCounts(K, arr[:, 0], arr[:, 1], arr[:, 2])
    if fmt == "home":
        return HomeCounts.from_games(K, records)
    if fmt == "ties":
        return TieCounts.from_games(K, records)
    if fmt == "groups":
        return GroupData(K, [GroupOutcome(w, l) for w, l in records])
    if fmt == "rankings":
        return RankingData(K, [list(r) for r in records])
    if fmt == "graph":
        return GraphData(K, records)
    raise StructureError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def parse_text(text: str, fmt: str, ids: IdMap | None = None, path="<string>") -> Dataset:
    if fmt not in FORMATS:
        raise StructureError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    lines = list(enumerate(text.split("\n"), start=1))
    if fmt == "graph":
        return _parse_graph(lines, path)
    ids = IdMap() if ids is None else ids.copy()
    records = _parse_lines(fmt, lines, ids, path)
    if len(ids) < 2:
        raise ParseError(path, len(lines), "a dataset needs at least two distinct players")
    return Dataset(fmt, build_container(fmt, len(ids), records), ids, records)


def parse_dataset(path, fmt: str, ids: IdMap | None = None) -> Dataset:
    """Parse a dataset file; with ``ids`` given, known ids keep their indices."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_text(text, fmt, ids, path)


def _fmt_score(s: float) -> str:
    return {1.0: "1", 0.5: "0.5", 0.0: "0"}[float(s)]


def format_dataset(ds: Dataset) -> str:
    """Canonical text of a dataset: no header, records in order, ``\\n`` terminated."""
    n = ds.ids.names
    out = []
    if ds.format == "graph":
        out.append(str(ds.K))
        out += [f"{i},{j}" for i, j in ds.records]
    elif ds.format == "matches":
        out += [f"{n[i]},{n[j]}" + ("" if c == 1 else f",{c}") for i, j, c in ds.records]
    elif ds.format == "home":
        out += [f"{n[i]},{n[j]},{w}" for i, j, w in ds.records]
    elif ds.format == "ties":
        out += [f"{n[i]},{n[j]},{_fmt_score(s)}" for i, j, s in ds.records]
    elif ds.format == "groups":
        out += [",".join(n[k] for k in w) + ";" + ",".join(n[k] for k in l) for w, l in ds.records]
    elif ds.format == "rankings":
        out += [",".join(n[k] for k in r) for r in ds.records]
    else:
        raise StructureError(f"unknown format {ds.format!r}")
    return "".join(line + "\n" for line in out)


def serialize_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_dataset(ds))


# --------------------------------------------------------------------------
# numbers, JSON and chains


def fmt_float(x: float) -> str:
    """17 significant digits: exact round trip for 64-bit floats."""
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, non-finite numbers as ``null``.

    Floats are written in Python's shortest round-trip form, which reproduces
    every 64-bit value exactly.
    """
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def kept_iterations(burn_in: int, thin: int, n_rows: int) -> np.ndarray:
    """1-based iteration numbers of the kept draws."""
    return burn_in + thin * np.arange(1, n_rows + 1)


def format_chains(chains: list[ChainOutput]) -> str:
    if not chains:
        raise StructureError("no chains to write")
    cols = chains[0].columns
    lines = [",".join(["chain", "iteration", *cols])]
    for k, ch in enumerate(chains):
        if ch.columns != cols:
            raise StructureError("chains have different columns")
        cfg = ch.metadata.get("config", {})
        its = kept_iterations(cfg.get("burn_in", 0), cfg.get("thin", 1), ch.samples.shape[0])
        for it, row in zip(its, ch.samples):
            lines.append(",".join([str(k), str(int(it)), *map(fmt_float, row)]))
    return "".join(line + "\n" for line in lines)


def write_chains_csv(chains: list[ChainOutput], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_chains(chains))


def read_chains_csv(path) -> list[ChainOutput]:
    """Read a chain CSV back into one :class:`ChainOutput` per chain."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["chain", "iteration"]:
        raise StructureError(f"{path}: not a chain file (header must start with chain,iteration)")
    cols = rows[0][2:]
    body = rows[1:]
    try:
        arr = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(-1, len(cols) + 2)
    except ValueError as exc:
        raise StructureError(f"{path}: {exc}") from None
    out = []
    for k in np.unique(arr[:, 0]).astype(int):
        sel = arr[:, 0] == k
        out.append(ChainOutput(arr[sel, 2:], list(cols), {}, None,
                               {"chain": int(k), "iterations": arr[sel, 1].astype(int).tolist()}))
    return out


def skill_labels(columns) -> list[str]:
    """Player ids from ``lambda[<id>]`` column labels."""
    return [c[len("lambda["):-1] for c in columns if c.startswith("lambda[")]
