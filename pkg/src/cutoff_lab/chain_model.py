"""Symmetry-reduced chains for the lazy simple random walk.

Two reductions are provided:

* ``CollapsedChain`` identifies all vertices of a level, giving a lazy
  birth-and-death chain on ``0..h``.
* ``QuotientChain`` keeps a *spine* (the minimal subtree containing the
  root and up to two marked vertices) and lumps every off-spine vertex by
  (spine attachment vertex, depth below it). The automorphisms fixing the
  marked vertices act transitively on each such class, so the lumping is
  exact for walks started on the spine.

Both chains store class-total transition probabilities in a sparse matrix:
row ``i`` gives where the mass of class ``i`` goes in one step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, InvalidPair
from .tree_model import TreeProfile, VertexPair

SUM_TOL = 1e-12


def _csr(n: int, rows: list[int], cols: list[int], vals: list[float]) -> sp.csr_matrix:
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class CollapsedChain:
    profile: TreeProfile
    up: np.ndarray
    down: np.ndarray
    hold: np.ndarray
    multiplicity: np.ndarray
    transition: sp.csr_matrix = field(repr=False)

    @property
    def n_states(self) -> int:
        return len(self.hold)

    @property
    def h(self) -> int:
        return self.n_states - 1

    @property
    def stationary(self) -> np.ndarray:
        return self.profile.pi_levels()

    def dense(self) -> np.ndarray:
        return self.transition.toarray()

    def restriction(self, lo: int, hi: int | None = None) -> np.ndarray:
        """Substochastic matrix of the chain killed outside ``lo..hi``."""
        hi = self.h if hi is None else hi
        return self.dense()[lo : hi + 1, lo : hi + 1]

    def dump(self) -> str:
        return json.dumps(
            {
                "kind": "collapsed",
                "tree": list(self.profile.children_counts),
                "up": self.up.tolist(),
                "down": self.down.tolist(),
                "hold": self.hold.tolist(),
                "multiplicity": self.multiplicity.tolist(),
            },
            indent=2,
        )


def collapse(profile: TreeProfile) -> CollapsedChain:
    """Level (birth-and-death) projection of the lazy walk.

    ``up`` moves toward the root, ``down`` toward the leaves.
    """
    profile.require_nondegenerate()
    h = profile.height
    deg = profile.level_degrees
    up = np.zeros(h + 1)
    down = np.zeros(h + 1)
    for k in range(h + 1):
        if k >= 1:
            up[k] = 1.0 / (2 * deg[k])
        if k < h:
            down[k] = profile.children_counts[k] / (2 * deg[k])
    hold = 1.0 - up - down
    rows, cols, vals = [], [], []
    for k in range(h + 1):
        rows.append(k), cols.append(k), vals.append(hold[k])
        if k >= 1:
            rows.append(k), cols.append(k - 1), vals.append(up[k])
        if k < h:
            rows.append(k), cols.append(k + 1), vals.append(down[k])
    return CollapsedChain(
        profile=profile,
        up=up,
        down=down,
        hold=hold,
        multiplicity=np.array(profile.level_sizes, dtype=float),
        transition=_csr(h + 1, rows, cols, vals),
    )


# QuotientChain state descriptors:
#   ("spine", level, branch)  with branch in {"trunk", "x", "y"}
#   ("bush", spine_index, depth)


@dataclass(frozen=True, eq=False)
class QuotientChain:
    profile: TreeProfile
    states: tuple[tuple, ...]
    transition: sp.csr_matrix = field(repr=False)
    multiplicity: np.ndarray
    stationary: np.ndarray
    labels: dict
    level_of: np.ndarray
    absorbing: int | None = None

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index_of(self, descriptor: tuple) -> int:
        return self._index[descriptor]

    @cached_property
    def _index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        row = self.transition.getrow(i)
        return list(zip(row.indices.tolist(), row.data.tolist()))

    def dense(self) -> np.ndarray:
        return self.transition.toarray()

    def delta(self, label: str) -> np.ndarray:
        d = np.zeros(self.n_states)
        d[self.labels[label]] = 1.0
        return d

    def dump(self) -> str:
        return json.dumps(
            {
                "kind": "quotient",
                "tree": list(self.profile.children_counts),
                "states": [list(s) for s in self.states],
                "labels": self.labels,
                "absorbing": self.absorbing,
                "multiplicity": self.multiplicity.tolist(),
                "transitions": [
                    [[j, p] for j, p in self.neighbors(i)] for i in range(self.n_states)
                ],
            },
            indent=2,
        )


def _spine(profile: TreeProfile, marked) -> tuple[list[tuple], list[int], dict]:
    """Spine vertices (descriptor, parent index) and the marked-vertex labels."""
    if isinstance(marked, VertexPair):
        marked.validate(profile)
        lx, ly, lq = marked.lx, marked.ly, marked.lq
    else:
        level = int(marked)
        if not 0 <= level <= profile.height:
            raise InvalidPair(f"marked level {level} outside 0..{profile.height}")
        lx, ly, lq = level, level, level

    states: list[tuple] = []
    parents: list[int] = []
    for k in range(lq + 1):
        states.append(("spine", k, "trunk"))
        parents.append(k - 1)
    junction = lq
    labels = {"root": 0}
    for name, target in (("x", lx), ("y", ly)):
        prev = junction
        for k in range(lq + 1, target + 1):
            states.append(("spine", k, name))
            parents.append(prev)
            prev = len(states) - 1
        labels[name] = prev
    if not isinstance(marked, VertexPair):
        del labels["y"]
    return states, parents, labels


def build_quotient(
    profile: TreeProfile,
    marked: Union[int, VertexPair],
    absorbing: str | None = None,
) -> QuotientChain:
    """Quotient of the lazy walk under automorphisms fixing the marked vertices.

    ``marked`` is either a single level (one marked vertex) or a VertexPair
    (two marked vertices with their nearest-common-ancestor level).
    ``absorbing`` names a label (``"root"``, ``"x"`` or ``"y"``) whose state
    becomes absorbing.
    """
    profile.require_nondegenerate()
    h = profile.height
    deg = profile.level_degrees
    spine, parents, labels = _spine(profile, marked)
    if absorbing is not None and absorbing not in labels:
        raise InvalidPair(f"no marked vertex labelled {absorbing!r}")

    n_spine = len(spine)
    spine_children: list[list[int]] = [[] for _ in range(n_spine)]
    for i, p in enumerate(parents):
        if p >= 0:
            spine_children[p].append(i)

    states = list(spine)
    level_of = [s[1] for s in spine]
    mult = [1.0] * n_spine
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    def add(i, j, p):
        rows.append(i), cols.append(j), vals.append(p)

    for i, (_, k, _) in enumerate(spine):
        off = profile.children(k) - len(spine_children[i])
        add(i, i, 0.5)
        if parents[i] >= 0:
            add(i, parents[i], 1.0 / (2 * deg[k]))
        for j in spine_children[i]:
            add(i, j, 1.0 / (2 * deg[k]))
        if off <= 0:
            continue
        first = len(states)
        for d in range(1, h - k + 1):
            states.append(("bush", i, d))
            level_of.append(k + d)
            mult.append(off * profile.level_sizes[k + d] / profile.level_sizes[k + 1])
        add(i, first, off / (2 * deg[k]))
        for d in range(1, h - k + 1):
            s = first + d - 1
            j = k + d
            add(s, s, 0.5)
            add(s, i if d == 1 else s - 1, 1.0 / (2 * deg[j]))
            if j < h:
                add(s, s + 1, profile.children_counts[j] / (2 * deg[j]))

    n_states = len(states)
    P = _csr(n_states, rows, cols, vals).tolil()
    absorbing_index = None
    if absorbing is not None:
        absorbing_index = labels[absorbing]
        P.rows[absorbing_index] = [absorbing_index]
        P.data[absorbing_index] = [1.0]
    mult_arr = np.array(mult)
    level_arr = np.array(level_of)
    pi = mult_arr * np.array([deg[k] for k in level_of]) / (2.0 * profile.edge_count)
    return QuotientChain(
        profile=profile,
        states=tuple(states),
        transition=P.tocsr(),
        multiplicity=mult_arr,
        stationary=pi,
        labels=labels,
        level_of=level_arr,
        absorbing=absorbing_index,
    )


def apply_step(chain: CollapsedChain | QuotientChain, dist: np.ndarray) -> np.ndarray:
    """One step of the chain: ``dist @ P``."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (chain.n_states,):
        raise DimensionMismatch(
            f"distribution has shape {dist.shape}, chain has {chain.n_states} states"
        )
    if abs(dist.sum() - 1.0) > SUM_TOL:
        raise DimensionMismatch(f"distribution sums to {dist.sum()!r}, not 1")
    return chain.transition.T @ dist


def evolve(chain: CollapsedChain | QuotientChain, dists: np.ndarray, steps: int) -> np.ndarray:
    """Advance a stack of distributions (one per row) by ``steps`` steps."""
    PT = chain.transition.T.tocsr()
    out = np.asarray(dists, dtype=float).T.copy()
    for _ in range(steps):
        out = PT @ out
    return out.T
