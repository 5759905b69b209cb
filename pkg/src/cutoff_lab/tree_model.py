"""Spherically symmetric trees described by per-level children counts.

A tree of height ``h`` is given by ``children_counts = (c_0, ..., c_{h-1})``
where every vertex at level ``k`` has ``c_k`` children. Everything else
(level sizes, degrees, stationary masses) is derived.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    CutoffLabError,
    DegenerateTree,
    InvalidPair,
    NonPositiveChildrenCount,
    OracleTooLarge,
)

DEFAULT_ORACLE_CAP = 5000
ORACLE_CAP_ENV = "CUTOFFLAB_ORACLE_CAP"


def oracle_cap() -> int:
    """Vertex cap for dense/explicit oracles; overridable via the environment."""
    raw = os.environ.get(ORACLE_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_ORACLE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise CutoffLabError(f"{ORACLE_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise CutoffLabError(f"{ORACLE_CAP_ENV} must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class TreeProfile:
    children_counts: tuple[int, ...]
    level_sizes: tuple[int, ...] = field(init=False)
    level_degrees: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.children_counts)
        for k, c in enumerate(counts):
            if c <= 0:
                raise NonPositiveChildrenCount(
                    f"children count at level {k} must be >= 1, got {c}"
                )
        sizes = [1]
        for c in counts:
            sizes.append(sizes[-1] * c)
        h = len(counts)
        if h == 0:
            degrees = [0]
        else:
            degrees = [counts[0]] + [c + 1 for c in counts[1:]] + [1]
        object.__setattr__(self, "children_counts", counts)
        object.__setattr__(self, "level_sizes", tuple(sizes))
        object.__setattr__(self, "level_degrees", tuple(degrees))

    @property
    def height(self) -> int:
        return len(self.children_counts)

    h = height

    @property
    def vertex_count(self) -> int:
        return sum(self.level_sizes)

    n = vertex_count

    @property
    def edge_count(self) -> int:
        return self.vertex_count - 1

    def children(self, level: int) -> int:
        """Children per vertex at ``level`` (0 for leaves)."""
        return self.children_counts[level] if level < self.height else 0

    def pi_vertex(self, level: int) -> float:
        """Stationary mass of a single vertex at ``level``."""
        if self.height == 0:
            return 1.0
        return self.level_degrees[level] / (2.0 * self.edge_count)

    def pi_levels(self) -> np.ndarray:
        """Total stationary mass of each level."""
        return np.array(
            [self.level_sizes[k] * self.pi_vertex(k) for k in range(self.height + 1)]
        )

    def subtree_mass(self, level: int) -> float:
        """Stationary mass of the full subtree hanging from one level-``level`` vertex."""
        base = self.level_sizes[level]
        return float(
            sum(
                self.level_sizes[j] / base * self.pi_vertex(j)
                for j in range(level, self.height + 1)
            )
        )

    def is_segment(self) -> bool:
        return all(c == 1 for c in self.children_counts)

    def label(self) -> str:
        return "[" + ",".join(str(c) for c in self.children_counts) + "]"

    def require_nondegenerate(self) -> None:
        if self.height == 0:
            raise DegenerateTree("tree of height 0 has a single vertex")

    def to_spec(self) -> dict:
        return {"children": list(self.children_counts)}


def build_profile(children_counts: Sequence[int]) -> TreeProfile:
    return TreeProfile(tuple(children_counts))


def enumerate_profiles(max_h: int, max_children: int) -> list[TreeProfile]:
    """All children-count sequences of length 1..max_h with entries in
    1..max_children, ordered by length and then lexicographically."""
    if max_h < 1 or max_children < 1:
        raise CutoffLabError("enumerate_profiles needs max_h >= 1 and max_children >= 1")
    out = []
    for length in range(1, max_h + 1):
        for counts in itertools.product(range(1, max_children + 1), repeat=length):
            out.append(TreeProfile(counts))
    return out


@dataclass(frozen=True)
class VertexPair:
    """Symmetry class of an ordered vertex pair (x, y) with nearest common
    ancestor q. Only the three levels matter."""

    lx: int
    ly: int
    lq: int

    @property
    def x_is_ancestor(self) -> bool:
        return self.lq == self.lx and self.ly > self.lx

    @property
    def y_is_ancestor(self) -> bool:
        return self.lq == self.ly and self.lx > self.ly

    @property
    def distance(self) -> int:
        return (self.lx - self.lq) + (self.ly - self.lq)

    def validate(self, profile: TreeProfile) -> None:
        h = profile.height
        if not (0 <= self.lq <= min(self.lx, self.ly)):
            raise InvalidPair(f"need 0 <= lq <= min(lx, ly), got {self}")
        if max(self.lx, self.ly) > h:
            raise InvalidPair(f"levels of {self} exceed height {h}")
        if self.lx == self.ly == self.lq:
            raise InvalidPair(f"{self} describes x == y; use return times")
        if self.lq < self.lx and self.lq < self.ly and profile.children(self.lq) < 2:
            raise InvalidPair(
                f"{self} branches at level {self.lq} but c_{self.lq} = "
                f"{profile.children(self.lq)} < 2"
            )

    @classmethod
    def parse(cls, text: str) -> "VertexPair":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"pair must be 'lx,ly,lq', got {text!r}")
        return cls(*(int(p) for p in parts))


def representative_pairs(profile: TreeProfile) -> list[VertexPair]:
    """One VertexPair per symmetry class of ordered pairs x != y."""
    h = profile.height
    out = []
    for lx in range(h + 1):
        for ly in range(h + 1):
            for lq in range(min(lx, ly) + 1):
                pair = VertexPair(lx, ly, lq)
                if lx == ly == lq:
                    continue
                if lq < lx and lq < ly and profile.children(lq) < 2:
                    continue
                out.append(pair)
    return out


def special_level(profile: TreeProfile) -> int:
    """Level of the root if it branches, else of the closest branching point,
    else ``h`` for a segment."""
    profile.require_nondegenerate()
    if profile.children_counts[0] >= 2:
        return 0
    for k, c in enumerate(profile.children_counts):
        if c >= 2:
            return k
    return profile.height


def pi_offpath_mass(profile: TreeProfile, pair: VertexPair) -> float:
    """Stationary mass of the components of T minus x that do not contain y."""
    profile.require_nondegenerate()
    pair.validate(profile)
    lx = pair.lx
    if pair.x_is_ancestor:
        return 1.0 - profile.pi_vertex(lx) - profile.subtree_mass(lx + 1)
    return profile.subtree_mass(lx) - profile.pi_vertex(lx)


@dataclass(frozen=True)
class ExplicitTree:
    """Concrete tree with breadth-first vertex numbering (root = 0)."""

    profile: TreeProfile
    parent: tuple[int, ...]
    level: tuple[int, ...]
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.parent)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def first_vertex_at(self, level: int) -> int:
        return sum(self.profile.level_sizes[:level])

    def children_of(self, v: int) -> list[int]:
        return [u for u in self.adjacency[v] if self.parent[u] == v and u != v]

    def stationary(self) -> np.ndarray:
        deg = np.array([self.degree(v) for v in range(self.n)], dtype=float)
        return deg / deg.sum()


def explicit_tree(profile: TreeProfile, cap: int | None = None) -> ExplicitTree:
    cap = oracle_cap() if cap is None else cap
    if profile.vertex_count > cap:
        raise OracleTooLarge(
            f"tree {profile.label()} has {profile.vertex_count} vertices, cap is {cap}"
        )
    parent = [-1]
    level = [0]
    adjacency: list[list[int]] = [[]]
    frontier = [0]
    for k, c in enumerate(profile.children_counts):
        nxt = []
        for v in frontier:
            for _ in range(c):
                u = len(parent)
                parent.append(v)
                level.append(k + 1)
                adjacency.append([v])
                adjacency[v].append(u)
                nxt.append(u)
        frontier = nxt
    return ExplicitTree(
        profile=profile,
        parent=tuple(parent),
        level=tuple(level),
        adjacency=tuple(tuple(a) for a in adjacency),
    )


def profile_from_explicit(tree: ExplicitTree) -> TreeProfile:
    """Recover children counts from per-level degrees of an explicit tree."""
    h = max(tree.level)
    counts = []
    for k in range(h):
        v = tree.first_vertex_at(k)
        counts.append(tree.degree(v) - (0 if k == 0 else 1))
    return TreeProfile(tuple(counts))


# -- tree-spec files -----------------------------------------------------------

FAMILIES = ("segment", "binary", "custom")


def parse_tree_spec(obj) -> TreeProfile:
    if not isinstance(obj, dict) or "children" not in obj:
        raise CutoffLabError('tree spec must be an object with a "children" array')
    children = obj["children"]
    if not isinstance(children, list) or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in children
    ):
        raise CutoffLabError('"children" must be an array of integers')
    return build_profile(children)


def load_tree_spec(path: str | Path) -> TreeProfile:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CutoffLabError(f"cannot read tree spec {path}: {exc}") from exc
    return parse_tree_spec(obj)


def family_profiles(spec: dict) -> Iterator[tuple[int, TreeProfile]]:
    """Yield ``(h, profile)`` for each member of a family spec.

    ``custom`` families take the first ``h`` entries of ``children``,
    repeating the pattern when ``h`` exceeds its length.
    """
    if not isinstance(spec, dict):
        raise CutoffLabError("family spec must be an object")
    kind = spec.get("family")
    if kind not in FAMILIES:
        raise CutoffLabError(f"family must be one of {FAMILIES}, got {kind!r}")
    h_range = spec.get("h_range")
    if (
        not isinstance(h_range, list)
        or len(h_range) != 2
        or not all(isinstance(v, int) for v in h_range)
    ):
        raise CutoffLabError('family spec needs "h_range": [a, b]')
    a, b = h_range
    if a < 1:
        raise CutoffLabError("family members need h >= 1")
    pattern = None
    if kind == "custom":
        pattern = spec.get("children")
        if not isinstance(pattern, list) or not pattern:
            raise CutoffLabError('custom family needs a non-empty "children" array')
    for h in range(a, b + 1):
        if kind == "segment":
            counts = [1] * h
        elif kind == "binary":
            counts = [2] * h
        else:
            counts = [pattern[k % len(pattern)] for k in range(h)]
        yield h, build_profile(counts)
