"""First and second moments of hitting and return times.

All moments come from linear solves on absorbing restrictions:
``(I - Q) e = 1`` for means and ``(I - Q) s = 1 + 2 Q e`` for second moments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chain_model import CollapsedChain, QuotientChain, build_quotient, collapse
from .errors import InvalidPair, NoBranching, SingularSystem
from .tree_model import TreeProfile, VertexPair, special_level

RETURN_TOL = 1e-9


@dataclass(frozen=True)
class HittingMoments:
    E: float
    E2: float
    method: str = "linear-system"

    @property
    def Var(self) -> float:
        return self.E2 - self.E**2

    @property
    def var_ratio(self) -> float:
        return self.Var / self.E**2


def absorbing_moments(P: sp.spmatrix, targets) -> tuple[np.ndarray, np.ndarray]:
    """Mean and second moment of the hitting time of ``targets`` from every state."""
    n = P.shape[0]
    targets = np.atleast_1d(np.asarray(targets, dtype=int))
    free = np.setdiff1d(np.arange(n), targets)
    e = np.zeros(n)
    s = np.zeros(n)
    if len(free) == 0:
        return e, s
    Q = sp.csc_matrix(P)[free][:, free]
    A = sp.identity(len(free), format="csc") - Q
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            lu = spla.splu(A.tocsc())
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        raise SingularSystem(f"absorbing system is singular: {exc}") from exc
    ef = lu.solve(np.ones(len(free)))
    sf = lu.solve(1.0 + 2.0 * (Q @ ef))
    if not (np.all(np.isfinite(ef)) and np.all(np.isfinite(sf))):
        raise SingularSystem("absorbing system produced non-finite moments")
    e[free] = ef
    s[free] = sf
    return e, s


def collapsed_hitting(chain: CollapsedChain, target: int) -> tuple[np.ndarray, np.ndarray]:
    """Moments of the time to reach level ``target`` from every level."""
    return absorbing_moments(chain.transition, [target])


def hitting_moments(profile: TreeProfile, pair: VertexPair) -> HittingMoments:
    """Moments of tau_y for the walk started at x (x != y)."""
    chain = build_quotient(profile, pair, absorbing="y")
    e, s = absorbing_moments(chain.transition, [chain.labels["y"]])
    x = chain.labels["x"]
    return HittingMoments(float(e[x]), float(s[x]))


# for x != y the first positive hitting time coincides with tau_y
hitting_moments_plus = hitting_moments


def return_moments(profile: TreeProfile, level: int) -> HittingMoments:
    """Moments of the return time tau_x^+ for a vertex x at ``level``.

    First-step mixture: hold (return after 1 step), step to the parent, or
    step to one of the children, then hit x.
    """
    profile.require_nondegenerate()
    if not 0 <= level <= profile.height:
        raise InvalidPair(f"level {level} outside 0..{profile.height}")
    deg = profile.level_degrees[level]
    branches = [(0.5, 0.0, 0.0)]
    if level > 0:
        m = hitting_moments(profile, VertexPair(level - 1, level, level - 1))
        branches.append((0.5 / deg, m.E, m.E2))
    if level < profile.height:
        m = hitting_moments(profile, VertexPair(level + 1, level, level))
        branches.append((0.5 * profile.children(level) / deg, m.E, m.E2))
    E = sum(p * (1.0 + e) for p, e, _ in branches)
    E2 = sum(p * (1.0 + 2.0 * e + e2) for p, e, e2 in branches)
    expected = 2.0 * profile.edge_count / deg
    if abs(E - expected) > RETURN_TOL * expected:
        raise SingularSystem(
            f"return-time mixture {E!r} disagrees with 1/pi(x) = {expected!r}"
        )
    return HittingMoments(E, E2)


def offpath_mask(chain: QuotientChain, pair: VertexPair) -> np.ndarray:
    """States of the pair quotient lying in the components of T minus x not
    containing y."""
    x = chain.labels["x"]
    if pair.x_is_ancestor:
        keep = {("spine", k, "y") for k in range(pair.lx + 1, pair.ly + 1)}
        on_y_side = [s in keep for s in chain.states]
        spine_y = {i for i, flag in enumerate(on_y_side) if flag}
        mask = np.ones(chain.n_states, dtype=bool)
        mask[x] = False
        for i, s in enumerate(chain.states):
            if i in spine_y or (s[0] == "bush" and s[1] in spine_y):
                mask[i] = False
        return mask
    # y lies through the parent of x: the components not containing y are
    # the bushes hanging below x (x is the end of its spine branch)
    return np.array([s[0] == "bush" and s[1] == x for s in chain.states])


def expected_offpath_time(profile: TreeProfile, pair: VertexPair) -> float:
    """Expected number of steps spent in the off-path set before tau_y."""
    chain = build_quotient(profile, pair, absorbing="y")
    y = chain.labels["y"]
    free = np.array([i for i in range(chain.n_states) if i != y])
    Q = sp.csc_matrix(chain.transition)[free][:, free]
    A = (sp.identity(len(free), format="csc") - Q).T.tocsc()
    x_pos = int(np.searchsorted(free, chain.labels["x"]))
    rhs = np.zeros(len(free))
    rhs[x_pos] = 1.0
    green_row = spla.spsolve(A, rhs)
    return float(green_row[offpath_mask(chain, pair)[free]].sum())


def commute_time(profile: TreeProfile, pair: VertexPair) -> float:
    back = VertexPair(pair.ly, pair.lx, pair.lq)
    return hitting_moments(profile, pair).E + hitting_moments(profile, back).E


def stationary_set_hitting(profile: TreeProfile, excluded_subtrees: int) -> tuple[float, float]:
    """E_pi(tau_D) and pi(D) where D removes ``b`` of the subtrees below v*.

    v* sits at the special level; every path out of the removed subtrees
    passes v*, so the hitting time of D from a level-j vertex in them is the
    collapsed hitting time of level l.
    """
    profile.require_nondegenerate()
    ell = special_level(profile)
    if ell >= profile.height:
        raise NoBranching(f"{profile.label()} is a segment; v* has a single subtree")
    r = profile.children_counts[ell]
    b = excluded_subtrees
    if r < 2:
        raise NoBranching(f"v* has {r} subtrees")
    if not 1 <= b <= r - 1:
        raise ValueError(f"need 1 <= b <= r-1 = {r - 1}, got {b}")
    chain = collapse(profile)
    e, _ = collapsed_hitting(chain, ell)
    pi_levels = chain.stationary
    frac = b / r  # share of each deeper level inside the b removed subtrees
    mass_B = sum(frac * pi_levels[j] for j in range(ell + 1, profile.height + 1))
    E_pi = sum(frac * pi_levels[j] * e[j] for j in range(ell + 1, profile.height + 1))
    return float(E_pi), float(1.0 - mass_B)
