"""Total-variation evolution, mixing times and the coupling upper bound."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain_model import QuotientChain, build_quotient, collapse, evolve
from .errors import DimensionMismatch, NonConvergence
from .hitting import collapsed_hitting
from .tree_model import TreeProfile, special_level

DEFAULT_EPS_GRID = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99)
DEFAULT_T_CAP = 10**7
SUM_TOL = 1e-12


def tv_distance(d1, d2, multiplicities=None) -> float:
    """Half the (multiplicity-weighted) L1 distance.

    With ``multiplicities`` the vectors hold per-vertex probabilities of each
    class, so ``sum(multiplicities * d)`` must be 1.
    """
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    if d1.shape != d2.shape or d1.ndim != 1:
        raise DimensionMismatch(f"shapes {d1.shape} and {d2.shape} differ")
    w = np.ones_like(d1) if multiplicities is None else np.asarray(multiplicities, float)
    if w.shape != d1.shape:
        raise DimensionMismatch("multiplicities do not match the distributions")
    for d in (d1, d2):
        if abs(float(w @ d) - 1.0) > SUM_TOL:
            raise DimensionMismatch(f"distribution sums to {float(w @ d)!r}, not 1")
    return 0.5 * float(w @ np.abs(d1 - d2))


def _tv_rows(dists: np.ndarray, pi: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(dists - pi).sum(axis=1)


def distance_at(profile: TreeProfile, start_level: int, t: int) -> float:
    """TV distance to stationarity after ``t`` steps from a level-``start_level`` vertex."""
    chain = build_quotient(profile, start_level)
    dist = evolve(chain, chain.delta("x")[None, :], t)[0]
    return 0.5 * float(np.abs(dist - chain.stationary).sum())


def _leaf_spine(profile: TreeProfile) -> tuple[QuotientChain, np.ndarray]:
    """Quotient marked at a deepest leaf plus one start row per level.

    The stabiliser of that leaf fixes all its ancestors, so the spine
    carries a representative of every level.
    """
    chain = build_quotient(profile, profile.height)
    starts = np.zeros((profile.height + 1, chain.n_states))
    for k in range(profile.height + 1):
        starts[k, chain.index_of(("spine", k, "trunk"))] = 1.0
    return chain, starts


def mixing_time(
    profile: TreeProfile, eps: float = 0.25, t_cap: int = DEFAULT_T_CAP
) -> int:
    """Smallest t with max over start levels of the TV distance <= eps.

    Doubling brackets t, then bisection on the monotone worst-case distance.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    profile.require_nondegenerate()
    chain, lo_d = _leaf_spine(profile)
    pi = chain.stationary

    def worst(d):
        return float(_tv_rows(d, pi).max())

    if worst(lo_d) <= eps:
        return 0
    lo = 0
    hi, hi_d = 1, evolve(chain, lo_d, 1)
    while worst(hi_d) > eps:
        if hi > t_cap:
            raise NonConvergence(f"not mixed to {eps} within {t_cap} steps")
        lo, lo_d = hi, hi_d
        hi_d = evolve(chain, lo_d, hi)
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        mid_d = evolve(chain, lo_d, mid - lo)
        if worst(mid_d) <= eps:
            hi = mid
        else:
            lo, lo_d = mid, mid_d
    if hi > t_cap:
        raise NonConvergence(f"not mixed to {eps} within {t_cap} steps")
    return hi


@dataclass
class MixProfile:
    distances: np.ndarray  # worst-case d(t), t = 0..T
    argmax_level: np.ndarray
    t_mix: dict = field(default_factory=dict)  # eps -> t_mix(eps)


def mix_profile(
    profile: TreeProfile,
    eps_grid=DEFAULT_EPS_GRID,
    horizon: int | None = None,
    t_cap: int = DEFAULT_T_CAP,
) -> MixProfile:
    """Scan d(t) step by step.

    Without ``horizon`` the scan stops once every eps in the grid is reached.
    """
    profile.require_nondegenerate()
    chain, d = _leaf_spine(profile)
    PT = chain.transition.T.tocsr()
    pi = chain.stationary
    cur = d.T.copy()
    target = min(eps_grid) if eps_grid else None
    ds, arg = [], []
    t = 0
    while True:
        tv = 0.5 * np.abs(cur - pi[:, None]).sum(axis=0)
        k = int(np.argmax(tv))
        ds.append(float(tv[k]))
        arg.append(k)
        if horizon is not None:
            if t >= horizon:
                break
        elif target is None or ds[-1] <= target:
            break
        if t >= t_cap:
            raise NonConvergence(f"not mixed to {target} within {t_cap} steps")
        cur = PT @ cur
        t += 1
    distances = np.array(ds)
    t_mix = {}
    for eps in eps_grid:
        hit = np.nonzero(distances <= eps)[0]
        t_mix[eps] = int(hit[0]) if len(hit) else None
    return MixProfile(distances, np.array(arg), t_mix)


def coupling_hitting_terms(profile: TreeProfile) -> tuple[int, float, float]:
    """(level of v*, E_root(tau_{v*}), E_leaf(tau_{v*})).

    v* is the root when the root branches or the tree is a segment, else the
    closest branching point.
    """
    profile.require_nondegenerate()
    ell = special_level(profile)
    if ell == profile.height:
        ell = 0
    e, _ = collapsed_hitting(collapse(profile), ell)
    return ell, float(e[0]), float(e[profile.height])


def coupling_bound(profile: TreeProfile) -> float:
    _, from_root, from_leaf = coupling_hitting_terms(profile)
    return 4.0 * (from_root + 2.0 * from_leaf)
