"""Seeded Monte Carlo for hitting times and the off-path decomposition.

Every sample owns a Philox stream spawned from ``SeedSequence(seed)`` at its
sample index, and consumes exactly one uniform per step. Samples are
advanced in lockstep for speed, but each sample's trajectory depends only on
``(seed, index)``, so results do not depend on batching or scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain_model import QuotientChain, build_quotient
from .errors import InvalidPair
from .hitting import offpath_mask
from .tree_model import TreeProfile, VertexPair

BLOCK = 512


@dataclass(frozen=True)
class SampleStats:
    count: int
    mean: float
    variance: float
    seed: int

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.count)


@dataclass(frozen=True)
class RSStats:
    count: int
    seed: int
    mean_R: float
    mean_S: float
    var_R: float
    var_S: float
    cov_RS: float
    cov_se: float  # standard error of cov_RS
    var_S_se: float  # standard error of var_S
    min_R: int

    @property
    def mean_S_se(self) -> float:
        return math.sqrt(self.var_S / self.count)


def _sample_var(a: np.ndarray) -> float:
    return float(a.var(ddof=1)) if len(a) > 1 else 0.0


def _transition_tables(chain: QuotientChain) -> tuple[np.ndarray, np.ndarray]:
    """Padded cumulative-probability and target tables, one row per state."""
    P = chain.transition
    width = int(np.diff(P.indptr).max())
    cum = np.full((chain.n_states, width), 2.0)
    nxt = np.zeros((chain.n_states, width), dtype=np.int64)
    for i in range(chain.n_states):
        lo, hi = P.indptr[i], P.indptr[i + 1]
        cum[i, : hi - lo] = np.cumsum(P.data[lo:hi])
        cum[i, hi - lo - 1] = 2.0  # absorbs rounding in the last bucket
        nxt[i, : hi - lo] = P.indices[lo:hi]
        nxt[i, hi - lo :] = P.indices[hi - 1]
    return cum, nxt


def _run(chain: QuotientChain, n_samples: int, seed: int, mask: np.ndarray | None):
    """Hitting times of the absorbing state from x, plus steps spent in ``mask``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    cum, nxt = _transition_tables(chain)
    target = chain.absorbing
    children = np.random.SeedSequence(seed).spawn(n_samples)
    gens = [np.random.Generator(np.random.Philox(c)) for c in children]

    state = np.full(n_samples, chain.labels["x"], dtype=np.int64)
    steps = np.zeros(n_samples, dtype=np.int64)
    inside = np.zeros(n_samples, dtype=np.int64)
    active = np.flatnonzero(state != target)
    buf = np.empty((n_samples, BLOCK))
    col = BLOCK
    while len(active):
        if col == BLOCK:
            for i in active:
                buf[i] = gens[i].random(BLOCK)
            col = 0
        cur = state[active]
        if mask is not None:
            inside[active] += mask[cur]
        u = buf[active, col]
        choice = (u[:, None] >= cum[cur]).sum(axis=1)
        state[active] = nxt[cur, choice]
        steps[active] += 1
        col += 1
        active = active[state[active] != target]
    return steps, inside


def sample_hitting(
    profile: TreeProfile, pair: VertexPair, n_samples: int, seed: int
) -> SampleStats:
    chain = build_quotient(profile, pair, absorbing="y")
    steps, _ = _run(chain, n_samples, seed, None)
    t = steps.astype(float)
    # numpy reductions use pairwise summation, so sums are order-stable
    return SampleStats(n_samples, float(t.mean()), _sample_var(t), seed)


def sample_trajectories_rs(
    profile: TreeProfile, pair: VertexPair, n_samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-trajectory (tau_y, R, S) with S the steps spent off the x-y path."""
    if pair.lq != pair.lx:
        raise InvalidPair(f"off-path decomposition needs x to be an ancestor of y, got {pair}")
    chain = build_quotient(profile, pair, absorbing="y")
    mask = offpath_mask(chain, pair).astype(np.int64)
    tau, S = _run(chain, n_samples, seed, mask)
    return tau, tau - S, S


def sample_rs(profile: TreeProfile, pair: VertexPair, n_samples: int, seed: int) -> RSStats:
    _, R, S = sample_trajectories_rs(profile, pair, n_samples, seed)
    r = R.astype(float)
    s = S.astype(float)
    n = len(r)
    dr = r - r.mean()
    ds = s - s.mean()
    prod = dr * ds
    cov = float(prod.sum() / (n - 1)) if n > 1 else 0.0
    cov_se = float(prod.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    sq = ds**2
    var_s = _sample_var(s)
    var_s_se = float(sq.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return RSStats(
        count=n,
        seed=seed,
        mean_R=float(r.mean()),
        mean_S=float(s.mean()),
        var_R=_sample_var(r),
        var_S=var_s,
        cov_RS=cov,
        cov_se=cov_se,
        var_S_se=var_s_se,
        min_R=int(R.min()),
    )
