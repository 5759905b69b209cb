"""Spectra, relaxation times and geometric-sum hitting moments.

The lazy walk on a spherically symmetric tree splits into radial modes
(eigenfunctions constant on levels, i.e. the collapsed chain) and, for every
level ``k`` where the tree branches (``n_k > n_{k-1}``), ``n_k - n_{k-1}``
copies of the collapsed chain killed above level ``k``. ``lambda2`` uses
that decomposition; ``dense_spectrum`` is the brute-force oracle it is
checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .chain_model import CollapsedChain, collapse
from .errors import (
    ConstantTestFunction,
    DecompositionMismatch,
    EigensolveFailure,
    InvalidStart,
)
from .tree_model import ExplicitTree, TreeProfile, explicit_tree, special_level

RESIDUAL_TOL = 1e-8
GROUP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray  # descending, repeated according to multiplicity
    source: str

    @property
    def count(self) -> int:
        return len(self.values)

    def grouped(self, tol: float = GROUP_TOL) -> list[tuple[float, int]]:
        """Distinct eigenvalues (within ``tol``) with multiplicities."""
        out: list[tuple[float, int]] = []
        for v in self.values:
            if out and abs(out[-1][0] - v) <= tol:
                out[-1] = (out[-1][0], out[-1][1] + 1)
            else:
                out.append((float(v), 1))
        return out


def _check_residual(matrix, values, vectors, what: str) -> None:
    if len(values) == 0:
        return
    res = matrix @ vectors - vectors * values
    worst = float(np.max(np.abs(res)))
    if worst > RESIDUAL_TOL:
        raise EigensolveFailure(f"{what}: eigen-residual {worst:.3e} exceeds {RESIDUAL_TOL}")


def birth_death_eigenvalues(P: np.ndarray) -> np.ndarray:
    """Eigenvalues (descending) of a tridiagonal birth-and-death block.

    The block is similar to a symmetric tridiagonal matrix with off-diagonal
    ``sqrt(P[i, i+1] * P[i+1, i])`` because the chain is reversible.
    """
    m = P.shape[0]
    diag = np.diag(P).copy()
    if m == 1:
        return diag
    off = np.sqrt(np.diag(P, 1) * np.diag(P, -1))
    values, vectors = scipy.linalg.eigh_tridiagonal(diag, off)
    sym = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    _check_residual(sym, values, vectors, "tridiagonal eigensolve")
    return values[::-1]


def transition_matrix(tree: ExplicitTree) -> sp.csr_matrix:
    """Lazy simple random walk on an explicit tree."""
    rows, cols, vals = [], [], []
    for v in range(tree.n):
        rows.append(v), cols.append(v), vals.append(0.5)
        d = tree.degree(v)
        for u in tree.adjacency[v]:
            rows.append(v), cols.append(u), vals.append(0.5 / d)
    return sp.csr_matrix((vals, (rows, cols)), shape=(tree.n, tree.n))


def dense_spectrum(tree: ExplicitTree) -> Spectrum:
    """Full symmetric eigensolve of D^{1/2} P D^{-1/2} with D = diag(pi)."""
    if tree.n == 1:
        return Spectrum(np.array([1.0]), "dense-oracle")
    P = transition_matrix(tree).toarray()
    sq = np.sqrt(tree.stationary())
    S = sq[:, None] * P / sq[None, :]
    S = 0.5 * (S + S.T)
    values, vectors = np.linalg.eigh(S)
    _check_residual(S, values, vectors, "dense eigensolve")
    return Spectrum(values[::-1].copy(), "dense-oracle")


def dirichlet_spectrum(profile: TreeProfile, k: int) -> Spectrum:
    """Spectrum of the collapsed chain killed on leaving levels ``k..h``."""
    profile.require_nondegenerate()
    if not 1 <= k <= profile.height:
        raise ValueError(f"need 1 <= k <= h, got k={k}, h={profile.height}")
    chain = collapse(profile)
    return Spectrum(birth_death_eigenvalues(chain.restriction(k)), "decomposition")


def decomposed_spectrum(profile: TreeProfile) -> Spectrum:
    chain = collapse(profile)
    parts = [birth_death_eigenvalues(chain.dense())]
    sizes = profile.level_sizes
    for k in range(1, profile.height + 1):
        extra = sizes[k] - sizes[k - 1]
        if extra > 0:
            parts.append(np.repeat(birth_death_eigenvalues(chain.restriction(k)), extra))
    values = np.sort(np.concatenate(parts))[::-1]
    if len(values) != profile.vertex_count:
        raise DecompositionMismatch(
            f"decomposition produced {len(values)} eigenvalues for "
            f"{profile.vertex_count} vertices"
        )
    return Spectrum(values, "decomposition")


def lambda2(profile: TreeProfile) -> tuple[float, float]:
    """Second largest eigenvalue and relaxation time ``1 / (1 - lambda_2)``."""
    profile.require_nondegenerate()
    spec = decomposed_spectrum(profile)
    lam = float(spec.values[1])
    return lam, 1.0 / (1.0 - lam)


def absorbed_eigenvalues(chain: CollapsedChain) -> np.ndarray:
    """Eigenvalues of the chain restricted to ``1..h`` (level 0 absorbing)."""
    return birth_death_eigenvalues(chain.restriction(1))


def fill_moments(chain: CollapsedChain, start: int, target: int = 0) -> tuple[float, float]:
    """Mean and variance of the time to reach level 0 from level ``h``.

    Started at the far end, the absorption time is a sum of independent
    geometric variables with success probabilities ``1 - gamma_i``.
    """
    if start != chain.h:
        raise InvalidStart(f"geometric decomposition needs start = h = {chain.h}, got {start}")
    if target != 0:
        raise InvalidStart(f"geometric decomposition needs target 0, got {target}")
    g = absorbed_eigenvalues(chain)
    return float(np.sum(1.0 / (1.0 - g))), float(np.sum(g / (1.0 - g) ** 2))


def dirichlet_form(chain: CollapsedChain, f: np.ndarray) -> float:
    """(1/2) sum_{i,j} (f_i - f_j)^2 pi(i) P(i,j) for a level function ``f``."""
    P = chain.dense()
    pi = chain.stationary
    diff = f[:, None] - f[None, :]
    return 0.5 * float(np.sum(diff**2 * pi[:, None] * P))


def g2_lower_bound(profile: TreeProfile) -> float:
    """Rayleigh quotient Var_pi(g)/E(g) for g = min(level, l), l the special level."""
    ell = special_level(profile)
    if ell == 0:
        raise ConstantTestFunction("the root branches, so the test function is constant")
    chain = collapse(profile)
    g = np.minimum(np.arange(profile.height + 1), ell).astype(float)
    pi = chain.stationary
    mean = float(pi @ g)
    var = float(pi @ (g - mean) ** 2)
    return var / dirichlet_form(chain, g)


def spectrum_for(profile: TreeProfile, dense: bool = False) -> Spectrum:
    if dense:
        return dense_spectrum(explicit_tree(profile))
    profile.require_nondegenerate()
    return decomposed_spectrum(profile)
