"""Inequality harness: evaluates every bound on a tree or corpus and reports
lhs, rhs, slack and pass/fail for each, plus cutoff tables for families."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .chain_model import collapse
from .errors import PreconditionViolated
from .hitting import (
    collapsed_hitting,
    hitting_moments,
    return_moments,
    stationary_set_hitting,
)
from .mixing import DEFAULT_EPS_GRID, coupling_bound, mix_profile, mixing_time
from .spectral import (
    absorbed_eigenvalues,
    decomposed_spectrum,
    dense_spectrum,
    dirichlet_form,
    fill_moments,
    g2_lower_bound,
)
from .tree_model import (
    TreeProfile,
    VertexPair,
    explicit_tree,
    family_profiles,
    oracle_cap as default_oracle_cap,
    pi_offpath_mass,
    representative_pairs,
    special_level,
)

# constants of the bounds being checked
MIX_REL_CONSTANT = 144
HIT_CONSTANT = 484
ANCESTOR_CONSTANT = 121
CONCAVE_CONSTANT = 7

INEQ_TOL = 1e-9
AGREE_TOL = 1e-8
SPECTRUM_TOL = 1e-9
IDENTITY_TOL = 1e-9

CHECK_NAMES = (
    "mix_vs_relax",
    "hit_variance",
    "ancestor_variance",
    "level_chain_variance",
    "offpath_variance",
    "coupling_bound",
    "set_hitting_bound",
    "test_function_bound",
    "test_function_floor",
    "rayleigh_bound",
    "perron_floor",
    "geometric_vs_linear",
    "ancestor_additivity",
    "dirichlet_identity",
    "spectrum_vs_dense",
)


@dataclass
class CheckRecord:
    name: str
    lhs: float
    rhs: float
    relation: str  # ">=" or "<="
    passed: bool
    instances: int = 1
    detail: str = ""
    applicable: bool = True

    @property
    def margin(self) -> float:
        if not self.applicable:
            return math.nan
        return self.lhs - self.rhs if self.relation == ">=" else self.rhs - self.lhs


def _holds(lhs: float, rhs: float, relation: str) -> bool:
    if relation == ">=":
        return lhs >= rhs - INEQ_TOL * abs(rhs)
    return lhs <= rhs + INEQ_TOL * abs(rhs)


def _tightness(lhs: float, rhs: float, relation: str) -> float:
    """Smaller is tighter; used to pick the worst instance of a check."""
    big, small = (lhs, rhs) if relation == ">=" else (rhs, lhs)
    if small <= 0:
        return math.inf if big >= small else -math.inf
    return big / small


def _record(name: str, relation: str, instances: list[tuple[float, float, str]]) -> CheckRecord:
    if not instances:
        return CheckRecord(name, math.nan, math.nan, relation, True, 0, "not applicable", False)
    passed = all(_holds(l, r, relation) for l, r, _ in instances)
    failing = [i for i in instances if not _holds(i[0], i[1], relation)]
    pool = failing or instances
    lhs, rhs, detail = min(pool, key=lambda i: _tightness(i[0], i[1], relation))
    return CheckRecord(name, float(lhs), float(rhs), relation, passed, len(instances), detail)


@dataclass
class VerifyReport:
    tree: str
    children: list[int]
    n: int
    h: int
    t_mix: int
    t_rel: float
    ratio: float
    min_var_ratio: float
    checks: list[CheckRecord] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed_checks(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def check(self, name: str) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "VerifyReport":
        data = dict(data)
        data["checks"] = [CheckRecord(**c) for c in data.get("checks", [])]
        return cls(**data)


def _pair_label(pair: VertexPair) -> str:
    return f"pair({pair.lx},{pair.ly},{pair.lq})"


def check_tree(profile: TreeProfile, oracle_cap: int | None = None) -> VerifyReport:
    profile.require_nondegenerate()
    started = time.perf_counter()
    cap = default_oracle_cap() if oracle_cap is None else oracle_cap
    h = profile.height
    chain = collapse(profile)
    spectrum = decomposed_spectrum(profile)
    t_rel = 1.0 / (1.0 - float(spectrum.values[1]))
    t_mix = mixing_time(profile, 0.25)
    checks: list[CheckRecord] = []

    checks.append(
        _record("mix_vs_relax", ">=", [(t_rel, t_mix / MIX_REL_CONSTANT, f"t_mix={t_mix}")])
    )

    # hitting-time non-concentration
    moments = {}
    for pair in representative_pairs(profile):
        moments[pair] = hitting_moments(profile, pair)
    hit, ancestor, offpath = [], [], []
    ratios = []
    for pair, m in moments.items():
        label = _pair_label(pair)
        ratios.append(m.var_ratio)
        hit.append((m.Var, m.E**2 / HIT_CONSTANT, label))
        if pair.y_is_ancestor:
            ancestor.append((m.Var, m.E**2 / ANCESTOR_CONSTANT, label))
        g = pi_offpath_mass(profile, pair)
        offpath.append((m.Var, g**2 * m.E**2, label))
    for level in range(h + 1):
        m = return_moments(profile, level)
        ratios.append(m.var_ratio)
        hit.append((m.Var, m.E**2 / HIT_CONSTANT, f"return({level})"))
    checks.append(_record("hit_variance", ">=", hit))
    checks.append(_record("ancestor_variance", ">=", ancestor))

    # level chain absorbed at 0, every start
    e0, s0 = collapsed_hitting(chain, 0)
    level_var = [
        (s0[k] - e0[k] ** 2, e0[k] ** 2 / ANCESTOR_CONSTANT, f"start={k}") for k in range(1, h + 1)
    ]
    checks.append(_record("level_chain_variance", ">=", level_var))
    checks.append(_record("offpath_variance", ">=", offpath))

    checks.append(_record("coupling_bound", "<=", [(t_mix, coupling_bound(profile), "")]))

    set_hit = []
    ell = special_level(profile)
    if ell < h:
        for b in range(1, profile.children_counts[ell]):
            E_pi, pi_D = stationary_set_hitting(profile, b)
            set_hit.append((t_rel, pi_D / (1.0 - pi_D) * E_pi, f"b={b}"))
    checks.append(_record("set_hitting_bound", ">=", set_hit))

    g2 = g2_lower_bound(profile) if ell >= 1 else None
    checks.append(
        _record("test_function_bound", "<=", [] if g2 is None else [(g2, t_rel, f"l={ell}")])
    )
    checks.append(
        _record("test_function_floor", ">=", [] if g2 is None else [(g2, ell**2 / 3.0, f"l={ell}")])
    )

    gammas = absorbed_eigenvalues(chain)
    g1 = float(gammas[0])
    checks.append(
        _record("rayleigh_bound", ">=", [(1.0 / (1.0 - g1), e0[h] / CONCAVE_CONSTANT, "")])
    )
    checks.append(_record("perron_floor", ">=", [(g1, 0.5, "")]))

    E_fill, V_fill = fill_moments(chain, h)
    E_lin, V_lin = float(e0[h]), float(s0[h] - e0[h] ** 2)
    rel = max(abs(E_fill - E_lin) / E_lin, abs(V_fill - V_lin) / V_lin)
    checks.append(_record("geometric_vs_linear", "<=", [(rel, AGREE_TOL, "")]))

    additivity = []
    for pair, m in moments.items():
        if pair.lq < min(pair.lx, pair.ly):
            up = moments[VertexPair(pair.lx, pair.lq, pair.lq)]
            down = moments[VertexPair(pair.lq, pair.ly, pair.lq)]
            err = max(
                abs(m.E - up.E - down.E) / m.E, abs(m.Var - up.Var - down.Var) / m.Var
            )
            additivity.append((err, IDENTITY_TOL, _pair_label(pair)))
    checks.append(_record("ancestor_additivity", "<=", additivity))

    # Dirichlet form of f = E_.(tau_0) equals E_pi(tau_0)
    form = dirichlet_form(chain, e0)
    e_pi = float(chain.stationary @ e0)
    checks.append(
        _record("dirichlet_identity", "<=", [(abs(form - e_pi) / e_pi, IDENTITY_TOL, "")])
    )

    if profile.vertex_count <= cap:
        dense = dense_spectrum(explicit_tree(profile, cap=cap))
        if dense.count != spectrum.count:
            diff = math.inf
        else:
            diff = float(np.max(np.abs(dense.values - spectrum.values)))
        checks.append(_record("spectrum_vs_dense", "<=", [(diff, SPECTRUM_TOL, "")]))
    else:
        checks.append(_record("spectrum_vs_dense", "<=", []))

    return VerifyReport(
        tree=profile.label(),
        children=list(profile.children_counts),
        n=profile.vertex_count,
        h=h,
        t_mix=t_mix,
        t_rel=t_rel,
        ratio=t_mix / t_rel,
        min_var_ratio=float(min(ratios)),
        checks=checks,
        elapsed=time.perf_counter() - started,
    )


def _check_one(args):
    profile, cap = args
    return check_tree(profile, oracle_cap=cap)


def verify_corpus(
    profiles: Sequence[TreeProfile], threads: int = 1, oracle_cap: int | None = None
) -> list[VerifyReport]:
    """check_tree over a corpus; output order is corpus order."""
    jobs = [(p, oracle_cap) for p in profiles]
    if threads <= 1 or len(jobs) <= 1:
        return [_check_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_check_one, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


# -- concave sequence inequality ------------------------------------------------

PRECOND_TOL = 1e-12


def check_concave_lemma(f: Sequence[float], w: Sequence[float]) -> tuple[float, float, bool]:
    """E_w(f^2) >= f(h+1)^2 / 7 for concave increasing f with f(0) = 0 and
    weights nondecreasing on 0..h with w(0) <= w(h+1)."""
    f = np.asarray(f, dtype=float)
    w = np.asarray(w, dtype=float)
    if f.ndim != 1 or f.shape != w.shape:
        raise PreconditionViolated("f and w must be 1-d of equal length")
    if len(f) < 3:
        raise PreconditionViolated("need length h+2 with h >= 1")
    if abs(f[0]) > PRECOND_TOL:
        raise PreconditionViolated("f(0) must be 0")
    steps = np.diff(f)
    if np.any(steps < -PRECOND_TOL):
        raise PreconditionViolated("f is not increasing")
    if np.any(np.diff(steps) > PRECOND_TOL):
        raise PreconditionViolated("f is not concave")
    if np.any(w < -PRECOND_TOL) or abs(w.sum() - 1.0) > 1e-9:
        raise PreconditionViolated("w is not a probability vector")
    if np.any(np.diff(w[:-1]) < -PRECOND_TOL):
        raise PreconditionViolated("w is not nondecreasing on 0..h")
    if w[0] > w[-1] + PRECOND_TOL:
        raise PreconditionViolated("w(0) exceeds w(h+1)")
    lhs = float(w @ f**2)
    rhs = float(f[-1] ** 2 / CONCAVE_CONSTANT)
    return lhs, rhs, _holds(lhs, rhs, ">=")


def random_concave_instance(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A random (f, w) meeting the concave-lemma preconditions."""
    h = int(rng.integers(1, 12))
    incr = np.sort(rng.exponential(size=h + 1))[::-1]
    if rng.random() < 0.2:
        incr[rng.integers(0, h + 1) :] = 0.0  # flat tail
    f = np.concatenate([[0.0], np.cumsum(incr)])
    body = np.sort(rng.random(h + 1))
    if rng.random() < 0.2:
        body[:] = body[0]
    last = body[0] + rng.random() * (1.0 - body[0])
    w = np.concatenate([body, [last]])
    w = w / w.sum()
    return f, w


# -- cutoff tables ---------------------------------------------------------------


@dataclass
class CutoffRow:
    index: int
    tree: str
    n: int
    t_rel: float
    t_mix: dict  # eps -> t_mix(eps)
    window_ratio: dict  # eps -> t_mix(eps) / t_mix(1 - eps), eps < 1/2
    relax_ratio: dict  # eps -> t_mix(eps) / t_rel
    bounded: bool  # t_mix(1/4) / t_rel <= 144

    @property
    def monotone(self) -> bool:
        eps = sorted(self.t_mix)
        vals = [self.t_mix[e] for e in eps]
        return all(a >= b for a, b in zip(vals, vals[1:]))


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return math.inf if a > 0 else math.nan
    return a / b


def cutoff_row(index: int, profile: TreeProfile, eps_grid=DEFAULT_EPS_GRID) -> CutoffRow:
    grid = sorted(set(float(e) for e in eps_grid) | {0.25})
    mp = mix_profile(profile, grid)
    t_rel = 1.0 / (1.0 - float(decomposed_spectrum(profile).values[1]))
    t_mix = {e: mp.t_mix[e] for e in grid}
    window = {}
    for e in grid:
        if e < 0.5:
            partner = [g for g in grid if abs(g - (1.0 - e)) < 1e-12]
            if partner:
                window[e] = _ratio(t_mix[e], t_mix[partner[0]])
    relax = {e: t_mix[e] / t_rel for e in grid}
    return CutoffRow(
        index=index,
        tree=profile.label(),
        n=profile.vertex_count,
        t_rel=t_rel,
        t_mix=t_mix,
        window_ratio=window,
        relax_ratio=relax,
        bounded=_holds(t_rel, t_mix[0.25] / MIX_REL_CONSTANT, ">="),
    )


def cutoff_table(family, eps_grid=DEFAULT_EPS_GRID) -> list[CutoffRow]:
    """One row per family member, in generation order.

    ``family`` is a family spec dict or an iterable of ``(index, profile)``.
    """
    members: Iterable = family_profiles(family) if isinstance(family, dict) else family
    return [cutoff_row(i, p, eps_grid) for i, p in members]
