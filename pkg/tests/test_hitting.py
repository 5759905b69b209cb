import numpy as np
import pytest
import scipy.sparse as sp

from cutoff_lab.chain_model import build_quotient, collapse
from cutoff_lab.errors import InvalidPair, NoBranching, SingularSystem
from cutoff_lab.hitting import (
    absorbing_moments,
    collapsed_hitting,
    commute_time,
    expected_offpath_time,
    hitting_moments,
    hitting_moments_plus,
    offpath_mask,
    return_moments,
    stationary_set_hitting,
)
from cutoff_lab.spectral import dirichlet_form, fill_moments, lambda2
from cutoff_lab.tree_model import (
    VertexPair,
    build_profile,
    explicit_tree,
    pi_offpath_mass,
    representative_pairs,
)

import oracles


def test_edge_is_geometric():
    m = hitting_moments(build_profile([1]), VertexPair(1, 0, 0))
    assert m.E == pytest.approx(2.0) and m.Var == pytest.approx(2.0)


def test_segment_root_to_end():
    assert hitting_moments(build_profile([1, 1]), VertexPair(2, 0, 0)).E == pytest.approx(8.0)


def test_binary_leaf_to_root():
    p = build_profile([2, 2])
    m = hitting_moments(p, VertexPair(2, 0, 0))
    E, V = fill_moments(collapse(p), 2)
    assert m.E == pytest.approx(E, rel=1e-8) and m.Var == pytest.approx(V, rel=1e-8)
    # frozen from the dense absorbing solve on the 7-vertex tree
    assert m.E == pytest.approx(12.0) and m.Var == pytest.approx(108.0)


def test_plus_alias():
    p = build_profile([2, 1])
    assert hitting_moments_plus(p, VertexPair(0, 2, 0)) == hitting_moments(p, VertexPair(0, 2, 0))


def test_invalid_pair():
    with pytest.raises(InvalidPair):
        hitting_moments(build_profile([1, 2]), VertexPair(2, 2, 0))


def test_all_pairs_match_dense_oracle(small_corpus):
    for p in small_corpus:
        t = explicit_tree(p)
        for pair in representative_pairs(p):
            x, y = oracles.concrete_pair(t, pair)
            E, V = oracles.absorbing_moments(t, x, [y])
            m = hitting_moments(p, pair)
            assert m.E == pytest.approx(E, rel=1e-9)
            assert m.Var == pytest.approx(V, rel=1e-9)
            assert m.Var >= 0 and m.E >= pair.distance


def test_return_examples():
    assert return_moments(build_profile([1]), 0).E == pytest.approx(2.0)
    assert return_moments(build_profile([2, 2]), 0).E == pytest.approx(6.0)
    m = return_moments(build_profile([1, 1]), 1)
    assert m.E == pytest.approx(2.0)
    E, V = oracles.return_moments(explicit_tree(build_profile([1, 1])), 1)
    assert m.Var == pytest.approx(V)


def test_return_matches_oracle(small_corpus):
    for p in small_corpus:
        t = explicit_tree(p)
        for level in range(p.height + 1):
            v = oracles.descend_first(t, 0, level)
            E, V = oracles.return_moments(t, v)
            m = return_moments(p, level)
            assert m.E == pytest.approx(2 * p.edge_count / p.level_degrees[level], rel=1e-12)
            assert m.E == pytest.approx(E, rel=1e-9)
            assert m.Var == pytest.approx(V, rel=1e-9)


def test_ancestor_additivity(small_corpus):
    for p in small_corpus:
        for pair in representative_pairs(p):
            if pair.lq < min(pair.lx, pair.ly):
                whole = hitting_moments(p, pair)
                a = hitting_moments(p, VertexPair(pair.lx, pair.lq, pair.lq))
                b = hitting_moments(p, VertexPair(pair.lq, pair.ly, pair.lq))
                assert whole.E == pytest.approx(a.E + b.E, rel=1e-9)
                assert whole.Var == pytest.approx(a.Var + b.Var, rel=1e-9)


def test_nonconcentration_bounds(small_corpus):
    for p in small_corpus:
        for pair in representative_pairs(p):
            m = hitting_moments(p, pair)
            assert m.Var >= m.E**2 / 484
            if pair.y_is_ancestor:
                assert m.Var >= m.E**2 / 121
            g = pi_offpath_mass(p, pair)
            assert m.Var >= g**2 * m.E**2 * (1 - 1e-9)
        for level in range(p.height + 1):
            m = return_moments(p, level)
            assert m.Var >= m.E**2 / 484


def test_level_chain_every_start(small_corpus):
    for p in small_corpus:
        c = collapse(p)
        assert np.all(c.down[:-1] >= c.up[:-1])
        e, s = collapsed_hitting(c, 0)
        var = s - e**2
        assert np.all(var[1:] >= e[1:] ** 2 / 121)


@pytest.mark.parametrize("ell", [1, 2, 5, 13, 50])
def test_segment_closed_form(ell):
    m = hitting_moments(build_profile([1] * ell), VertexPair(0, ell, 0))
    assert abs(m.E - 2 * ell**2) <= 1e-9


def test_offpath_time_identity(small_corpus):
    """Steps spent behind x before tau_y equal pi(G) times the commute time."""
    for p in small_corpus:
        for pair in representative_pairs(p):
            got = expected_offpath_time(p, pair)
            want = pi_offpath_mass(p, pair) * commute_time(p, pair)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_offpath_mask_mass_matches(small_corpus):
    for p in small_corpus:
        for pair in representative_pairs(p):
            q = build_quotient(p, pair)
            mass = q.stationary[offpath_mask(q, pair)].sum()
            assert mass == pytest.approx(pi_offpath_mass(p, pair), abs=1e-12)


def test_set_hitting_star():
    E_pi, pi_D = stationary_set_hitting(build_profile([2]), 1)
    assert E_pi == pytest.approx(0.5) and pi_D == pytest.approx(0.75)


def test_set_hitting_against_explicit(small_corpus):
    """Compare with a dense solve where B is an explicit union of subtrees."""
    from cutoff_lab.tree_model import special_level

    for p in small_corpus:
        ell = special_level(p)
        if ell == p.height:
            continue
        t = explicit_tree(p)
        v_star = oracles.descend_first(t, 0, ell)
        kids = [u for u in t.adjacency[v_star] if t.parent[u] == v_star]
        pi = oracles.stationary(t)
        for b in range(1, len(kids)):
            B = set()
            stack = kids[-b:]
            while stack:
                v = stack.pop()
                B.add(v)
                stack.extend(u for u in t.adjacency[v] if t.parent[u] == v)
            D = [v for v in range(t.n) if v not in B]
            E_pi = sum(pi[v] * oracles.absorbing_moments(t, v, D)[0] for v in B)
            got_E, got_D = stationary_set_hitting(p, b)
            assert got_E == pytest.approx(E_pi, rel=1e-9)
            assert got_D == pytest.approx(1 - pi[list(B)].sum(), rel=1e-12)
            assert lambda2(p)[1] >= got_D / (1 - got_D) * got_E * (1 - 1e-9)


def test_set_hitting_structural():
    E_pi, pi_D = stationary_set_hitting(build_profile([1, 2]), 1)
    assert E_pi > 0 and 0 < pi_D < 1
    with pytest.raises(NoBranching):
        stationary_set_hitting(build_profile([1, 1]), 1)
    with pytest.raises(ValueError):
        stationary_set_hitting(build_profile([2]), 2)


def test_dirichlet_identity(small_corpus):
    for p in small_corpus:
        c = collapse(p)
        for target in range(p.height + 1):
            e, _ = collapsed_hitting(c, target)
            assert dirichlet_form(c, e) == pytest.approx(float(c.stationary @ e), rel=1e-9)


def test_singular_system():
    P = sp.csr_matrix(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.5]]))
    with pytest.raises(SingularSystem):
        absorbing_moments(P, [2])
