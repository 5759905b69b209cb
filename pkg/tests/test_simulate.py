import math

import numpy as np
import pytest

from cutoff_lab.errors import InvalidPair
from cutoff_lab.hitting import expected_offpath_time, hitting_moments
from cutoff_lab.simulate import (
    sample_hitting,
    sample_rs,
    sample_trajectories_rs,
)
from cutoff_lab.tree_model import VertexPair, build_profile


def test_edge_mean():
    s = sample_hitting(build_profile([1]), VertexPair(1, 0, 0), 10_000, seed=11)
    assert abs(s.mean - 2.0) <= 4 * s.standard_error
    assert s.standard_error == pytest.approx(math.sqrt(s.variance / s.count))


def test_deterministic():
    a = sample_hitting(build_profile([1]), VertexPair(1, 0, 0), 10_000, seed=5)
    b = sample_hitting(build_profile([1]), VertexPair(1, 0, 0), 10_000, seed=5)
    assert a == b


def test_streams_do_not_depend_on_batch_size():
    p, pair = build_profile([2, 1]), VertexPair(2, 0, 0)
    tau_small, _, _ = sample_trajectories_rs(p, VertexPair(0, 2, 0), 50, seed=3)
    tau_big, _, _ = sample_trajectories_rs(p, VertexPair(0, 2, 0), 500, seed=3)
    assert np.array_equal(tau_small, tau_big[:50])
    assert sample_hitting(p, pair, 10, seed=1) != sample_hitting(p, pair, 10, seed=2)


def test_binary_mean_matches_exact():
    p, pair = build_profile([2, 2]), VertexPair(2, 0, 0)
    s = sample_hitting(p, pair, 10_000, seed=2024)
    assert abs(s.mean - hitting_moments(p, pair).E) <= 4 * s.standard_error


def test_invalid_pair():
    with pytest.raises(InvalidPair):
        sample_hitting(build_profile([1]), VertexPair(1, 1, 1), 10, seed=0)
    with pytest.raises(InvalidPair):
        sample_rs(build_profile([2, 2]), VertexPair(2, 0, 0), 10, seed=0)
    with pytest.raises(ValueError):
        sample_hitting(build_profile([1]), VertexPair(1, 0, 0), 0, seed=0)


def test_empty_offpath_gives_zero_S():
    st = sample_rs(build_profile([1]), VertexPair(0, 1, 0), 2000, seed=4)
    assert st.mean_S == 0.0 and st.var_S == 0.0 and st.cov_RS == 0.0


@pytest.mark.parametrize(
    "cs,pair", [([2], (0, 1, 0)), ([2, 2], (1, 2, 1)), ([1, 3, 1], (1, 3, 1)), ([2, 2], (0, 2, 0))]
)
def test_rs_split_is_exact(cs, pair):
    p = build_profile(cs)
    pair = VertexPair(*pair)
    tau, R, S = sample_trajectories_rs(p, pair, 3000, seed=9)
    assert np.array_equal(R + S, tau)
    assert R.min() >= pair.distance
    assert np.all(S >= 0)


def test_star_positive_correlation():
    st = sample_rs(build_profile([2]), VertexPair(0, 1, 0), 10_000, seed=21)
    assert st.cov_RS >= -4 * st.cov_se
    exact = expected_offpath_time(build_profile([2]), VertexPair(0, 1, 0))
    assert abs(st.mean_S - exact) <= 4 * st.mean_S_se


def test_binary_offpath_variance():
    st = sample_rs(build_profile([2, 2]), VertexPair(1, 2, 1), 10_000, seed=33)
    rel_se = st.var_S_se / st.var_S
    assert st.var_S >= st.mean_S**2 * (1 - 4 * rel_se)
