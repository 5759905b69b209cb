import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cutoff_lab.errors import DegenerateTree, PreconditionViolated
from cutoff_lab.tree_model import build_profile, enumerate_profiles
from cutoff_lab.verify import (
    CHECK_NAMES,
    VerifyReport,
    check_concave_lemma,
    check_tree,
    cutoff_table,
    random_concave_instance,
    verify_corpus,
)


def test_edge_report():
    r = check_tree(build_profile([1]))
    assert r.passed
    assert r.t_mix == 1 and r.t_rel == pytest.approx(1.0) and r.ratio == pytest.approx(1.0)


def test_binary_report_has_every_check_once():
    r = check_tree(build_profile([2, 2]))
    assert r.passed
    assert [c.name for c in r.checks] == list(CHECK_NAMES)
    assert not r.check("test_function_bound").applicable  # root branches
    assert r.check("set_hitting_bound").instances == 1


def test_degenerate():
    with pytest.raises(DegenerateTree):
        check_tree(build_profile([]))


def test_spectrum_check_skipped_above_cap():
    r = check_tree(build_profile([2, 2, 2]), oracle_cap=10)
    assert not r.check("spectrum_vs_dense").applicable
    assert r.passed


def test_report_round_trip():
    r = check_tree(build_profile([1, 2]))
    again = VerifyReport.from_dict(json.loads(json.dumps(r.to_dict())))
    # compare serialised forms so nan fields count as equal
    assert json.dumps(again.to_dict(), sort_keys=True) == json.dumps(r.to_dict(), sort_keys=True)


def test_corpus_threads_do_not_change_results():
    corpus = enumerate_profiles(3, 2)
    one = verify_corpus(corpus, threads=1)
    two = verify_corpus(corpus, threads=2)
    strip = lambda rs: [{k: v for k, v in r.to_dict().items() if k != "elapsed"} for r in rs]
    assert json.dumps(strip(one)) == json.dumps(strip(two))
    assert all(r.passed for r in one)


def test_failure_is_flagged():
    from cutoff_lab.verify import _record

    rec = _record("demo", ">=", [(1.0, 2.0, "a"), (5.0, 1.0, "b")])
    assert not rec.passed and rec.detail == "a" and rec.margin == pytest.approx(-1.0)
    rec = _record("demo", ">=", [(1.0 - 1e-12, 1.0, "tol")])
    assert rec.passed


def test_concave_examples():
    lhs, rhs, ok = check_concave_lemma([0, 1, 2], [0, 0.5, 0.5])
    assert lhs == pytest.approx(2.5) and rhs == pytest.approx(4 / 7) and ok
    with pytest.raises(PreconditionViolated, match="increasing"):
        check_concave_lemma([0, 2, 1], [0.2, 0.3, 0.5])
    with pytest.raises(PreconditionViolated, match="concave"):
        check_concave_lemma([0, 1, 3], [0.2, 0.3, 0.5])
    with pytest.raises(PreconditionViolated, match="w\\(0\\)"):
        check_concave_lemma([0, 1, 1.5], [0.3, 0.6, 0.1])
    with pytest.raises(PreconditionViolated, match="f\\(0\\)"):
        check_concave_lemma([1, 2, 3], [0.2, 0.3, 0.5])


def test_concave_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(200):
        f, w = random_concave_instance(rng)
        assert check_concave_lemma(f, w)[2]


@settings(max_examples=300)
@given(
    incr=st.lists(st.floats(0, 10), min_size=2, max_size=10),
    body=st.lists(st.floats(0.01, 1), min_size=2, max_size=10),
    tail=st.floats(0, 1),
)
def test_concave_property(incr, body, tail):
    h = min(len(incr), len(body)) - 1
    steps = sorted(incr[: h + 1], reverse=True)
    f = np.concatenate([[0.0], np.cumsum(steps)])
    b = sorted(body[: h + 1])
    w = np.array(b + [b[0] + tail])
    w = w / w.sum()
    lhs, rhs, ok = check_concave_lemma(f, w)
    assert ok, (f, w, lhs, rhs)


def test_cutoff_segment_rows():
    rows = cutoff_table({"family": "segment", "h_range": [2, 6]})
    assert [r.index for r in rows] == [2, 3, 4, 5, 6]
    for r in rows:
        assert r.bounded and r.monotone
        assert r.t_mix[0.25] / r.t_rel <= 144


def test_cutoff_empty_family():
    assert cutoff_table({"family": "binary", "h_range": [3, 2]}) == []
    assert cutoff_table([]) == []


def test_cutoff_ratio_division():
    rows = cutoff_table([(1, build_profile([1]))], eps_grid=(0.01, 0.99))
    assert math.isinf(rows[0].window_ratio[0.01])
