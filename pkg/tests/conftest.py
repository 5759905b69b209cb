import pytest

from cutoff_lab.tree_model import build_profile, enumerate_profiles

_VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


def pytest_terminal_summary(terminalreporter, config):
    verdicts = config.stash.get(_VERDICTS, {})
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(verdicts):
        terminalreporter.write_line(verdicts[key])


@pytest.fixture
def verdict(request):
    """Record a one-line PASS/FAIL for an acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        request.config.stash[_VERDICTS][number] = line
        print(line)
        assert ok, line

    return record


@pytest.fixture(scope="session")
def small_corpus():
    """Trees up to height 3 with at most 3 children per level (39 profiles)."""
    return enumerate_profiles(3, 3)


@pytest.fixture
def P():
    return build_profile
