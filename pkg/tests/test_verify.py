import pytest

from nonholo import chained
from nonholo.verify import CHECKS, SUBSETS, format_table, run_checks


def test_check_names_unique_and_grouped():
    names = [c.name for c in CHECKS]
    assert len(names) == len(set(names))
    assert {c.subset for c in CHECKS} == set(SUBSETS)


@pytest.mark.parametrize("subset", SUBSETS)
def test_subsets_pass(subset):
    results = run_checks(subset)
    assert results and all(r.subset == subset for r in results)
    assert all(r.passed for r in results), format_table(results)


def test_unknown_subset():
    with pytest.raises(ValueError, match="unknown subset"):
        run_checks("everything")


def test_crashing_check_is_reported(monkeypatch):
    def boom(n):
        raise RuntimeError("corrupted table")

    monkeypatch.setattr(chained, "s_matrix", boom)
    result = next(r for r in run_checks("transforms") if r.name == "s_matrix_invertibility")
    assert not result.passed and "corrupted table" in result.detail


def test_table_layout():
    results = run_checks("transforms")
    lines = format_table(results).splitlines()
    assert lines[0].split()[:3] == ["check", "subset", "result"]
    assert len(lines) == len(results) + 1
