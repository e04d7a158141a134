import pytest

from coevo.datasets import DATASETS, DatasetUnavailable, available, load_dataset, surrogate, synthetic_like
from coevo.graph import connected_components


def test_registry_lookup(tmp_path, monkeypatch):
    monkeypatch.setenv("COEVO_DATA_DIR", str(tmp_path))
    (tmp_path / "usair.txt").write_text("# toy\n1 2\n2 3\n3 1\n")
    assert available("USAir")
    g = load_dataset("usair")
    assert (len(g), g.edge_count) == (3, 3)
    assert not available("netscience")
    with pytest.raises(DatasetUnavailable, match="netscience"):
        load_dataset("netscience")


@pytest.mark.parametrize("name", ["usair", "netscience", "polblogs"])
def test_surrogate_sizes(name):
    g = surrogate(name)
    assert (len(g), g.edge_count) == DATASETS[name]
    assert len(connected_components(g)) == 1
    assert all(u != v for u, v in g.edges())


def test_synthetic_is_seeded():
    assert synthetic_like(40, 90, 3).edges() == synthetic_like(40, 90, 3).edges()
    assert synthetic_like(40, 90, 3).edges() != synthetic_like(40, 90, 4).edges()
    with pytest.raises(ValueError):
        synthetic_like(10, 5)
