import numpy as np
import pytest

from dunkl_lab import (
    DyadicSystem,
    RootData,
    ScalePartition,
    WeightedGrid,
    audit_dyadic,
    build_dyadic,
    inject_center_shift,
    locate,
)
from dunkl_lab.dyadic import ResolutionError


@pytest.fixture(scope="module")
def small_system():
    grid = WeightedGrid(RootData((1.0,)), 1.0, 8192, freq_radius=4.0)
    return build_dyadic(grid, delta=1.0 / 24.0, k_min=0, k_max=1)


def test_audit_passes(small_system):
    rep = audit_dyadic(small_system)
    assert rep.passed, rep.details


def test_every_node_covered(small_system):
    for k in small_system.levels():
        assign = small_system.assignment[k]
        assert np.all(assign >= 0)


def test_nesting(small_system):
    sys_ = small_system
    k0, k1 = list(sys_.levels())[:2]
    child = sys_.assignment[k1]
    parent = sys_.assignment[k0]
    # two nodes in one child cube never straddle parent cubes
    for q in range(child.max() + 1):
        members = parent[child == q]
        assert len(set(members.tolist())) == 1


def test_locate_consistent(small_system):
    sys_ = small_system
    k = list(sys_.levels())[0]
    x = np.array([0.37])
    ref = locate(sys_, x, k)
    idx = int(np.argmin(np.abs(sys_.grid.flat_nodes()[:, 0] - 0.37)))
    assert ref.index == int(sys_.assignment[k][idx])
    assert ref.level == k


def test_delta_gate():
    grid = WeightedGrid(RootData((1.0,)), 1.0, 4096, freq_radius=4.0)
    with pytest.raises(ValueError):
        build_dyadic(grid, delta=0.1)


def test_resolution_gate():
    grid = WeightedGrid(RootData((1.0,)), 1.0, 256, freq_radius=4.0)
    with pytest.raises(ResolutionError):
        build_dyadic(grid, delta=1.0 / 24.0, k_min=0, k_max=3)


def test_injection_caught(small_system):
    broken = inject_center_shift(small_system, list(small_system.levels())[1],
                                 0, 0.02)
    rep = audit_dyadic(broken)
    assert not rep.passed
    failed = [name for name, cl in rep.details["clauses"].items()
              if not cl["passed"]]
    assert failed, rep.details


def test_scale_partition_masses():
    grid = WeightedGrid(RootData((1.0,)), 4.0, 1024, freq_radius=4.0)
    part = ScalePartition(grid, 0.5, "euclidean")
    assert np.all(part.assignment >= 0)
    total = float(np.sum(part.cube_mass))
    assert total == pytest.approx(float(np.sum(grid.weights)), rel=1e-12)
