import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from projmerge.errors import DimensionError, PreconditionError
from projmerge.grid import (
    AxisSubset,
    CellMask,
    GridDims,
    PartLabeling,
    axis_subsets,
    column_index,
    max_projection,
    presence_maps,
    project,
    projection_fraction_table,
    projection_sizes,
)
from projmerge.schemes import maj3_partition


def naive_projection(cells, axes):
    return {tuple(c[a] for a in axes) for c in cells}


def naive_part_cells(p, part):
    return [cell for cell in itertools.product(range(p.dims.side), repeat=p.dims.t) if p.labels[cell] == part]


@st.composite
def labelings(draw, max_t=4, max_n=4, max_c=4):
    t = draw(st.integers(1, max_t))
    n = draw(st.integers(1, max_n))
    c = draw(st.integers(1, max_c))
    labels = draw(st.lists(st.integers(0, c - 1), min_size=n**t, max_size=n**t))
    return PartLabeling(GridDims(t, n), c, np.asarray(labels))


def test_dims_validation():
    with pytest.raises(PreconditionError):
        GridDims(0, 3)
    with pytest.raises(PreconditionError):
        GridDims(2, 0)
    with pytest.raises((PreconditionError, DimensionError)):
        GridDims(70, 2)
    assert GridDims(3, 4).n_cells == 64


def test_axis_subset_rules():
    with pytest.raises((PreconditionError, DimensionError)):
        AxisSubset((1, 0))
    with pytest.raises((PreconditionError, DimensionError)):
        AxisSubset((0, 0))
    with pytest.raises(DimensionError):
        AxisSubset((0, 3)).check(3)
    assert [u.indices for u in axis_subsets(3, 2)] == [(0, 1), (0, 2), (1, 2)]
    assert AxisSubset((1,)).complement(3) == (0, 2)


def test_project_full_grid():
    dims = GridDims(3, 4)
    img = project(CellMask.full(dims), AxisSubset((0, 1)))
    assert img.size == 16


def test_project_singleton():
    dims = GridDims(3, 4)
    img = project(CellMask.from_cells(dims, [(1, 2, 3)]), AxisSubset((0, 2)))
    assert img.size == 1
    assert list(img.points()) == [(1, 3)]


def test_project_majority_part():
    p = maj3_partition(2)
    img = project(p.part_mask(0), AxisSubset((0, 1)))
    assert img.size == 3
    assert (1, 1) not in set(img.points())


def test_project_bad_axis():
    with pytest.raises(DimensionError):
        project(CellMask.full(GridDims(2, 3)), AxisSubset((0, 2)))


def test_majority_table_all_three_quarters():
    entries = projection_fraction_table(maj3_partition(2), 2)
    assert len(entries) == 6
    assert {(e.size, e.fraction) for e in entries} == {(3, Fraction(3, 4))}


def test_one_part_labeling_is_full():
    p = PartLabeling(GridDims(3, 3), 1, np.zeros(27, dtype=int))
    for s in (1, 2, 3):
        assert all(e.size == 3**s and e.fraction == 1 for e in projection_fraction_table(p, s))


def test_max_projection_tie_break():
    best = max_projection(maj3_partition(2), 2)
    assert (best.size, best.part, best.axes.indices) == (3, 0, (0, 1))


def test_max_projection_empty_part():
    p = PartLabeling(GridDims(3, 2), 2, np.ones(8, dtype=int))
    best = max_projection(p, 2)
    assert (best.size, best.part, best.axes.indices) == (4, 1, (0, 1))


def test_labeling_validation():
    with pytest.raises(PreconditionError):
        PartLabeling(GridDims(2, 2), 2, np.array([0, 1, 2, 0]))
    with pytest.raises(DimensionError):
        PartLabeling(GridDims(2, 2), 2, np.array([0, 1, 1]))


def test_labels_read_only():
    p = maj3_partition(2)
    with pytest.raises(ValueError):
        p.labels[0, 0, 0] = 1


def test_file_round_trip():
    p = maj3_partition(4)
    text = p.dumps()
    assert PartLabeling.loads(text) == p
    data = p.to_dict()
    assert set(data) == {"t", "n", "c", "labels"}
    assert maj3_partition(2).to_dict()["labels"] == "00010111"


@settings(max_examples=200, deadline=None)
@given(labelings())
def test_projection_sizes_match_naive_oracle(p):
    for s in range(1, p.dims.t + 1):
        sizes = projection_sizes(p, s)
        for k, U in enumerate(axis_subsets(p.dims.t, s)):
            for part in range(p.c):
                expected = len(naive_projection(naive_part_cells(p, part), U.indices))
                assert sizes[part, k] == expected


@settings(max_examples=200, deadline=None)
@given(labelings())
def test_cover_property(p):
    for s in range(1, p.dims.t + 1):
        maps = presence_maps(p, axis_subsets(p.dims.t, s))
        for pres in maps.values():
            assert np.all(pres != 0)


@settings(max_examples=200, deadline=None)
@given(labelings(max_c=2), st.data())
def test_monotone_and_union(p, data):
    dims = p.dims
    a = CellMask(dims, p.labels == 0)
    extra = np.asarray(data.draw(st.lists(st.booleans(), min_size=dims.n_cells, max_size=dims.n_cells)))
    b = CellMask(dims, extra.reshape(dims.shape))
    for s in range(1, dims.t + 1):
        for U in axis_subsets(dims.t, s):
            assert project(a, U).issubset(project(a | b, U))
            assert project(a | b, U) == project(a, U) | project(b, U)


@settings(max_examples=100, deadline=None)
@given(labelings(max_t=3, max_n=3))
def test_string_round_trip(p):
    assert PartLabeling.from_string(p.dims.t, p.dims.side, p.c, p.label_string()) == p


def test_column_index_matches_coordinates():
    dims = GridDims(3, 3)
    col = column_index(dims, 2)
    for flat, cell in enumerate(itertools.product(range(3), repeat=3)):
        for k, U in enumerate(axis_subsets(3, 2)):
            a, b = (cell[i] for i in U.indices)
            assert col[k, flat] == a * 3 + b


def test_slab_scan_agrees_with_whole_grid(monkeypatch):
    import projmerge.grid as grid

    p = PartLabeling(GridDims(3, 6), 3, np.random.default_rng(3).integers(3, size=216))
    whole = projection_sizes(p, 2)
    monkeypatch.setattr(grid, "_SLAB_CELLS", 40)
    assert np.array_equal(projection_sizes(p, 2), whole)
