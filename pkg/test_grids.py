#!/usr/bin/env python3
"""
Grid, KGTEN and bilinear kernel tests
"""
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grids import (
    ChannelGrid,
    GridIndexError,
    GridShape,
    GridValidationError,
    Point2,
    TensorFormatError,
    TensorIOError,
    TensorTruncationError,
    bilinear_sample,
    bilinear_sample_pair,
    parse_tensor,
    read_tensor,
    splat_bilinear,
    write_tensor,
)
from grids.files import atomic_write_bytes


def kgten(c, h, w, values):
    header = f"KGTEN\ndtype=f32 order=chw c={c} h={h} w={w}\n".encode("ascii")
    return header + struct.pack(f"<{len(values)}f", *values)


# =====================================================
# KGTEN
# =====================================================

def test_parse_zero_tensor():
    grid = parse_tensor(kgten(1, 2, 2, [0, 0, 0, 0]))
    assert grid.channels == 1
    assert grid.shape == GridShape(2, 2)
    assert not grid.data.any()


def test_write_read_is_bit_identical(tmp_path):
    rng = np.random.default_rng(3)
    grid = ChannelGrid(rng.normal(size=(3, 7, 5)).astype(np.float32))
    path = tmp_path / "g.kgten"
    write_tensor(grid, path)
    assert read_tensor(path) == grid
    assert read_tensor(path).data.tobytes() == grid.data.tobytes()


def test_single_value_layout():
    payload = ChannelGrid([[[3.5]]]).to_bytes()
    assert payload == b"KGTEN\ndtype=f32 order=chw c=1 h=1 w=1\n" + struct.pack("<f", 3.5)


def test_writing_twice_gives_identical_files(tmp_path):
    grid = ChannelGrid(np.arange(12, dtype=np.float32).reshape(1, 3, 4))
    write_tensor(grid, tmp_path / "a.kgten")
    write_tensor(grid, tmp_path / "b.kgten")
    assert (tmp_path / "a.kgten").read_bytes() == (tmp_path / "b.kgten").read_bytes()


def test_payload_size():
    grid = ChannelGrid.zeros(5, GridShape(512, 512))
    header_len = len(b"KGTEN\ndtype=f32 order=chw c=5 h=512 w=512\n")
    assert len(grid.to_bytes()) - header_len == 5 * 512 * 512 * 4


def test_one_float_short_is_truncation():
    with pytest.raises(TensorTruncationError):
        parse_tensor(kgten(1, 2, 2, [0, 0, 0]))


def test_trailing_bytes_rejected():
    with pytest.raises(TensorFormatError):
        parse_tensor(kgten(1, 1, 2, [0, 0, 0]))


@pytest.mark.parametrize(
    "payload",
    [
        b"KGTEX\ndtype=f32 order=chw c=1 h=1 w=1\n\x00\x00\x00\x00",
        b"KGTEN\ndtype=f64 order=chw c=1 h=1 w=1\n\x00\x00\x00\x00",
        b"KGTEN\ndtype=f32 order=hwc c=1 h=1 w=1\n\x00\x00\x00\x00",
        b"KGTEN\ndtype=f32 order=chw c=0 h=1 w=1\n",
        b"KGTEN\ndtype=f32 order=chw c=1 h=1 w=1",
    ],
)
def test_malformed_header(payload):
    with pytest.raises(TensorFormatError):
        parse_tensor(payload)


def test_non_finite_payload_rejected():
    with pytest.raises(GridValidationError):
        parse_tensor(kgten(1, 1, 2, [1.0, float("nan")]))


def test_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.kgten"
    with pytest.raises(TensorIOError) as e:
        read_tensor(missing)
    assert str(missing) in str(e.value)


def test_atomic_write_leaves_no_temp_files(tmp_path):
    atomic_write_bytes(tmp_path / "sub" / "out.bin", b"abc")
    assert sorted(p.name for p in (tmp_path / "sub").iterdir()) == ["out.bin"]


# =====================================================
# GRID TYPES
# =====================================================

def test_grid_is_immutable():
    grid = ChannelGrid(np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        grid.data[0, 0, 0] = 1.0


def test_two_dimensional_input_gets_one_channel():
    assert ChannelGrid(np.ones((3, 4))).channels == 1


@pytest.mark.parametrize("h,w", [(0, 3), (3, 0), (-1, 2)])
def test_grid_shape_must_be_positive(h, w):
    with pytest.raises(GridValidationError):
        GridShape(h, w)


def test_channel_out_of_range():
    grid = ChannelGrid.zeros(2, GridShape(2, 2))
    with pytest.raises(GridIndexError):
        grid.channel(2)


def test_point_rejects_nan():
    with pytest.raises(GridValidationError):
        Point2(float("nan"), 0.0)


# =====================================================
# BILINEAR SAMPLING
# =====================================================

def test_sample_at_node():
    data = np.arange(50, dtype=np.float32).reshape(1, 5, 10)
    grid = ChannelGrid(data)
    assert bilinear_sample(grid, 0, Point2(3, 4)) == data[0, 4, 3]


def test_sample_midpoint():
    grid = ChannelGrid([[[0, 1], [0, 1]]])
    assert bilinear_sample(grid, 0, Point2(0.5, 0.5)) == pytest.approx(0.5)


def test_sample_quarter_weights():
    grid = ChannelGrid([[[0, 4, 0], [0, 4, 0]]])
    assert bilinear_sample(grid, 0, Point2(0.25, 0)) == pytest.approx(1.0)


def test_sample_clamps_to_border():
    grid = ChannelGrid([[[1, 2], [3, 4]]])
    assert bilinear_sample(grid, 0, Point2(-5, -5)) == 1.0
    assert bilinear_sample(grid, 0, Point2(10, 10)) == 4.0


def test_sample_pair_reads_adjacent_channels():
    grid = ChannelGrid(np.stack([np.full((2, 2), 1.5), np.full((2, 2), -2.0)]))
    assert bilinear_sample_pair(grid, 0, Point2(0.3, 0.7)) == pytest.approx((1.5, -2.0))


def test_sample_bad_channel():
    with pytest.raises(GridIndexError):
        bilinear_sample(ChannelGrid.zeros(1, GridShape(2, 2)), 1, Point2(0, 0))


# =====================================================
# SPLATTING
# =====================================================

def test_splat_at_node_hits_one_cell():
    acc = splat_bilinear([2.0], [1.0], [0.5], GridShape(3, 4))
    expected = np.zeros((3, 4))
    expected[1, 2] = 0.5
    assert np.array_equal(acc, expected)


def test_splat_drops_outside_votes():
    acc = splat_bilinear([-0.5, 10.0], [0.0, 0.0], [1.0, 1.0], GridShape(2, 2))
    assert acc[0, 0] == pytest.approx(0.5)
    assert acc.sum() == pytest.approx(0.5)


@settings(max_examples=50, deadline=None)
@given(
    votes=st.lists(
        st.tuples(
            st.floats(0, 14, allow_nan=False),
            st.floats(0, 9, allow_nan=False),
            st.floats(0, 3, allow_nan=False),
        ),
        max_size=40,
    )
)
def test_splat_conserves_interior_mass(votes):
    xs = [v[0] for v in votes]
    ys = [v[1] for v in votes]
    ws = [v[2] for v in votes]
    acc = splat_bilinear(xs, ys, ws, GridShape(11, 16))
    assert acc.sum() == pytest.approx(math.fsum(ws), abs=1e-9)
    assert (acc >= 0).all()


@settings(max_examples=30, deadline=None)
@given(
    x=st.floats(0, 6, allow_nan=False),
    y=st.floats(0, 4, allow_nan=False),
    seed=st.integers(0, 2**16),
)
def test_splat_is_adjoint_of_sampling(x, y, seed):
    # <splat(p), f> == sample(f, p) for interior p
    rng = np.random.default_rng(seed)
    field = rng.normal(size=(5, 7)).astype(np.float32)
    acc = splat_bilinear([x], [y], [1.0], GridShape(5, 7))
    sampled = bilinear_sample(ChannelGrid(field), 0, Point2(x, y))
    assert float((acc * field.astype(np.float64)).sum()) == pytest.approx(sampled, abs=1e-6)
