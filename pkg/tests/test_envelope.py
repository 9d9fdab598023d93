import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abundanza.envelope import (
    EnvelopePoint,
    envelope_bruteforce,
    envelope_dominates,
    float_hull_vertices,
    lower_envelope,
    merge_envelopes,
    minimizer_for_slope,
    near_hull,
    read_points_csv,
    slopes_increasing,
)
from abundanza.exceptions import DomainError, InputFormatError, PrecisionError
from abundanza.realball import RealBall, SignDecision

values = st.lists(st.integers(min_value=-50, max_value=50), min_size=2, max_size=40)


def _points(ys, xs=None):
    xs = xs if xs is not None else range(len(ys))
    return [EnvelopePoint(x, RealBall.exact(y)) for x, y in zip(xs, ys)]


def test_parabola_keeps_every_point(parabola_points):
    result = lower_envelope(parabola_points)
    assert result.vertex_indices == tuple(range(len(parabola_points)))
    assert slopes_increasing(result)
    assert not result.tie_flags


def test_collinear_points_are_flagged_not_kept():
    result = lower_envelope(_points([0, 1, 2, 3, 4]))
    assert result.vertex_indices == (0, 4)
    assert {flag.index for flag in result.tie_flags} == {1, 2, 3}


def test_concave_points_keep_only_endpoints():
    result = lower_envelope(_points([0, 5, 6, 5, 0]))
    assert result.vertex_indices == (0, 4)
    assert len(result.slopes) == 1
    assert result.slopes[0].sign() is SignDecision.ZERO


def test_offset_shifts_indices():
    result = lower_envelope(_points([3, 0, 3]), offset=10)
    assert result.vertex_indices == (10, 11, 12)


def test_slopes_of_vertices():
    result = lower_envelope(_points([4, 1, 0, 1, 4]))
    assert [slope.midpoint for slope in result.slopes] == [-3, -1, 1, 3]


@settings(max_examples=300)
@given(values)
def test_monotone_chain_matches_brute_force(ys):
    points = _points(ys)
    assert lower_envelope(points).vertex_indices == envelope_bruteforce(points)


@given(values, st.integers(min_value=2, max_value=10))
def test_merging_chunk_hulls_equals_full_hull(ys, size):
    points = _points(ys)
    starts = list(range(0, len(points), size))
    if len(points) - starts[-1] < 2 and len(starts) > 1:
        starts.pop()
    bounds = list(zip(starts, starts[1:] + [len(points)]))
    parts = [lower_envelope(points[a:b], offset=a) for a, b in bounds]
    assert merge_envelopes(parts).vertex_indices == lower_envelope(points).vertex_indices


@given(values, st.integers(min_value=1, max_value=20), st.integers(min_value=-5, max_value=5))
def test_scaling_and_adding_a_line_keep_vertices(ys, scale, slope):
    points = _points(ys)
    moved = _points([scale * y + slope * x for x, y in enumerate(ys)])
    assert lower_envelope(moved).vertex_indices == lower_envelope(points).vertex_indices


@given(values)
def test_envelope_dominates_every_point(ys):
    points = _points(ys)
    assert envelope_dominates(points, lower_envelope(points))


def test_fractional_and_ball_x_coordinates():
    xs = [RealBall.exact(n).log() for n in (2, 3, 4, 5, 6)]
    points = [EnvelopePoint(x, x * x) for x in xs]
    result = lower_envelope(points)
    assert result.vertex_indices == (0, 1, 2, 3, 4)
    assert envelope_bruteforce(points) == (0, 1, 2, 3, 4)


def test_ambiguous_turn_without_refine_raises():
    points = [
        EnvelopePoint(0, RealBall.exact(0)),
        EnvelopePoint(1, RealBall.from_midpoint_radius(0, 1)),
        EnvelopePoint(2, RealBall.exact(0)),
    ]
    with pytest.raises(PrecisionError):
        lower_envelope(points)


def test_ambiguous_turn_is_refined():
    sharp = [
        EnvelopePoint(0, RealBall.exact(0, 256)),
        EnvelopePoint(1, RealBall.exact(Fraction(-1, 2), 256)),
        EnvelopePoint(2, RealBall.exact(0, 256)),
    ]
    blurry = [sharp[0], EnvelopePoint(1, RealBall.from_midpoint_radius(0, 1)), sharp[2]]
    calls = []

    def refine(index, bits):
        calls.append((index, bits))
        return sharp[index]

    result = lower_envelope(blurry, refine=refine)
    assert result.vertex_indices == (0, 1, 2)
    assert calls and all(bits == 256 for _, bits in calls)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        lower_envelope(_points([1]))
    with pytest.raises(DomainError):
        lower_envelope(_points([1, 2, 3], xs=[0, 2, 1]))
    with pytest.raises(DomainError):
        envelope_bruteforce(_points([1]))


def test_minimizer_for_slope():
    points = _points([4, 1, 0, 1, 4])
    assert minimizer_for_slope(points, RealBall.exact(0)).index == 2
    assert minimizer_for_slope(points, RealBall.exact(-2)).index == 1
    tie = minimizer_for_slope(points, RealBall.exact(1))
    assert tie.index == 2 and tie.tied_indices == (3,)


@given(st.lists(st.integers(min_value=-1000, max_value=1000), min_size=3, max_size=60))
def test_float_hull_agrees_with_exact_hull(ys):
    exact = _points(ys)
    float_vertices = set(float_hull_vertices(np.arange(len(ys)), np.array(ys, dtype=float)).tolist())
    certified = set(lower_envelope(exact).vertex_indices)
    # the float hull may keep collinear points but never loses a vertex
    assert certified <= float_vertices


def test_near_hull_keeps_vertices_and_close_points():
    x = np.arange(7, dtype=float)
    y = np.array([9.0, 4.0, 1.0, 0.0, 1.0 + 1e-9, 4.0, 9.0])
    mask = near_hull(x, y, 1e-6)
    assert mask.all()
    mask = near_hull(x, np.array([0.0, 5.0, 0.0, 5.0, 0.0, 5.0, 0.0]), 1e-6)
    assert mask.tolist() == [True, False, True, False, True, False, True]


def test_read_points_csv_with_header():
    handle = io.StringIO("x,y_midpoint,y_radius\n0,1,0\n1,0.5,0.001\n2,1\n")
    points = read_points_csv(handle)
    assert [point.x for point in points] == [0, 1, 2]
    assert points[1].y.contains(Fraction(1, 2))
    assert points[1].y.radius > 0


@pytest.mark.parametrize(
    "text, line",
    [
        ("x,y_midpoint,y_radius\n0,1,0\n1,abc,0\n", 3),
        ("0,1\n1,2,3,4\n", 2),
        ("0,1\n0,2\n", 2),
    ],
)
def test_read_points_csv_reports_line(text, line):
    with pytest.raises(InputFormatError) as info:
        read_points_csv(io.StringIO(text))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_read_points_csv_needs_two_points():
    with pytest.raises(InputFormatError):
        read_points_csv(io.StringIO("x,y_midpoint,y_radius\n0,1,0\n"))


@pytest.mark.slow
@settings(max_examples=500, deadline=None)
@given(st.lists(st.integers(min_value=-10**6, max_value=10**6), min_size=2, max_size=100))
def test_monotone_chain_matches_brute_force_at_full_size(ys):
    points = _points(ys)
    assert lower_envelope(points).vertex_indices == envelope_bruteforce(points)


@pytest.mark.parametrize("header", ["x,y_midpoint", "x,y_midpoint,y_radius"])
def test_read_points_csv_accepts_two_and_three_column_headers(header):
    points = read_points_csv(io.StringIO(f"{header}\n0,1\n1,0\n2,1\n"))
    assert [point.x for point in points] == [0, 1, 2]


def test_read_points_csv_rejects_a_one_column_header():
    with pytest.raises(InputFormatError) as info:
        read_points_csv(io.StringIO("x\n0,1\n1,0\n"))
    assert info.value.line == 1
