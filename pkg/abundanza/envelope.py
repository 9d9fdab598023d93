"""
Lower convex envelopes of functions sampled on strictly increasing grids.

``lower_envelope`` is a one-pass monotone chain whose orientation test is the
certified sign of a cross product (exact x, ball y). Ambiguous turns are
re-evaluated at higher precision through a caller supplied ``refine``
callback. Collinear interior points are never vertices; they are reported in
``tie_flags``.

For grids of millions of points ``float_hull_vertices`` and ``near_hull`` give
a vectorized float pre-filter that keeps every point within a tolerance of the
float hull, so only a handful of points reach the certified chain.
"""

import csv
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import DomainError, InputFormatError, PrecisionError
from .realball import RealBall, SignDecision
from .settings import MAX_PRECISION, PRECISION

logger = logging.getLogger(__name__)

POINT_COLUMNS = ("x", "y_midpoint", "y_radius")


@dataclass(frozen=True)
class EnvelopePoint:
    x: object
    y: RealBall

    @property
    def precision(self):
        if isinstance(self.x, RealBall):
            return min(self.x.precision, self.y.precision)
        return self.y.precision


@dataclass(frozen=True)
class TieFlag:
    """A point certified collinear with its neighbours and left off the hull."""

    index: int
    left: int
    right: int


@dataclass(frozen=True)
class EnvelopeResult:
    vertex_indices: tuple
    vertices: tuple
    slopes: tuple
    tie_flags: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.vertex_indices)


def cross(a, b, c):
    """(b - a) x (c - a); positive when b lies strictly below the chord a-c."""
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def _next_rung(bits, max_precision):
    if bits >= max_precision:
        return None
    return min(2 * bits, max_precision)


def _certified_turn(entries, refine, max_precision):
    """
    Sign of the turn at the middle of three (index, point) entries, refining
    the points while it is ambiguous. Returns the sign and the entries used.
    """
    while True:
        value = cross(*(point for _, point in entries))
        decision = value.sign() if isinstance(value, RealBall) else _exact_sign(value)
        if decision.certified:
            return decision, entries
        bits = _next_rung(min(point.precision for _, point in entries), max_precision)
        if refine is None or bits is None:
            raise PrecisionError(
                f"orientation of points {[index for index, _ in entries]} undecided: {value}",
                ball=value,
                precision=min(point.precision for _, point in entries),
            )
        logger.debug(f"Refining points {[index for index, _ in entries]} to {bits} bits")
        entries = [(index, refine(index, bits)) for index, _ in entries]


def _exact_sign(value):
    if value > 0:
        return SignDecision.POSITIVE
    return SignDecision.ZERO if value == 0 else SignDecision.NEGATIVE


def _check_increasing(previous, point, index):
    delta = point.x - previous.x
    decision = delta.sign() if isinstance(delta, RealBall) else _exact_sign(delta)
    if decision is SignDecision.POSITIVE:
        return
    if decision is SignDecision.AMBIGUOUS:
        raise PrecisionError(
            f"x order of point {index} undecided", ball=delta, precision=point.precision
        )
    raise DomainError(f"x values must be strictly increasing (point {index})")


def _hull(indexed_points, refine=None, max_precision=MAX_PRECISION):
    stack = []
    ties = []
    count = 0
    for index, point in indexed_points:
        count += 1
        if stack:
            _check_increasing(stack[-1][1], point, index)
        current = (index, point)
        while len(stack) >= 2:
            decision, (left, middle, current) = _certified_turn(
                [stack[-2], stack[-1], current], refine, max_precision
            )
            stack[-2], stack[-1] = left, middle
            if decision is SignDecision.POSITIVE:
                break
            stack.pop()
            if decision is SignDecision.ZERO:
                ties.append(TieFlag(middle[0], left[0], current[0]))
        stack.append(current)
    if count < 2:
        raise DomainError(f"an envelope needs at least 2 points, got {count}")
    vertices = tuple(point for _, point in stack)
    slopes = tuple((b.y - a.y) / (b.x - a.x) for a, b in zip(vertices, vertices[1:]))
    return EnvelopeResult(
        vertex_indices=tuple(index for index, _ in stack),
        vertices=vertices,
        slopes=slopes,
        tie_flags=tuple(ties),
    )


def lower_envelope(points, refine=None, max_precision=MAX_PRECISION, offset=0):
    """
    Lower convex hull of ``points`` (any iterable, consumed once).

    ``refine(index, bits)`` must return the point at ``index`` evaluated at
    ``bits`` of precision; without it an ambiguous orientation raises
    PrecisionError. Indices count from ``offset``.
    """
    return _hull(enumerate(points, start=offset), refine, max_precision)


def merge_envelopes(parts, refine=None, max_precision=MAX_PRECISION):
    """Re-hull the vertices of envelopes computed on consecutive chunks."""
    chained = (
        (index, point)
        for part in parts
        for index, point in zip(part.vertex_indices, part.vertices)
    )
    merged = _hull(chained, refine, max_precision)
    ties = tuple(flag for part in parts for flag in part.tie_flags) + merged.tie_flags
    return EnvelopeResult(merged.vertex_indices, merged.vertices, merged.slopes, ties)


def slopes_increasing(result):
    return all(
        (later - earlier).sign() is SignDecision.POSITIVE
        for earlier, later in zip(result.slopes, result.slopes[1:])
    )


def envelope_dominates(points, result):
    """
    Every point lies certifiably on or above the chord of its bracketing
    vertices.
    """
    points = list(points)
    for (i, a), (j, b) in zip(
        zip(result.vertex_indices, result.vertices),
        zip(result.vertex_indices[1:], result.vertices[1:]),
    ):
        for point in points[i + 1 : j]:
            value = cross(a, point, b)
            decision = value.sign() if isinstance(value, RealBall) else _exact_sign(value)
            if not decision.non_positive:
                return False
    return True


@dataclass(frozen=True)
class SlopeMinimizer:
    index: int
    tied_indices: tuple = ()

    @property
    def tie(self):
        return bool(self.tied_indices)


def minimizer_for_slope(points, slope):
    """
    Index minimizing y - slope·x. Certified-equal minima resolve to the
    smallest index with the others listed in ``tied_indices``.
    """
    points = list(points)
    if not points:
        raise DomainError("no points given")
    values = [point.y - slope * point.x for point in points]
    lowest_upper = min(value.upper for value in values)
    contenders = [i for i, value in enumerate(values) if value.lower <= lowest_upper]
    if len(contenders) == 1:
        return SlopeMinimizer(contenders[0])
    first = values[contenders[0]]
    undecided = [
        i
        for i in contenders[1:]
        if (values[i] - first).sign() is not SignDecision.ZERO
    ]
    if undecided:
        raise PrecisionError(
            f"minimizers {contenders} of y - a·x cannot be separated",
            ball=values[undecided[0]] - first,
            precision=first.precision,
        )
    return SlopeMinimizer(contenders[0], tuple(contenders[1:]))


def _exact_coordinates(points):
    coordinates = []
    for point in points:
        if isinstance(point.x, RealBall) or point.y.radius != 0:
            return None
        coordinates.append((Fraction(point.x), point.y.lower_fraction()))
    return coordinates


def envelope_bruteforce(points, max_points=10**4):
    """
    Vertex indices collected as the unique minimizers of y - a·x over test
    slopes a placed below, between and above all pairwise chord slopes.

    Quadratic in the number of chords; a test oracle only.
    """
    points = list(points)
    if len(points) < 2:
        raise DomainError(f"an envelope needs at least 2 points, got {len(points)}")
    if len(points) > max_points:
        raise DomainError(f"brute force is limited to {max_points} points")
    exact = _exact_coordinates(points)
    if exact is not None:
        return _bruteforce_exact(exact)
    return _bruteforce_balls(points)


def _test_slopes(chords):
    chords = sorted(set(chords))
    tests = [chords[0] - 1]
    tests.extend((a + b) / 2 for a, b in zip(chords, chords[1:]))
    tests.append(chords[-1] + 1)
    return tests


def _bruteforce_exact(coordinates):
    chords = [
        (yb - ya) / (xb - xa)
        for i, (xa, ya) in enumerate(coordinates)
        for xb, yb in coordinates[i + 1 :]
    ]
    vertices = set()
    for slope in _test_slopes(chords):
        values = [y - slope * x for x, y in coordinates]
        vertices.add(values.index(min(values)))
    return tuple(sorted(vertices))


def _bruteforce_balls(points):
    chords = [
        (b.y - a.y) / (b.x - a.x)
        for i, a in enumerate(points)
        for b in points[i + 1 :]
    ]
    chords.sort(key=lambda ball: ball.midpoint)
    tests = [chords[0] - 1]
    tests.extend((a + b) / 2 for a, b in zip(chords, chords[1:]) if not a.overlaps(b))
    tests.append(chords[-1] + 1)
    vertices = set()
    for slope in tests:
        minimizer = minimizer_for_slope(points, slope)
        if not minimizer.tie:
            vertices.add(minimizer.index)
    return tuple(sorted(vertices))


# Float pre-filter


def float_hull_vertices(x, y):
    """Indices of the lower hull of float samples (quickhull, numpy)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if n <= 2:
        return np.arange(n)
    vertices = {0, n - 1}
    pending = [(0, n - 1)]
    while pending:
        i, j = pending.pop()
        if j - i < 2:
            continue
        turn = (x[j] - x[i]) * (y[i + 1 : j] - y[i]) - (y[j] - y[i]) * (x[i + 1 : j] - x[i])
        k = int(np.argmin(turn))
        if turn[k] >= 0:
            continue
        k += i + 1
        vertices.add(k)
        pending.append((i, k))
        pending.append((k, j))
    return np.array(sorted(vertices), dtype=np.int64)


def near_hull(x, y, tolerance):
    """
    Boolean mask of points within ``tolerance`` (scalar or per point) of the
    float lower hull; hull vertices are always kept.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    vertices = float_hull_vertices(x, y)
    hull = np.interp(x, x[vertices], y[vertices])
    mask = (y - hull) <= tolerance
    mask[vertices] = True
    return mask


# CSV point files


def _parse_exact(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return Fraction(text)


def read_points_csv(handle, precision=PRECISION):
    """
    Parse ``x,y_midpoint,y_radius`` rows (header optional) into EnvelopePoints.
    """
    points = []
    reader = csv.reader(handle)
    for line, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = tuple(cell.strip() for cell in row)
        if line == 1 and len(cells) >= 2 and cells == POINT_COLUMNS[: len(cells)]:
            continue
        if len(row) not in (2, 3):
            raise InputFormatError(f"expected columns {POINT_COLUMNS}, got {len(row)} values", line)
        try:
            x = _parse_exact(row[0])
            radius = row[2].strip() if len(row) == 3 else "0"
            y = RealBall.from_midpoint_radius(row[1].strip(), radius, precision)
        except (ValueError, ZeroDivisionError, DomainError) as exc:
            raise InputFormatError(f"cannot parse {row}: {exc}", line) from exc
        if points and not x > points[-1].x:
            raise InputFormatError(f"x={x} does not increase", line)
        points.append(EnvelopePoint(x, y))
    if len(points) < 2:
        raise InputFormatError("an envelope needs at least 2 points", None)
    return points
