"""
Weighted Robin deficits and highest abundant (HA) numbers.

R_s(n) = (e^γ n log log n - σ(n)) (log n)^s. The HA numbers of a range are
the vertices of the lower convex envelope of n -> R_s(n); they are found by a
chunked float pre-filter followed by the certified monotone chain.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import scan
from .arithmetic import Factorization, abundancy, sigma_of_factorization, sigma_segment, value_and_log
from .criticals import critical_epsilon, n_for_epsilon
from .envelope import EnvelopePoint, lower_envelope, near_hull
from .exceptions import DomainError, PrecisionError, ResourceBudgetError
from .realball import RealBall, SignDecision, certified_sign, const_euler_gamma, const_pi, exp_gamma
from .settings import (
    CHUNK_SIZE,
    FLOAT_MARGIN,
    MAX_PRECISION,
    PRECISION,
    SIEVE_BUDGET,
    SIEVE_HARD_LIMIT,
    THREADS,
)

logger = logging.getLogger(__name__)

EXP_GAMMA = 1.7810724179901979

# figure_data evaluates a ball at every point of the range
FIGURE_LIMIT = 10**5


@dataclass(frozen=True)
class Weight:
    """The weight τ(n) = (log n)^s for an exact rational s."""

    s: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "s", Fraction(self.s))

    @classmethod
    def parse(cls, text):
        try:
            return cls(Fraction(str(text).strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"weight exponent must be an exact rational, got {text!r}") from exc

    @property
    def min_n(self):
        return 2 if self.s.denominator == 1 else 3

    def check(self, n):
        if n < self.min_n:
            raise DomainError(f"R_s with s={self.s} needs n >= {self.min_n}, got {n}")

    def evaluate(self, log_n):
        if self.s == 0:
            return RealBall.exact(1, log_n.precision)
        return log_n.pow_real(self.s)

    def evaluate_float(self, log_n):
        if self.s == 0:
            return np.ones_like(log_n)
        return log_n ** float(self.s)

    def __str__(self):
        return str(self.s)


def _as_weight(w):
    return w if isinstance(w, Weight) else Weight(Fraction(w))


def _value_sigma_log(n, precision, sigma=None):
    if isinstance(n, Factorization):
        value, log_n = value_and_log(n, precision)
        return value, sigma if sigma is not None else sigma_of_factorization(n), log_n
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if sigma is None:
        sigma = sigma_of_factorization(Factorization.from_int(n))
    return n, sigma, RealBall.exact(n, precision).log()


def r_from_sigma(n, sigma, log_n, weight, precision=PRECISION):
    """R_s(n) from an exact σ(n) and a ball for log n."""
    deficit = exp_gamma(precision) * n * log_n.log() - sigma
    if weight.s == 0:
        return deficit
    return deficit * weight.evaluate(log_n)


def r_weighted(n, w=Weight(), precision=PRECISION, sigma=None):
    """Certified ball for R_s(n); ``n`` is an int or a Factorization."""
    weight = _as_weight(w)
    value, sigma, log_n = _value_sigma_log(n, precision, sigma)
    weight.check(value)
    return r_from_sigma(value, sigma, log_n, weight, precision)


def t_statistic(n, precision=PRECISION):
    """T(n) = (e^γ log log n - σ(n)/n) √(log n)."""
    if isinstance(n, Factorization):
        ratio = abundancy(n)
        _, log_n = value_and_log(n, precision, with_value=False)
        if n.value < 3:
            raise DomainError(f"T(n) needs n >= 3, got {n}")
    else:
        if n < 3:
            raise DomainError(f"T(n) needs n >= 3, got {n}")
        ratio = abundancy(Factorization.from_int(n))
        log_n = RealBall.exact(n, precision).log()
    return (exp_gamma(precision) * log_n.log() - ratio) * log_n.sqrt()


def ramanujan_constants(precision=PRECISION):
    """c1 = e^γ(2√2 - 4 - γ + log 4π) and c2 = e^γ(2√2 + γ - log 4π)."""
    gamma = const_euler_gamma(precision)
    root8 = RealBall.exact(8, precision).sqrt()
    log_4pi = (const_pi(precision) * 4).log()
    eg = exp_gamma(precision)
    return eg * (root8 - 4 - gamma + log_4pi), eg * (root8 + gamma - log_4pi)


# HA numbers


@dataclass(frozen=True)
class HaReport:
    domain: tuple
    s: Fraction
    ha_numbers: tuple
    values: tuple
    slopes: tuple
    slope_signs: tuple
    sign_split: int
    tie_flags: tuple = field(default_factory=tuple)

    @property
    def minimum_at(self):
        """Vertex where the envelope (and so R_s on the range) is smallest."""
        return self.ha_numbers[self.sign_split]

    def __len__(self):
        return len(self.ha_numbers)


@dataclass(frozen=True)
class _Candidates:
    n: np.ndarray
    sigma: np.ndarray
    y: np.ndarray
    tolerance: np.ndarray

    @classmethod
    def empty(cls):
        return cls(*(np.empty(0, dtype=dtype) for dtype in (np.int64, np.uint64, float, float)))

    def select(self, mask):
        return _Candidates(self.n[mask], self.sigma[mask], self.y[mask], self.tolerance[mask])

    @classmethod
    def concatenate(cls, parts):
        parts = list(parts)
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, name) for p in parts]) for name in ("n", "sigma", "y", "tolerance")))

    def __len__(self):
        return len(self.n)


def _check_range(lo, hi, budget, weight=None):
    if weight is not None:
        weight.check(lo)
    if lo < 2:
        raise DomainError(f"lo must be at least 2, got {lo}")
    if hi <= lo:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    allowed = min(budget, SIEVE_HARD_LIMIT)
    if hi > allowed:
        raise ResourceBudgetError(hi, allowed, what="HA range")


def _chunk_candidates(weight):
    """Float phase for one chunk: σ by sieve, R_s in floats, near-hull mask."""

    def run(start, stop):
        sigma = sigma_segment(start, stop, SIEVE_HARD_LIMIT)
        n = np.arange(start, stop + 1, dtype=np.float64)
        log_n = np.log(n)
        loglog = np.log(log_n)
        factor = weight.evaluate_float(log_n)
        sigma_f = sigma.astype(np.float64)
        y = (EXP_GAMMA * n * loglog - sigma_f) * factor
        tolerance = FLOAT_MARGIN * (EXP_GAMMA * n * np.abs(loglog) + sigma_f) * factor
        chunk = _Candidates(np.arange(start, stop + 1, dtype=np.int64), sigma, y, tolerance)
        if len(chunk) <= 2:
            return chunk
        return chunk.select(near_hull(n, y, tolerance))

    return run


def _slope_between(i, j, refine):
    """Chord slope between candidates i and j, evaluated at a given precision."""

    def evaluate(bits):
        a, b = refine(i, bits), refine(j, bits)
        return (b.y - a.y) / (b.x - a.x)

    return evaluate


def ha_numbers(
    lo,
    hi,
    s=0,
    precision=PRECISION,
    max_precision=MAX_PRECISION,
    budget=SIEVE_BUDGET,
    chunk_size=CHUNK_SIZE,
    threads=THREADS,
):
    """
    HA numbers of R_s on {lo, ..., hi} with their certified chord slopes.

    Each chunk keeps the points within FLOAT_MARGIN (relative) of its own float
    hull; the survivors are filtered again against their joint hull and then
    run through the certified chain.
    """
    weight = _as_weight(s)
    _check_range(lo, hi, budget, weight)
    timer = scan.ChunkTimer(f"HA s={weight}")
    parts = []
    for start, stop, part in scan.map_chunks(_chunk_candidates(weight), lo, hi, chunk_size, threads):
        parts.append(part)
        timer.chunk_done(start, stop, len(part))
    candidates = _Candidates.concatenate(parts)
    if len(candidates) > 2:
        x = candidates.n.astype(np.float64)
        candidates = candidates.select(near_hull(x, candidates.y, candidates.tolerance))
    logger.debug(f"HA s={weight}: {len(candidates)} candidates reach the certified chain")

    numbers = [int(v) for v in candidates.n]
    sigmas = [int(v) for v in candidates.sigma]

    def refine(index, bits):
        n = numbers[index]
        log_n = RealBall.exact(n, bits).log()
        return EnvelopePoint(n, r_from_sigma(n, sigmas[index], log_n, weight, bits))

    points = [refine(index, precision) for index in range(len(numbers))]
    result = lower_envelope(points, refine=refine, max_precision=max_precision)

    signs = []
    for (i, j), slope in zip(zip(result.vertex_indices, result.vertex_indices[1:]), result.slopes):
        decision = slope.sign()
        if not decision.certified:
            decision = certified_sign(
                _slope_between(i, j, refine),
                precision,
                max_precision,
                what=f"slope {numbers[i]}..{numbers[j]}",
            )
        signs.append(decision)
    report = HaReport(
        domain=(lo, hi),
        s=weight.s,
        ha_numbers=tuple(numbers[i] for i in result.vertex_indices),
        values=tuple(point.y for point in result.vertices),
        slopes=result.slopes,
        slope_signs=tuple(signs),
        sign_split=sum(decision is SignDecision.NEGATIVE for decision in signs),
        tie_flags=tuple((numbers[flag.index], numbers[flag.left], numbers[flag.right]) for flag in result.tie_flags),
    )
    logger.info(
        f"HA s={weight} on [{lo}, {hi}]: {len(report)} numbers in {timer.elapsed:.2f}s, "
        f"{report.sign_split} negative slopes"
    )
    return report


# Plot data


@dataclass(frozen=True)
class FigurePoint:
    n: int
    value: RealBall
    vertex: bool
    envelope: RealBall


@dataclass(frozen=True)
class FigureData:
    report: HaReport
    points: tuple


def figure_data(lo, hi, s=0, precision=PRECISION, max_precision=MAX_PRECISION, limit=FIGURE_LIMIT):
    """
    Every (n, R_s(n)) on the range together with the envelope value at n
    (linear between consecutive HA numbers) and a vertex marker.
    """
    weight = _as_weight(s)
    if hi - lo + 1 > limit:
        raise ResourceBudgetError(hi - lo + 1, limit, what="figure points")
    report = ha_numbers(lo, hi, weight, precision, max_precision, threads=1)
    sigma = sigma_segment(lo, hi)
    vertices = dict(zip(report.ha_numbers, report.values))
    points = []
    segment = 0
    for offset, n in enumerate(range(lo, hi + 1)):
        log_n = RealBall.exact(n, precision).log()
        value = r_from_sigma(n, int(sigma[offset]), log_n, weight, precision)
        while segment < len(report.slopes) - 1 and n > report.ha_numbers[segment + 1]:
            segment += 1
        left = report.ha_numbers[segment]
        envelope = vertices[left] + report.slopes[segment] * (n - left)
        points.append(FigurePoint(n, value, n in vertices, vertices.get(n, envelope)))
    return FigureData(report, tuple(points))


# The colossally abundant numbers as an envelope


@dataclass(frozen=True)
class CaEnvelopeReport:
    vertices: tuple
    slopes: tuple
    ca_numbers: tuple
    artefacts: tuple


def _log_sigma_chunk(start, stop):
    sigma = sigma_segment(start, stop, SIEVE_HARD_LIMIT)
    log_n = np.log(np.arange(start, stop + 1, dtype=np.float64))
    log_sigma = np.log(sigma.astype(np.float64))
    y = log_n - log_sigma
    tolerance = FLOAT_MARGIN * (log_n + log_sigma)
    chunk = _Candidates(np.arange(start, stop + 1, dtype=np.int64), sigma, y, tolerance)
    if len(chunk) <= 2:
        return chunk
    return chunk.select(near_hull(log_n, y, tolerance))


# A CA vertex's incoming chord has slope exactly -ε_i; its window (ε_(i+1), ε_i)
# starts just below that, so test values sit a relative 2^-32 under it.
WINDOW_SHIFT = Fraction(2**32 - 1, 2**32)


def _vertex_epsilons(slopes, precision):
    """One ε per vertex just inside the window it would own as a CA number, or None."""
    epsilons = [critical_epsilon(2, 1, precision).value * WINDOW_SHIFT]
    for slope in slopes:
        eps = -slope
        epsilons.append(eps * WINDOW_SHIFT if eps.sign() is SignDecision.POSITIVE else None)
    return epsilons


def ca_via_envelope(
    hi,
    precision=PRECISION,
    max_precision=MAX_PRECISION,
    budget=SIEVE_BUDGET,
    chunk_size=CHUNK_SIZE,
    threads=THREADS,
):
    """
    Lower envelope of (log n, log n - log σ(n)) over n = 2..hi.

    Chord slopes are -ε. A vertex is classified as a CA number when the
    maximizer n_ε for an ε just below its incoming slope is the vertex itself;
    the others are artefacts of cutting the domain at ``hi``.
    """
    _check_range(2, hi, budget)
    parts = [part for _, _, part in scan.map_chunks(_log_sigma_chunk, 2, hi, chunk_size, threads)]
    candidates = _Candidates.concatenate(parts)
    if len(candidates) > 2:
        x = np.log(candidates.n.astype(np.float64))
        candidates = candidates.select(near_hull(x, candidates.y, candidates.tolerance))
    numbers = [int(v) for v in candidates.n]
    sigmas = [int(v) for v in candidates.sigma]
    logger.debug(f"CA envelope up to {hi}: {len(numbers)} candidates")

    def refine(index, bits):
        log_n = RealBall.exact(numbers[index], bits).log()
        log_sigma = RealBall.exact(sigmas[index], bits).log()
        return EnvelopePoint(log_n, log_n - log_sigma)

    points = [refine(index, precision) for index in range(len(numbers))]
    result = lower_envelope(points, refine=refine, max_precision=max_precision)
    vertices = tuple(numbers[i] for i in result.vertex_indices)

    ca_numbers, artefacts = [], []
    for vertex, eps in zip(vertices, _vertex_epsilons(result.slopes, precision)):
        try:
            is_ca = eps is not None and n_for_epsilon(eps, precision, max_precision).value == vertex
        except (DomainError, PrecisionError) as exc:
            logger.debug(f"Vertex {vertex} not classified as CA: {exc}")
            is_ca = False
        (ca_numbers if is_ca else artefacts).append(vertex)
    logger.info(f"CA envelope up to {hi}: {len(ca_numbers)} CA numbers, {len(artefacts)} artefacts")
    return CaEnvelopeReport(vertices, result.slopes, tuple(ca_numbers), tuple(artefacts))

