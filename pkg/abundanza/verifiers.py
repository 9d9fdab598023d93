"""
Certified audits of Robin-type inequalities.

Every criterion has a vectorized float form, used to clear most n of a range
at once, and a ball form that decides the n whose float value is within
FLOAT_MARGIN (relative) of zero or negative. Only ball-certified verdicts are
ever reported.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from threading import Lock

import mpmath
import numpy as np

from . import scan
from .arithmetic import Factorization, sigma_of_factorization, sigma_segment
from .criticals import iter_ca_records
from .exceptions import DomainError, PrecisionError, ResourceBudgetError
from .ha import EXP_GAMMA, Weight, r_from_sigma, t_statistic
from .realball import RealBall, SignDecision, ball_max, const_euler_gamma, with_precision_ladder
from .settings import (
    CHUNK_SIZE,
    EXACT_HARMONIC_LIMIT,
    FLOAT_MARGIN,
    MAX_PRECISION,
    PRECISION,
    SIEVE_BUDGET,
    SIEVE_HARD_LIMIT,
    THREADS,
)

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329

# Robin's unconditional lower bound: R0(n) > -0.6482 n / log log n
ROBIN_LOWER_CONSTANT = Fraction(6482, 10000)
# Upper side of the Lagarias sandwich: L0(n) <= R0(n) + 7n / log n for n > 20
SANDWICH_CONSTANT = 7
SANDWICH_MIN_N = 21
# Lower end of the band the Ramanujan statistic approaches along CA numbers
RAMANUJAN_THRESHOLD = Fraction(1393, 1000)
# Robin's inequality holds for every n above this
LAST_ROBIN_VIOLATION = 5040


# Harmonic numbers

HARMONIC_CHECKPOINT_STEP = 512
_checkpoints = [Fraction(0)]
_checkpoints_lock = Lock()


def harmonic_block(a, b):
    """Σ 1/i for a <= i <= b as an exact fraction (0 when b < a)."""
    if a < 1:
        raise DomainError(f"harmonic blocks start at 1, got {a}")
    total = Fraction(0)
    for i in range(a, b + 1):
        total += Fraction(1, i)
    return total


def harmonic_exact(n):
    """h_n as an exact fraction, extended from cached checkpoints."""
    if n < 0:
        raise DomainError(f"harmonic numbers need n >= 0, got {n}")
    index = n // HARMONIC_CHECKPOINT_STEP
    with _checkpoints_lock:
        while len(_checkpoints) <= index:
            last = len(_checkpoints) - 1
            start = last * HARMONIC_CHECKPOINT_STEP + 1
            _checkpoints.append(_checkpoints[-1] + harmonic_block(start, start + HARMONIC_CHECKPOINT_STEP - 1))
        base = _checkpoints[index]
    return base + harmonic_block(index * HARMONIC_CHECKPOINT_STEP + 1, n)


def harmonic_asymptotic(n, precision=PRECISION):
    """
    h_n = log n + γ + 1/(2n) - Σ B_2k / (2k n^2k), truncated once a term drops
    below 2^-(precision+8) or stops shrinking (the series diverges for every
    fixed n). The remainder is bounded by the first omitted term.
    """
    if n < 2:
        raise DomainError(f"the asymptotic route needs n >= 2, got {n}")
    target = Fraction(1, 2 ** (precision + 8))
    correction = Fraction(1, 2 * n)
    previous = None
    k = 1
    while True:
        numerator, denominator = mpmath.bernfrac(2 * k)
        term = Fraction(numerator, denominator * 2 * k * n ** (2 * k))
        if abs(term) < target or k > precision:
            break
        if previous is not None and abs(term) >= previous:
            break
        previous = abs(term)
        correction -= term
        k += 1
    total = RealBall.exact(n, precision).log() + const_euler_gamma(precision) + correction
    return total.widen(abs(term))


def harmonic(n, precision=PRECISION):
    if n < 1:
        raise DomainError(f"harmonic numbers need n >= 1, got {n}")
    if n <= EXACT_HARMONIC_LIMIT:
        return RealBall.exact(harmonic_exact(n), precision)
    return harmonic_asymptotic(n, precision)


def harmonic_float(n):
    if n < 64:
        return math.fsum(1 / i for i in range(1, n + 1))
    return math.log(n) + EULER_GAMMA + 1 / (2 * n) - 1 / (12 * n**2) + 1 / (120 * n**4)


# Single-n quantities


def _log_n(n, precision):
    return RealBall.exact(n, precision).log()


def _sigma(n, sigma):
    return sigma if sigma is not None else sigma_of_factorization(Factorization.from_int(n))


def _require_n(n, minimum, what):
    if n < minimum:
        raise DomainError(f"{what} needs n >= {minimum}, got {n}")


def robin_deficit(n, precision=PRECISION, sigma=None):
    _require_n(n, 3, "R0(n)")
    return r_from_sigma(n, _sigma(n, sigma), _log_n(n, precision), Weight(), precision)


def gronwall(n, precision=PRECISION, sigma=None):
    """G(n) = σ(n) / (n log log n)."""
    _require_n(n, 3, "G(n)")
    return _sigma(n, sigma) / (_log_n(n, precision).log() * n)


def lagarias_value(n, precision=PRECISION, sigma=None, h=None):
    """L0(n) = h_n + exp(h_n) log(h_n) - σ(n)."""
    _require_n(n, 2, "L0(n)")
    if h is None:
        h = harmonic(n, precision)
    return h + h.exp() * h.log() - _sigma(n, sigma)


def l_weighted(n, w=Weight(), precision=PRECISION, sigma=None):
    """L_τ(n) = L0(n)·(log n)^s."""
    weight = w if isinstance(w, Weight) else Weight(Fraction(w))
    weight.check(n)
    return lagarias_value(n, precision, sigma) * weight.evaluate(_log_n(n, precision))


@dataclass(frozen=True)
class VerificationRecord:
    n: int
    sigma: int
    robin_deficit: RealBall
    gronwall: RealBall | None
    lagarias: RealBall | None = None
    verdicts: dict = field(default_factory=dict)

    @property
    def precision(self):
        return self.robin_deficit.precision


def verify_integer(n, precision=PRECISION, sigma=None, verdicts=None, with_lagarias=True):
    """Full record for one n >= 3; ``verdicts`` are stored as given."""
    sigma = _sigma(n, sigma)
    return VerificationRecord(
        n=n,
        sigma=sigma,
        robin_deficit=robin_deficit(n, precision, sigma),
        gronwall=gronwall(n, precision, sigma),
        lagarias=lagarias_value(n, precision, sigma) if with_lagarias else None,
        verdicts=dict(verdicts or {}),
    )


# Criteria


class FloatChunk:
    """Float views of one scan chunk, computed on demand."""

    def __init__(self, start, stop, sigma):
        self.start = start
        self.stop = stop
        self.n = np.arange(start, stop + 1, dtype=np.float64)
        self.sigma = sigma.astype(np.float64)

    @cached_property
    def log_n(self):
        return np.log(self.n)

    @cached_property
    def loglog(self):
        return np.log(self.log_n)

    @cached_property
    def robin(self):
        return EXP_GAMMA * self.n * self.loglog

    @cached_property
    def h(self):
        return harmonic_float(self.start - 1) + np.cumsum(1.0 / self.n)

    @cached_property
    def exp_h_log_h(self):
        return np.exp(self.h) * np.log(self.h)


class Criterion:
    """
    An inequality Q(n) > 0 (``strict``) or Q(n) >= 0 checked over a range.

    ``floats`` returns ``(value, scale)`` arrays per quantity; ``balls`` the
    matching certified balls at a given precision.
    """

    name = None
    quantities = ()
    min_n = 3
    strict = True
    report_only = False
    uses_harmonic = False

    def prepare(self, lo, hi, precision, max_precision):
        pass

    def floats(self, chunk):
        raise NotImplementedError

    def balls(self, n, sigma, bits):
        raise NotImplementedError

    def holds(self, decision):
        if self.strict:
            return decision is SignDecision.POSITIVE
        return decision.non_negative

    def expected_violation(self, n):
        return self.report_only

    def check_range(self, lo, hi):
        if lo < self.min_n:
            raise DomainError(f"{self.name} needs n >= {self.min_n}, got lo={lo}")
        if hi < lo:
            raise DomainError(f"empty range [{lo}, {hi}]")

    def certify(self, n, sigma=None, precision=PRECISION, max_precision=MAX_PRECISION):
        """Certified sign of every quantity at n, with the precision reached."""
        _require_n(n, self.min_n, self.name)
        sigma = _sigma(n, sigma)

        def decide(bits):
            decisions = {}
            for quantity, value in zip(self.quantities, self.balls(n, sigma, bits)):
                decision = value.sign()
                if not decision.certified:
                    raise PrecisionError(f"{quantity} at n={n} ambiguous: {value}", ball=value, precision=bits, n=n)
                decisions[quantity] = decision
            return decisions, bits

        try:
            return with_precision_ladder(decide, precision, max_precision, what=f"{self.name}({n})")
        except PrecisionError as exc:
            exc.n = n
            raise


class RobinCriterion(Criterion):
    name = "robin"
    quantities = ("robin",)

    def floats(self, chunk):
        return [(chunk.robin - chunk.sigma, np.abs(chunk.robin) + chunk.sigma)]

    def balls(self, n, sigma, bits):
        return [robin_deficit(n, bits, sigma)]

    def expected_violation(self, n):
        return n <= LAST_ROBIN_VIOLATION


class RobinLowerCriterion(Criterion):
    name = "robin-lower"
    quantities = ("robin_lower",)

    def floats(self, chunk):
        bound = float(ROBIN_LOWER_CONSTANT) * chunk.n / chunk.loglog
        return [(chunk.robin - chunk.sigma + bound, np.abs(chunk.robin) + chunk.sigma + bound)]

    def balls(self, n, sigma, bits):
        loglog = _log_n(n, bits).log()
        return [robin_deficit(n, bits, sigma) + ROBIN_LOWER_CONSTANT * n / loglog]


class LagariasCriterion(Criterion):
    name = "lagarias"
    quantities = ("lagarias",)
    min_n = 2
    uses_harmonic = True

    def floats(self, chunk):
        value = chunk.h + chunk.exp_h_log_h - chunk.sigma
        return [(value, chunk.h + np.abs(chunk.exp_h_log_h) + chunk.sigma)]

    def balls(self, n, sigma, bits):
        return [lagarias_value(n, bits, sigma)]


class SandwichCriterion(Criterion):
    name = "sandwich"
    quantities = ("sandwich_left", "sandwich_right")
    min_n = SANDWICH_MIN_N
    strict = False
    uses_harmonic = True

    def floats(self, chunk):
        upper = SANDWICH_CONSTANT * chunk.n / chunk.log_n
        left = chunk.exp_h_log_h - chunk.robin
        right = chunk.robin + upper - chunk.h - chunk.exp_h_log_h
        scale = np.abs(chunk.exp_h_log_h) + np.abs(chunk.robin)
        return [(left, scale), (right, scale + upper + chunk.h)]

    def balls(self, n, sigma, bits):
        h = harmonic(n, bits)
        r0 = robin_deficit(n, bits, sigma)
        l0 = lagarias_value(n, bits, sigma, h)
        upper = SANDWICH_CONSTANT * n / _log_n(n, bits)
        return [l0 - r0 - h, r0 + upper - l0]


class RamanujanCriterion(Criterion):
    name = "ramanujan"
    quantities = ("ramanujan",)
    report_only = True

    def floats(self, chunk):
        root = np.sqrt(chunk.log_n)
        ratio = chunk.sigma / chunk.n
        threshold = float(RAMANUJAN_THRESHOLD)
        value = (EXP_GAMMA * chunk.loglog - ratio) * root - threshold
        return [(value, (EXP_GAMMA * np.abs(chunk.loglog) + ratio) * root + threshold)]

    def balls(self, n, sigma, bits):
        return [t_statistic(n, bits) - RAMANUJAN_THRESHOLD]


class BracketCriterion(Criterion):
    """
    G(n) <= max(G(m), G(m')) for consecutive CA numbers m <= n <= m'.
    At a CA number the quantity is exactly zero.
    """

    name = "bracket"
    quantities = ("bracket",)
    min_n = 6
    strict = False

    def __init__(self):
        self.ca_values = None
        self.ca_sigmas = None

    def prepare(self, lo, hi, precision, max_precision):
        values, sigmas = [], []
        for record in iter_ca_records(precision, max_precision):
            values.append(record.value)
            sigmas.append(sigma_of_factorization(record.n))
            if record.value >= hi:
                break
        self.ca_values = values
        self.ca_sigmas = sigmas
        logger.debug(f"Bracket check over [{lo}, {hi}] uses {len(values)} CA numbers")

    def floats(self, chunk):
        values = np.array(self.ca_values, dtype=np.float64)
        ca_g = np.array(self.ca_sigmas, dtype=np.float64) / (values * np.log(np.log(values)))
        right = np.searchsorted(values, chunk.n)
        at_ca = values[right] == chunk.n
        left = np.maximum(right - 1, 0)
        bound = np.maximum(ca_g[left], ca_g[right])
        g = chunk.sigma / (chunk.n * chunk.loglog)
        value = np.where(at_ca, 1.0, bound - g)
        return [(value, np.where(at_ca, 0.0, bound + g))]

    def balls(self, n, sigma, bits):
        right = int(np.searchsorted(self.ca_values, n))
        if self.ca_values[right] == n:
            return [RealBall.exact(0, bits)]
        lower = _ca_gronwall(self.ca_values[right - 1], self.ca_sigmas[right - 1], bits)
        upper = _ca_gronwall(self.ca_values[right], self.ca_sigmas[right], bits)
        return [ball_max(lower, upper) - gronwall(n, bits, sigma)]


@lru_cache(maxsize=1024)
def _ca_gronwall(n, sigma, bits):
    return gronwall(n, bits, sigma)


CRITERIA = {
    criterion.name: criterion
    for criterion in (
        RobinCriterion,
        RobinLowerCriterion,
        LagariasCriterion,
        SandwichCriterion,
        RamanujanCriterion,
        BracketCriterion,
    )
}


def get_criterion(name):
    try:
        return CRITERIA[name]()
    except KeyError:
        raise DomainError(f"unknown criterion {name!r}; choose from {sorted(CRITERIA)}") from None


def robin_lower_bound_check(n, precision=PRECISION, max_precision=MAX_PRECISION):
    decisions, _ = RobinLowerCriterion().certify(n, None, precision, max_precision)
    return decisions["robin_lower"]


def lagarias_check(n, precision=PRECISION, max_precision=MAX_PRECISION):
    decisions, _ = LagariasCriterion().certify(n, None, precision, max_precision)
    return decisions["lagarias"]


def lagarias_sandwich(n, precision=PRECISION, max_precision=MAX_PRECISION):
    """Signs of L0 - R0 - h_n and R0 + 7n/log n - L0, for n > 20."""
    decisions, _ = SandwichCriterion().certify(n, None, precision, max_precision)
    return decisions["sandwich_left"], decisions["sandwich_right"]


def strong_ramanujan_check(n, precision=PRECISION, max_precision=MAX_PRECISION):
    decisions, _ = RamanujanCriterion().certify(n, None, precision, max_precision)
    return decisions["ramanujan"]


def gronwall_bracket_check(n, precision=PRECISION, max_precision=MAX_PRECISION):
    criterion = BracketCriterion()
    criterion.prepare(n, n, precision, max_precision)
    decisions, _ = criterion.certify(n, None, precision, max_precision)
    return decisions["bracket"]


# Range scans


@dataclass
class ScanResult:
    criterion: str
    lo: int
    hi: int
    start: int | None
    violations: list = field(default_factory=list)
    unexpected: list = field(default_factory=list)
    records: list = field(default_factory=list)
    certified_by_ball: int = 0

    @property
    def resumed(self):
        return self.start is not None and self.start != self.lo


def _float_phase(criterion):
    def run(start, stop):
        sigma = sigma_segment(start, stop, SIEVE_HARD_LIMIT)
        chunk = FloatChunk(start, stop, sigma)
        undecided = np.zeros(len(sigma), dtype=bool)
        for value, scale in criterion.floats(chunk):
            borderline = np.abs(value) <= FLOAT_MARGIN * scale
            failing = value <= 0 if criterion.strict else value < 0
            undecided |= borderline | failing
        offsets = np.flatnonzero(undecided)
        return [(start + int(offset), int(sigma[offset])) for offset in offsets]

    return run


def run_scan(
    criterion,
    lo,
    hi,
    precision=PRECISION,
    max_precision=MAX_PRECISION,
    budget=SIEVE_BUDGET,
    chunk_size=CHUNK_SIZE,
    threads=THREADS,
    frontier=None,
    writer=None,
    all_records=False,
):
    """
    Certify ``criterion`` on [lo, hi].

    Points cleared by the float test are never written unless ``all_records``
    is set; every ball-certified n becomes a VerificationRecord. The frontier
    file, when given, advances after each merged chunk.
    """
    if isinstance(criterion, str):
        criterion = get_criterion(criterion)
    criterion.check_range(lo, hi)
    allowed = min(budget, SIEVE_HARD_LIMIT)
    if hi > allowed:
        raise ResourceBudgetError(hi, allowed, what=f"{criterion.name} scan")
    start = scan.resume_from(lo, hi, frontier)
    result = ScanResult(criterion.name, lo, hi, start)
    if start is None:
        logger.warning(f"{criterion.name}: frontier already covers [{lo}, {hi}]")
        return result
    criterion.prepare(start, hi, precision, max_precision)
    timer = scan.ChunkTimer(criterion.name)
    for chunk_start, chunk_stop, undecided in scan.map_chunks(
        _float_phase(criterion), start, hi, chunk_size, threads
    ):
        flagged = dict(undecided)
        if all_records:
            sigma = sigma_segment(chunk_start, chunk_stop, SIEVE_HARD_LIMIT)
            candidates = [(n, int(sigma[n - chunk_start])) for n in range(chunk_start, chunk_stop + 1)]
        else:
            candidates = undecided
        rows = []
        for n, sigma_n in candidates:
            decisions, bits = criterion.certify(n, sigma_n, precision, max_precision)
            if n in flagged:
                result.certified_by_ball += 1
            record = _record(criterion, n, sigma_n, bits, decisions)
            rows.append(record)
            if not all(criterion.holds(decision) for decision in decisions.values()):
                result.violations.append(n)
                if not criterion.expected_violation(n):
                    result.unexpected.append(n)
        result.records.extend(rows)
        if writer is not None:
            writer.write(rows)
        if frontier is not None:
            scan.write_frontier(frontier, chunk_stop)
        timer.chunk_done(chunk_start, chunk_stop, len(undecided))
    logger.info(
        f"{criterion.name} on [{start}, {hi}]: {len(result.violations)} violations "
        f"({len(result.unexpected)} unexpected) in {timer.elapsed:.2f}s"
    )
    return result


def _record(criterion, n, sigma, bits, decisions):
    if n < 3:
        return VerificationRecord(
            n=n,
            sigma=sigma,
            robin_deficit=r_from_sigma(n, sigma, _log_n(n, bits), Weight(), bits),
            gronwall=None,
            lagarias=lagarias_value(n, bits, sigma),
            verdicts=decisions,
        )
    return verify_integer(n, bits, sigma, decisions, with_lagarias=criterion.uses_harmonic)


def robin_scan(lo, hi, **options):
    """Certified violations of σ(n) < e^γ n log log n on [lo, hi] and their records."""
    result = run_scan(RobinCriterion(), lo, hi, **options)
    return result.violations, result.records
