"""
Critical epsilons and colossally abundant numbers.

For every prime p the values F(p, k) = log(1 + 1/(p + ... + p^k)) / log p,
k = 1, 2, ..., are the epsilons at which the maximizer of σ(n)/n^(1+ε) gains
one more factor p. Merged over all primes and sorted decreasingly they index
the colossally abundant numbers: n_i is the maximizer on (ε_{i+1}, ε_i).
"""

import heapq
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .arithmetic import (
    Factorization,
    abundancy,
    is_prime,
    log_prime,
    sigma_segment,
    value_and_log,
)
from .exceptions import DomainError, PrecisionError, ResourceBudgetError, TieDetected
from .realball import RealBall, SignDecision, with_precision_ladder
from .settings import CHUNK_SIZE, MAX_PRECISION, PRECISION, SIEVE_BUDGET, SIEVE_HARD_LIMIT

logger = logging.getLogger(__name__)

# Relative slack of the float pre-filter in the SA record scan
SA_FLOAT_SLACK = 1e-12


@dataclass(frozen=True)
class CriticalEpsilon:
    p: int
    k: int
    value: RealBall

    @property
    def pair(self):
        return (self.p, self.k)

    def __str__(self):
        return f"F({self.p},{self.k})={self.value.midpoint_str()}"


def geometric_sum(p, k):
    """p + p^2 + ... + p^k, exactly."""
    return (p ** (k + 1) - p) // (p - 1)


def critical_epsilon(p, k, precision=PRECISION):
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if p < 2 or not is_prime(p):
        raise DomainError(f"{p} is not prime")
    total = geometric_sum(p, k)
    # log(1 + 1/S) is about 1/S, so work with enough extra bits to keep
    # `precision` significant bits after the cancellation.
    bits = precision + total.bit_length() + 16
    numerator = RealBall.exact(Fraction(total + 1, total), bits).log()
    value = (numerator / log_prime(p, bits)).with_precision(precision)
    return CriticalEpsilon(p, k, value)


def prime_bound(eps):
    """
    Bound B with F(p, 1) <= eps for every prime p >= B.

    F(p, 1) < 1/(p log p), so F(p, 1) > eps forces p log p < 1/eps.
    """
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    target = 1 / eps
    bound = 3
    while bound * math.log(bound) < target:
        bound *= 2
    low, high = bound // 2, bound
    while low + 1 < high:
        middle = (low + high) // 2
        if middle * math.log(middle) < target:
            low = middle
        else:
            high = middle
    return high


def _next_rung(bits, max_precision):
    if bits >= max_precision:
        return None
    return min(2 * bits, max_precision)


class _EpsilonQueue:
    """
    Max-heap of per-prime candidates keyed by the upper end of their balls.

    The popped candidate is certified larger than everything left once its
    lower end clears the largest remaining upper end; the chains F(p, k) fall
    with k and the unopened primes all lie below the smallest opened one.
    """

    def __init__(self, precision):
        self.precision = precision
        self.heap = []
        self.expanded = set()
        self.newest_prime = 2
        self.push(critical_epsilon(2, 1, precision))

    def push(self, eps):
        heapq.heappush(self.heap, (-eps.value.upper, eps.p, eps.k, eps))

    def pop(self):
        eps = heapq.heappop(self.heap)[3]
        self.expand(eps)
        return eps

    def peek(self):
        return self.heap[0][3]

    def expand(self, eps):
        if eps.pair in self.expanded:
            return
        self.expanded.add(eps.pair)
        self.push(critical_epsilon(eps.p, eps.k + 1, self.precision))
        if eps.k == 1 and eps.p == self.newest_prime:
            self.newest_prime = sympy.nextprime(self.newest_prime)
            self.push(critical_epsilon(self.newest_prime, 1, self.precision))


def _separated(group, rival):
    floor = min((eps.value.lower for eps in group))
    return floor > rival.value.upper


def iter_epsilon_groups(precision=PRECISION, max_precision=MAX_PRECISION, allow_ties=False):
    """
    Yield the elements of E in strictly decreasing certified order, as tuples.

    A tuple holds more than one element only when ``allow_ties`` is set and
    the elements could not be separated at ``max_precision``.
    """
    queue = _EpsilonQueue(precision)
    while True:
        group = [queue.pop()]
        while True:
            rival = queue.peek()
            if _separated(group, rival):
                break
            bits = _next_rung(min(e.value.precision for e in group + [rival]), max_precision)
            if bits is not None:
                logger.debug(
                    f"Refining {[e.pair for e in group]} against {rival.pair} at {bits} bits"
                )
                heapq.heappop(queue.heap)
                queue.push(critical_epsilon(rival.p, rival.k, bits))
                for eps in group:
                    queue.push(critical_epsilon(eps.p, eps.k, bits))
                group = [queue.pop()]
                continue
            pairs = [e.pair for e in group] + [rival.pair]
            if not allow_ties:
                raise TieDetected(pairs, max_precision)
            logger.warning(f"Critical epsilons {pairs} tie at {max_precision} bits")
            group.append(queue.pop())
        group.sort(key=lambda e: e.value.midpoint, reverse=True)
        yield tuple(group)


def epsilon_stream(count, precision=PRECISION, max_precision=MAX_PRECISION):
    """The ``count`` largest elements of E, strictly decreasing."""
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    stream = []
    for group in iter_epsilon_groups(precision, max_precision):
        stream.extend(group)
        if len(stream) >= count:
            return stream[:count]


def _eps_ball(eps, bits):
    if isinstance(eps, RealBall):
        return eps
    return RealBall.exact(eps if not isinstance(eps, str) else Fraction(eps), bits)


def exponent_for_epsilon(p, eps, precision=PRECISION, max_precision=MAX_PRECISION):
    """
    a_ε(p) = floor((log(p^(1+ε) - 1) - log(p^ε - 1)) / log p) - 1, certified.
    """

    def evaluate(bits):
        e = _eps_ball(eps, bits)
        log_p = log_prime(p, bits)
        p_eps = (e * log_p).exp()
        ratio = ((p_eps * p - 1).log() - (p_eps - 1).log()) / log_p
        return ratio.floor() - 1

    return with_precision_ladder(evaluate, precision, max_precision, what=f"a_eps({p})")


def _check_unit_interval(eps, precision):
    e = _eps_ball(eps, precision)
    above_zero, below_one = e.sign(), (1 - e).sign()
    if above_zero is SignDecision.POSITIVE and below_one is SignDecision.POSITIVE:
        return e
    if above_zero.non_positive or below_one.non_positive:
        raise DomainError(f"eps must lie in (0, 1), got {e}")
    raise PrecisionError(f"eps {e} is not certified inside (0, 1)", ball=e, precision=precision)


def n_for_epsilon(eps, precision=PRECISION, max_precision=MAX_PRECISION):
    """
    The unique maximizer n_ε of σ(k)/k^(1+ε), as a Factorization.

    ``eps`` may be an exact number (re-evaluated along the precision ladder)
    or a RealBall (used as given).
    """
    e = _check_unit_interval(eps, precision)
    bound = prime_bound(float(e.lower))
    factors = []
    p = 2
    while p <= bound:
        exponent = exponent_for_epsilon(p, eps, precision, max_precision)
        if exponent <= 0:
            break
        factors.append((p, exponent))
        p = sympy.nextprime(p)
    return Factorization.from_trusted(factors)


@dataclass(frozen=True)
class CaRecord:
    index: int
    n: Factorization
    epsilon_interval: tuple
    quotient_from_previous: Factorization
    tie: bool = False

    @property
    def value(self):
        return self.n.value


def iter_ca_records(precision=PRECISION, max_precision=MAX_PRECISION, allow_ties=False):
    """
    Colossally abundant numbers n_1, n_2, ... built incrementally: crossing
    ε_i = F(p, a+1) multiplies n_{i-1} by p.
    """
    groups = iter_epsilon_groups(precision, max_precision, allow_ties)
    n = Factorization()
    current = next(groups)
    index = 0
    for following in groups:
        index += 1
        quotient = Factorization()
        for eps in current:
            if eps.k != n.exponent_of(eps.p) + 1:
                raise DomainError(f"{eps} does not extend {n}")
            n = n.multiply_prime(eps.p)
            quotient = quotient.multiply_prime(eps.p)
        yield CaRecord(
            index=index,
            n=n,
            epsilon_interval=(following[0], current[-1]),
            quotient_from_previous=quotient,
            tie=len(current) > 1,
        )
        current = following


def ca_enumerate(count, precision=PRECISION, max_precision=MAX_PRECISION, allow_ties=False):
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    records = []
    for record in iter_ca_records(precision, max_precision, allow_ties):
        records.append(record)
        if len(records) == count:
            break
    logger.info(f"Enumerated {count} CA numbers; n_{count} has {records[-1].value.bit_length()} bits")
    return records


def interval_midpoint(record):
    lower, upper = record.epsilon_interval
    return (lower.value + upper.value) / 2


def sa_enumerate(limit, budget=SIEVE_BUDGET, chunk_size=CHUNK_SIZE):
    """
    All superabundant n <= limit: strict records of σ(n)/n.

    A float pass keeps the n whose ratio reaches the running maximum up to a
    1e-12 slack; those candidates are then decided by exact cross-multiplication.
    """
    if limit < 1:
        raise DomainError(f"limit must be positive, got {limit}")
    allowed = min(budget, SIEVE_HARD_LIMIT)
    if limit > allowed:
        raise ResourceBudgetError(limit, allowed, what="SA scan entries")
    records = []
    best_sigma, best_n = 0, 1
    best_float = 0.0
    for lo in range(1, limit + 1, chunk_size):
        hi = min(lo + chunk_size - 1, limit)
        sigma = sigma_segment(lo, hi, budget)
        n = np.arange(lo, hi + 1, dtype=np.float64)
        ratio = sigma.astype(np.float64) / n
        running = np.maximum.accumulate(np.concatenate(([best_float], ratio)))[:-1]
        candidates = np.flatnonzero(ratio >= running * (1 - SA_FLOAT_SLACK))
        for offset in candidates:
            value = lo + int(offset)
            s = int(sigma[offset])
            if s * best_n > best_sigma * value:
                records.append(value)
                best_sigma, best_n = s, value
        best_float = max(best_float, float(ratio.max()))
        logger.debug(f"SA scan {lo}..{hi}: {len(candidates)} float candidates")
    return records


@dataclass(frozen=True)
class CaDiagnostic:
    index: int
    log_ratio: RealBall
    log_n: RealBall
    largest_prime: int


def ca_diagnostics(records, precision=PRECISION):
    """
    log n_{i-1} / log n_i and the largest prime factor P(n_i) for every record
    with i >= 2.

    log n is carried forward as log n_{i-1} + log(n_i / n_{i-1}) along runs of
    consecutive indices.
    """
    diagnostics = []
    last_index, last_log = None, None
    for record in records:
        if record.index < 2:
            continue
        _, log_quotient = value_and_log(record.quotient_from_previous, precision, with_value=False)
        if last_index is not None and record.index == last_index + 1:
            log_previous = last_log
        else:
            previous = record.n.quotient(record.quotient_from_previous)
            _, log_previous = value_and_log(previous, precision, with_value=False)
        log_n = log_previous + log_quotient
        diagnostics.append(
            CaDiagnostic(record.index, log_previous / log_n, log_n, record.n.largest_prime)
        )
        last_index, last_log = record.index, log_n
    return diagnostics


def abundancy_increases(records):
    """True if σ(n)/n strictly increases along ``records``."""
    ratios = [abundancy(record.n) for record in records]
    return all(a < b for a, b in zip(ratios, ratios[1:]))
