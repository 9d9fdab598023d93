"""
Exact integer machinery: primality, prime and σ sieves, factorizations and
exact abundancy ratios.
"""

import bisect
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
import sympy
from sympy.ntheory.primetest import mr

from .exceptions import DomainError, ResourceBudgetError
from .realball import RealBall
from .settings import PRECISION, SIEVE_BUDGET, SIEVE_HARD_LIMIT

logger = logging.getLogger(__name__)

# The first 13 primes are a deterministic Miller-Rabin witness set below this bound
MILLER_RABIN_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
MILLER_RABIN_LIMIT = 3317044064679887385961981


def is_prime(n):
    if n >= MILLER_RABIN_LIMIT:
        raise DomainError(f"{n} is beyond the deterministic Miller-Rabin range")
    return mr(n, MILLER_RABIN_BASES)


def _check_budget(limit, budget, what):
    allowed = min(budget, SIEVE_HARD_LIMIT)
    if limit > allowed:
        raise ResourceBudgetError(limit, allowed, what=what)


def primes_up_to(limit, budget=SIEVE_BUDGET):
    """All primes <= limit, increasing, as an int64 array."""
    if limit < 2:
        raise DomainError(f"primes_up_to needs limit >= 2, got {limit}")
    _check_budget(limit, budget, "prime sieve entries")
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    mask[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if mask[p]:
            mask[p * p :: 2 * p] = False
    return np.flatnonzero(mask).astype(np.int64)


@dataclass(frozen=True)
class Factorization:
    """
    A positive integer as increasing ``(prime, exponent)`` pairs; ``()`` is 1.

    The expanded integer is only built on demand (``value``), since colossally
    abundant numbers quickly run to thousands of digits.
    """

    factors: tuple = ()

    def __post_init__(self):
        factors = tuple((int(p), int(e)) for p, e in self.factors)
        object.__setattr__(self, "factors", factors)
        previous = 1
        for p, e in factors:
            if p <= previous:
                raise DomainError(f"primes must be strictly increasing: {factors}")
            if e < 1:
                raise DomainError(f"exponent of {p} must be positive, got {e}")
            if not is_prime(p):
                raise DomainError(f"{p} is not prime")
            previous = p

    @classmethod
    def from_trusted(cls, factors):
        """Build without re-checking primality; ``factors`` must already be valid."""
        instance = object.__new__(cls)
        object.__setattr__(instance, "factors", tuple(factors))
        return instance

    @classmethod
    def from_int(cls, n):
        if n < 1:
            raise DomainError(f"only positive integers factor, got {n}")
        return cls.from_trusted(sorted(sympy.factorint(n).items()))

    @cached_property
    def value(self):
        return math.prod(p**e for p, e in self.factors)

    @property
    def primes(self):
        return tuple(p for p, _ in self.factors)

    @property
    def exponents(self):
        return tuple(e for _, e in self.factors)

    @property
    def largest_prime(self):
        return self.factors[-1][0] if self.factors else 1

    def exponent_of(self, p):
        index = bisect.bisect_left(self.primes, p)
        if index < len(self.factors) and self.factors[index][0] == p:
            return self.factors[index][1]
        return 0

    def multiply_prime(self, p, times=1):
        """Factorization of ``self.value * p**times`` for a prime ``p``."""
        factors = list(self.factors)
        index = bisect.bisect_left([q for q, _ in factors], p)
        if index < len(factors) and factors[index][0] == p:
            factors[index] = (p, factors[index][1] + times)
        else:
            factors.insert(index, (p, times))
        return Factorization.from_trusted(factors)

    def __mul__(self, other):
        if not isinstance(other, Factorization):
            return NotImplemented
        merged = dict(self.factors)
        for p, e in other.factors:
            merged[p] = merged.get(p, 0) + e
        return Factorization.from_trusted(sorted(merged.items()))

    def quotient(self, divisor):
        """Factorization of ``self.value / divisor.value``; the division must be exact."""
        remaining = dict(self.factors)
        for p, e in divisor.factors:
            left = remaining.get(p, 0) - e
            if left < 0:
                raise DomainError(f"{divisor} does not divide {self}")
            if left:
                remaining[p] = left
            else:
                remaining.pop(p)
        return Factorization.from_trusted(sorted(remaining.items()))

    def as_pairs(self):
        return [[p, e] for p, e in self.factors]

    def __str__(self):
        if not self.factors:
            return "1"
        return "*".join(f"{p}^{e}" if e > 1 else str(p) for p, e in self.factors)


def sigma_of_factorization(f):
    return math.prod((p ** (e + 1) - 1) // (p - 1) for p, e in f.factors)


class Abundancy(Fraction):
    """Exact reduced ratio σ(n)/n."""


def abundancy(f):
    return Abundancy(sigma_of_factorization(f), f.value)


@lru_cache(maxsize=65536)
def log_prime(p, precision=PRECISION):
    return RealBall.exact(p, precision).log()


def value_and_log(f, precision=PRECISION, with_value=True):
    """
    Exact value of ``f`` (None when ``with_value`` is false) and a ball
    containing log n, summed as Σ e·log p.
    """
    if precision < 53:
        raise DomainError(f"precision must be at least 53 bits, got {precision}")
    total = RealBall.exact(0, precision)
    for p, e in f.factors:
        total = total + log_prime(p, precision) * e
    return (f.value if with_value else None), total


# Dense σ tables


@dataclass(frozen=True)
class SigmaTable:
    """σ(n) for 1 <= n <= limit; ``sigma[0]`` is an unused 0 slot."""

    limit: int
    sigma: np.ndarray

    def __getitem__(self, n):
        if not 1 <= n <= self.limit:
            raise IndexError(f"{n} outside 1..{self.limit}")
        return int(self.sigma[n])

    def __len__(self):
        return self.limit

    def values(self):
        return self.sigma[1:]


def sigma_segment(lo, hi, budget=SIEVE_BUDGET):
    """
    σ(n) for lo <= n <= hi as a uint64 array indexed by ``n - lo``.

    Every divisor pair (d, n/d) with d <= √n is visited once through the
    multiples of d that are >= d², so only √hi strided passes are needed.
    """
    if lo < 1 or hi < lo:
        raise DomainError(f"invalid segment [{lo}, {hi}]")
    _check_budget(hi - lo + 1, budget, "sigma segment entries")
    if hi > SIEVE_HARD_LIMIT:
        raise ResourceBudgetError(hi, SIEVE_HARD_LIMIT, what="sigma argument")
    sigma = np.zeros(hi - lo + 1, dtype=np.uint64)
    for d in range(1, math.isqrt(hi) + 1):
        square = d * d
        start = max(square, -(-lo // d) * d)
        if start > hi:
            continue
        step = np.uint64(d)
        multiples = np.arange(start, hi + 1, d, dtype=np.uint64)
        sigma[start - lo :: d] += multiples // step + step
        if square >= lo:
            sigma[square - lo] -= step
    return sigma


def sigma_sieve(limit, budget=SIEVE_BUDGET):
    if limit < 1:
        raise DomainError(f"sigma_sieve needs limit >= 1, got {limit}")
    _check_budget(limit, budget, "sigma sieve entries")
    sigma = np.empty(limit + 1, dtype=np.uint64)
    sigma[0] = 0
    sigma[1:] = sigma_segment(1, limit, budget)
    logger.debug(f"Sieved sigma up to {limit}")
    return SigmaTable(limit, sigma)
