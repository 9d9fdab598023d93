from fractions import Fraction
import math

import pytest

from abundanza.realball import RealBall

CA_NUMBERS = (
    2,
    6,
    12,
    60,
    120,
    360,
    2520,
    5040,
    55440,
    720720,
    1441440,
    4324320,
    21621600,
    367567200,
)


def sigma_trial_division(n):
    total = 0
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            total += d
            if d * d != n:
                total += n // d
    return total


def sigma_additive_sieve(limit):
    """σ(1..limit) by adding every d to its multiples."""
    totals = [0] * (limit + 1)
    for d in range(1, limit + 1):
        for m in range(d, limit + 1, d):
            totals[m] += d
    return totals[1:]


def sa_bruteforce(limit):
    records = []
    best = Fraction(0)
    for n in range(1, limit + 1):
        ratio = Fraction(sigma_trial_division(n), n)
        if ratio > best:
            records.append(n)
            best = ratio
    return records


def ca_maximizer_bruteforce(eps, limit):
    """argmax of σ(k)/k^(1+eps) over 1 <= k <= limit for a float eps."""
    return max(range(1, limit + 1), key=lambda k: math.log(sigma_trial_division(k)) - (1 + eps) * math.log(k))


def robin_violations_bruteforce(lo, hi):
    """n in [lo, hi] with σ(n) >= e^γ n log log n, decided in mpmath at 200 bits."""
    import mpmath

    with mpmath.workprec(200):
        exp_gamma = mpmath.exp(mpmath.euler)
        return [
            n
            for n in range(lo, hi + 1)
            if sigma_trial_division(n) >= exp_gamma * n * mpmath.log(mpmath.log(n))
        ]


@pytest.fixture()
def ca_numbers():
    return CA_NUMBERS


@pytest.fixture()
def parabola_points():
    from abundanza.envelope import EnvelopePoint

    return [EnvelopePoint(x, RealBall.exact(x * x)) for x in range(-5, 6)]


@pytest.fixture()
def points_csv(tmp_path):
    def write(text):
        path = tmp_path / "points.csv"
        path.write_text(text)
        return path

    return write
