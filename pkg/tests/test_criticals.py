import math
from fractions import Fraction

import pytest

from abundanza.arithmetic import Factorization, is_prime, value_and_log
from abundanza.criticals import (
    abundancy_increases,
    ca_diagnostics,
    ca_enumerate,
    critical_epsilon,
    epsilon_stream,
    exponent_for_epsilon,
    geometric_sum,
    interval_midpoint,
    iter_epsilon_groups,
    n_for_epsilon,
    prime_bound,
    sa_enumerate,
)
from abundanza.exceptions import DomainError, ResourceBudgetError
from abundanza.realball import RealBall

from .conftest import CA_NUMBERS, ca_maximizer_bruteforce, sa_bruteforce

FIRST_PAIRS = [(2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (3, 2), (7, 1), (2, 4), (11, 1), (13, 1), (2, 5), (3, 3), (5, 2), (17, 1)]


def test_geometric_sum():
    assert geometric_sum(2, 3) == 14
    assert geometric_sum(5, 1) == 5


def test_critical_epsilon_value():
    eps = critical_epsilon(2, 1)
    expected = RealBall.exact(Fraction(3, 2)).log() / RealBall.exact(2).log()
    assert eps.value.overlaps(expected)
    assert eps.value.agrees_with("0.5849625007")
    assert eps.pair == (2, 1)


def test_critical_epsilon_stays_sharp_for_large_k():
    eps = critical_epsilon(2, 60)
    assert eps.value.sign().certified
    assert eps.value.radius < eps.value.midpoint / 2**100


@pytest.mark.parametrize("p, k", [(4, 1), (1, 1), (2, 0)])
def test_critical_epsilon_domain(p, k):
    with pytest.raises(DomainError):
        critical_epsilon(p, k)


def test_prime_bound():
    bound = prime_bound(0.01)
    assert bound * math.log(bound) >= 100
    assert (bound - 1) * math.log(bound - 1) < 100
    with pytest.raises(DomainError):
        prime_bound(0)


def test_epsilon_stream_order():
    stream = epsilon_stream(14)
    assert [eps.pair for eps in stream] == FIRST_PAIRS
    for larger, smaller in zip(stream, stream[1:]):
        assert larger.value.lower > smaller.value.upper


def test_close_pair_is_separated():
    # F(2,5) and F(3,3) differ only in the fourth significant digit
    groups = iter_epsilon_groups()
    pairs = [next(groups) for _ in range(12)]
    assert all(len(group) == 1 for group in pairs)
    assert [group[0].pair for group in pairs[10:12]] == [(2, 5), (3, 3)]


def test_ca_enumerate_first_fourteen():
    records = ca_enumerate(14)
    assert tuple(record.value for record in records) == CA_NUMBERS
    assert [record.index for record in records] == list(range(1, 15))
    for record in records:
        assert not record.tie
        quotient = record.quotient_from_previous
        assert len(quotient.factors) == 1 and quotient.exponents == (1,)
        assert is_prime(quotient.value)


def test_epsilon_interval_brackets_record():
    record = ca_enumerate(8)[-1]
    lower, upper = record.epsilon_interval
    assert lower.pair == (11, 1)
    assert upper.pair == (2, 4)


def test_n_for_epsilon_reproduces_records():
    for record in ca_enumerate(14):
        assert n_for_epsilon(interval_midpoint(record)) == record.n


def test_n_for_epsilon_matches_brute_force_maximizer():
    for record in ca_enumerate(8):
        eps = float(interval_midpoint(record))
        assert ca_maximizer_bruteforce(eps, 6000) == record.value


def test_n_for_epsilon_edges():
    assert n_for_epsilon(Fraction(9, 10)).value == 1
    for eps in (0, 1, Fraction(-1, 2)):
        with pytest.raises(DomainError):
            n_for_epsilon(eps)


def test_exponent_for_epsilon():
    record = ca_enumerate(14)[-1]
    eps = interval_midpoint(record)
    assert exponent_for_epsilon(2, eps) == 5
    assert exponent_for_epsilon(17, eps) == 1
    assert exponent_for_epsilon(19, eps) == 0


def test_sa_enumerate_small():
    assert sa_enumerate(60) == [1, 2, 4, 6, 12, 24, 36, 48, 60]


def test_sa_enumerate_matches_brute_force_across_chunks():
    assert sa_enumerate(5000, chunk_size=777) == sa_bruteforce(5000)


def test_sa_enumerate_budget():
    with pytest.raises(ResourceBudgetError):
        sa_enumerate(10**6, budget=10**5)
    with pytest.raises(DomainError):
        sa_enumerate(0)


def test_ca_diagnostics():
    records = ca_enumerate(14)
    diagnostics = ca_diagnostics(records)
    assert [d.index for d in diagnostics] == list(range(2, 15))
    assert diagnostics[-1].largest_prime == 17
    for diagnostic in diagnostics:
        assert 0 < diagnostic.log_ratio.lower and diagnostic.log_ratio.upper < 1


def test_abundancy_increases_along_ca_numbers():
    assert abundancy_increases(ca_enumerate(30))


def test_count_must_be_positive():
    with pytest.raises(DomainError):
        ca_enumerate(0)
    with pytest.raises(DomainError):
        epsilon_stream(0)


@pytest.mark.slow
def test_cross_route_for_two_hundred_records():
    records = ca_enumerate(200)
    for record in records:
        assert n_for_epsilon(interval_midpoint(record)) == record.n
        assert is_prime(record.quotient_from_previous.value)
        assert len(record.quotient_from_previous.factors) == 1


@pytest.mark.slow
def test_sa_up_to_four_million_contains_2162160():
    numbers = sa_enumerate(4 * 10**6)
    assert 2162160 in numbers
    assert set(CA_NUMBERS[:12]) <= set(numbers)
    assert Factorization.from_int(2162160).as_pairs() == [[2, 4], [3, 3], [5, 1], [7, 1], [11, 1], [13, 1]]


def test_ca_diagnostics_carry_log_n_forward():
    records = ca_enumerate(40)
    carried = ca_diagnostics(records)
    restarted = ca_diagnostics(records[::2])
    for diagnostic in carried:
        _, log_n = value_and_log(records[diagnostic.index - 1].n, with_value=False)
        assert diagnostic.log_n.overlaps(log_n)
    by_index = {d.index: d for d in carried}
    for diagnostic in restarted:
        assert diagnostic.log_ratio.overlaps(by_index[diagnostic.index].log_ratio)


def test_e2_and_e3_follow_the_brute_force_order():
    brute = sorted(
        ((critical_epsilon(p, j).value, (p, j)) for p in (2, 3) for j in range(1, 65)),
        key=lambda item: item[0].midpoint,
        reverse=True,
    )
    stream = epsilon_stream(400)
    small = [eps.pair for eps in stream if eps.p in (2, 3)]
    assert small == [pair for _, pair in brute[: len(small)]]
    assert brute[len(small)][0].upper < stream[-1].value.lower


@pytest.mark.slow
def test_log_ratio_approaches_one_beyond_log_n_1e4():
    diagnostics = ca_diagnostics(ca_enumerate(1400))
    far = [d for d in diagnostics if d.log_n.lower > 10**4]
    assert far
    assert all(d.log_ratio.lower > 0.99 for d in far)
