"""
Midpoint-radius ball arithmetic.

A :class:`RealBall` is the closed set ``[midpoint - radius, midpoint + radius]``.
Operations run mpmath's outward-rounded interval kernels at the ball's own
working precision (no global context is touched), so the exact image of the
inputs always lies in the result and balls are safe to share between threads.
"""

import enum
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import mpmath
from mpmath import libmp
from mpmath.libmp import fzero, round_ceiling, round_floor, round_nearest

from .exceptions import DomainError, PrecisionError
from .settings import MAX_PRECISION, PRECISION, precision_ladder

logger = logging.getLogger(__name__)

# Radii are kept to this many bits, rounded up
RADIUS_BITS = 30
MIDPOINT_DIGITS = 15
RADIUS_DIGITS = 3


class SignDecision(enum.Enum):
    NEGATIVE = "negative"
    ZERO = "zero"
    POSITIVE = "positive"
    AMBIGUOUS = "ambiguous"

    @property
    def certified(self):
        return self is not SignDecision.AMBIGUOUS

    @property
    def non_negative(self):
        return self in (SignDecision.ZERO, SignDecision.POSITIVE)

    @property
    def non_positive(self):
        return self in (SignDecision.ZERO, SignDecision.NEGATIVE)

    def __str__(self):
        return self.value


def _to_raw(value, prec, rnd):
    """Round a Python/mpmath number to a raw mpf tuple in direction ``rnd``."""
    if hasattr(value, "_mpf_"):
        return libmp.mpf_pos(value._mpf_, prec, rnd)
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return libmp.from_int(value, prec, rnd)
    if isinstance(value, Fraction):
        return libmp.from_rational(value.numerator, value.denominator, prec, rnd)
    if isinstance(value, float):
        return libmp.from_float(value, prec, rnd)
    if isinstance(value, str):
        return libmp.from_str(value, prec, rnd)
    raise TypeError(f"cannot convert {type(value).__name__} to a ball endpoint")


def _raw_to_fraction(raw):
    return Fraction(*libmp.to_rational(raw))


def _is_finite(raw):
    return raw not in (libmp.finf, libmp.fninf, libmp.fnan)


@dataclass(frozen=True)
class RealBall:
    midpoint: mpmath.mpf
    radius: mpmath.mpf
    precision: int = PRECISION

    def __post_init__(self):
        if not mpmath.isfinite(self.midpoint) or not mpmath.isfinite(self.radius):
            raise PrecisionError("ball endpoints are not finite", ball=self, precision=self.precision)
        if self.radius < 0:
            raise DomainError(f"ball radius must be non-negative, got {self.radius}")

    # Construction

    @classmethod
    def from_interval(cls, lower, upper, precision=PRECISION):
        """Smallest representable ball around ``[lower, upper]`` (raw mpf tuples)."""
        if not (_is_finite(lower) and _is_finite(upper)):
            raise PrecisionError(
                "interval evaluation produced an unbounded result", precision=precision
            )
        mid = libmp.mpf_shift(libmp.mpf_add(lower, upper, precision, round_nearest), -1)
        rad = libmp.mpf_sub(upper, mid, RADIUS_BITS, round_ceiling)
        below = libmp.mpf_sub(mid, lower, RADIUS_BITS, round_ceiling)
        if libmp.mpf_lt(rad, below):
            rad = below
        if libmp.mpf_sign(rad) < 0:
            rad = fzero
        return cls(mpmath.mp.make_mpf(mid), mpmath.mp.make_mpf(rad), precision)

    @classmethod
    def exact(cls, value, precision=PRECISION):
        """Ball around an exact number; radius 0 when it fits in ``precision`` bits."""
        lower = _to_raw(value, precision, round_floor)
        upper = _to_raw(value, precision, round_ceiling)
        return cls.from_interval(lower, upper, precision)

    @classmethod
    def from_midpoint_radius(cls, midpoint, radius=0, precision=PRECISION):
        mid_lo = _to_raw(midpoint, precision, round_floor)
        mid_hi = _to_raw(midpoint, precision, round_ceiling)
        rad = _to_raw(radius, RADIUS_BITS, round_ceiling)
        if libmp.mpf_sign(rad) < 0:
            raise DomainError(f"ball radius must be non-negative, got {radius}")
        lower = libmp.mpf_sub(mid_lo, rad, precision, round_floor)
        upper = libmp.mpf_add(mid_hi, rad, precision, round_ceiling)
        return cls.from_interval(lower, upper, precision)

    def with_precision(self, precision):
        """The same enclosure re-expressed at another working precision."""
        return RealBall.from_interval(*self._mpi, precision)

    # Views

    @cached_property
    def _mpi(self):
        mid, rad = self.midpoint._mpf_, self.radius._mpf_
        return libmp.mpf_sub(mid, rad), libmp.mpf_add(mid, rad)

    @property
    def lower(self):
        return mpmath.mp.make_mpf(self._mpi[0])

    @property
    def upper(self):
        return mpmath.mp.make_mpf(self._mpi[1])

    def lower_fraction(self):
        return _raw_to_fraction(self._mpi[0])

    def upper_fraction(self):
        return _raw_to_fraction(self._mpi[1])

    def __float__(self):
        return libmp.to_float(self.midpoint._mpf_)

    def __repr__(self):
        return f"RealBall({self.midpoint_str()} +/- {self.radius_str()}, prec={self.precision})"

    __str__ = __repr__

    def midpoint_str(self, digits=MIDPOINT_DIGITS):
        return libmp.to_str(self.midpoint._mpf_, digits)

    def radius_str(self, digits=RADIUS_DIGITS):
        return libmp.to_str(self.radius._mpf_, digits)

    # Predicates

    def contains(self, value):
        """True if the exact number (or every point of the ball) lies inside."""
        if isinstance(value, RealBall):
            lo, hi = value._mpi
            return libmp.mpf_le(self._mpi[0], lo) and libmp.mpf_le(hi, self._mpi[1])
        if hasattr(value, "_mpf_"):
            value = _raw_to_fraction(value._mpf_)
        elif not isinstance(value, Fraction):
            value = Fraction(value)
        return self.lower_fraction() <= value <= self.upper_fraction()

    def overlaps(self, other):
        other = _coerce(other, self.precision)
        return libmp.mpf_le(self._mpi[0], other._mpi[1]) and libmp.mpf_le(
            other._mpi[0], self._mpi[1]
        )

    def agrees_with(self, digits):
        """
        True if the ball is consistent with a rounded decimal, e.g. ``"1.3932"``:
        it meets the half-unit interval around the printed value.
        """
        text = digits.strip()
        value = Fraction(text)
        decimals = len(text.split(".", 1)[1]) if "." in text else 0
        half_unit = Fraction(1, 2 * 10**decimals)
        return (
            self.lower_fraction() <= value + half_unit
            and value - half_unit <= self.upper_fraction()
        )

    def sign(self):
        lo, hi = self._mpi
        if libmp.mpf_sign(lo) > 0:
            return SignDecision.POSITIVE
        if libmp.mpf_sign(hi) < 0:
            return SignDecision.NEGATIVE
        if lo == fzero and hi == fzero:
            return SignDecision.ZERO
        return SignDecision.AMBIGUOUS

    def floor(self):
        lo, hi = self._mpi
        low = libmp.to_int(lo, round_floor)
        high = libmp.to_int(hi, round_floor)
        if low != high:
            raise PrecisionError(
                f"ball {self} straddles the integer {high}",
                ball=self,
                precision=self.precision,
            )
        return low

    # Arithmetic

    def _binary(self, other, kernel, reflected=False):
        other = _coerce(other, self.precision)
        if other is NotImplemented:
            return NotImplemented
        prec = max(self.precision, other.precision)
        left, right = (other, self) if reflected else (self, other)
        return RealBall.from_interval(*kernel(left._mpi, right._mpi, prec), prec)

    def __add__(self, other):
        return self._binary(other, libmp.mpi_add)

    def __radd__(self, other):
        return self._binary(other, libmp.mpi_add, reflected=True)

    def __sub__(self, other):
        return self._binary(other, libmp.mpi_sub)

    def __rsub__(self, other):
        return self._binary(other, libmp.mpi_sub, reflected=True)

    def __mul__(self, other):
        return self._binary(other, libmp.mpi_mul)

    def __rmul__(self, other):
        return self._binary(other, libmp.mpi_mul, reflected=True)

    def __truediv__(self, other):
        other = _coerce(other, self.precision)
        if other is NotImplemented:
            return NotImplemented
        _require_nonzero(other)
        return self._binary(other, libmp.mpi_div)

    def __rtruediv__(self, other):
        _require_nonzero(self)
        return self._binary(other, libmp.mpi_div, reflected=True)

    def __neg__(self):
        return RealBall.from_interval(*libmp.mpi_neg(self._mpi, self.precision), self.precision)

    def __abs__(self):
        return RealBall.from_interval(*libmp.mpi_abs(self._mpi, self.precision), self.precision)

    def log(self):
        _require_positive(self, "log")
        return RealBall.from_interval(*libmp.mpi_log(self._mpi, self.precision), self.precision)

    def exp(self):
        return RealBall.from_interval(*libmp.mpi_exp(self._mpi, self.precision), self.precision)

    def sqrt(self):
        lo, hi = self._mpi
        if libmp.mpf_sign(hi) < 0:
            raise DomainError(f"sqrt of negative ball {self}")
        if libmp.mpf_sign(lo) < 0:
            raise PrecisionError(f"sqrt domain undecided for {self}", ball=self, precision=self.precision)
        return RealBall.from_interval(*libmp.mpi_sqrt(self._mpi, self.precision), self.precision)

    def pow_real(self, exponent):
        """``self ** exponent`` for an exact (int/Fraction) or ball exponent."""
        if isinstance(exponent, int) and not isinstance(exponent, bool):
            return RealBall.from_interval(
                *libmp.mpi_pow_int(self._mpi, exponent, self.precision), self.precision
            )
        if isinstance(exponent, Fraction) and exponent.denominator == 1:
            return self.pow_real(exponent.numerator)
        _require_positive(self, "pow_real")
        exponent = _coerce(exponent, self.precision)
        return (exponent * self.log()).exp()

    def widen(self, extra):
        """Grow the radius by a non-negative exact amount."""
        extra_raw = _to_raw(extra, RADIUS_BITS, round_ceiling)
        if libmp.mpf_sign(extra_raw) < 0:
            raise DomainError(f"cannot widen by a negative amount {extra}")
        lo, hi = self._mpi
        return RealBall.from_interval(
            libmp.mpf_sub(lo, extra_raw, self.precision, round_floor),
            libmp.mpf_add(hi, extra_raw, self.precision, round_ceiling),
            self.precision,
        )


def _coerce(value, precision):
    if isinstance(value, RealBall):
        return value
    if isinstance(value, (int, Fraction, float)) or hasattr(value, "_mpf_"):
        return RealBall.exact(value, precision)
    return NotImplemented


def _require_positive(ball, what):
    decision = ball.sign()
    if decision is SignDecision.POSITIVE:
        return
    if decision.non_positive:
        raise DomainError(f"{what} needs a positive argument, got {ball}")
    raise PrecisionError(
        f"{what} domain undecided: {ball} touches 0", ball=ball, precision=ball.precision
    )


def _require_nonzero(ball):
    decision = ball.sign()
    if decision is SignDecision.ZERO:
        raise DomainError("division by zero")
    if decision is SignDecision.AMBIGUOUS:
        raise PrecisionError(
            f"divisor {ball} may be zero", ball=ball, precision=ball.precision
        )


def ball_max(first, second):
    """Ball containing max(x, y) for x in ``first`` and y in ``second``."""
    prec = max(first.precision, second.precision)
    (alo, ahi), (blo, bhi) = first._mpi, second._mpi
    lo = alo if libmp.mpf_ge(alo, blo) else blo
    hi = ahi if libmp.mpf_ge(ahi, bhi) else bhi
    return RealBall.from_interval(lo, hi, prec)


_OPERATIONS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "log": lambda a: a.log(),
    "exp": lambda a: a.exp(),
    "sqrt": lambda a: a.sqrt(),
    "pow_real": lambda a, s: a.pow_real(s),
}


def ball_arith(op, *args):
    try:
        operation = _OPERATIONS[op]
    except KeyError:
        raise DomainError(f"unknown ball operation {op!r}") from None
    return operation(*args)


def sign(ball):
    return ball.sign()


def certified_floor(ball):
    return ball.floor()


# Constants


def _constant_ball(mpf_constant, precision):
    # mpmath constants are rounded from fixed-point sums with 20+ guard bits;
    # 2^-(precision+4) of slack on each side covers their truncation error.
    wp = precision + 10
    slack = libmp.from_man_exp(1, -(precision + 4))
    lower = libmp.mpf_sub(mpf_constant(wp, round_floor), slack, wp, round_floor)
    upper = libmp.mpf_add(mpf_constant(wp, round_ceiling), slack, wp, round_ceiling)
    return RealBall.from_interval(lower, upper, precision)


@lru_cache(maxsize=None)
def const_euler_gamma(precision=PRECISION):
    """
    Ball containing Euler's constant γ.

    mpmath evaluates γ with the Brent-McMillan scheme γ ≈ U(m)/V(m) - log m,
    m = 2^q, whose truncation error is below π·exp(-4m). m is chosen with
    exp(-4m) < 2^-w at an internal precision w more than 50 bits above
    ``precision``. The fixed-point sums lose at most one unit in the last
    place per term over O(w) terms, which stays below 2^-(precision+8) for
    any precision under 2^20 bits. Widening both ends by 2^-(precision+4)
    therefore encloses γ with radius <= 2^(1-precision)·γ.
    """
    if precision < 53:
        raise DomainError(f"precision must be at least 53 bits, got {precision}")
    return _constant_ball(libmp.mpf_euler, precision)


@lru_cache(maxsize=None)
def exp_gamma(precision=PRECISION):
    return const_euler_gamma(precision).exp()


@lru_cache(maxsize=None)
def const_pi(precision=PRECISION):
    return _constant_ball(libmp.mpf_pi, precision)


# Precision ladder


def with_precision_ladder(compute, precision=PRECISION, max_precision=MAX_PRECISION, what=None):
    """
    Call ``compute(bits)`` for bits on the doubling ladder from ``precision`` to
    ``max_precision`` until it stops raising PrecisionError.
    """
    error = None
    for bits in precision_ladder(precision, max_precision):
        try:
            return compute(bits)
        except PrecisionError as exc:
            error = exc
            logger.debug(f"{what or 'evaluation'} ambiguous at {bits} bits, escalating: {exc}")
    error.precision = max_precision
    raise error


def certified_sign(evaluate, precision=PRECISION, max_precision=MAX_PRECISION, what=None):
    """
    Certified sign of the ball returned by ``evaluate(bits)``, escalating the
    precision while the sign is ambiguous.
    """

    def decide(bits):
        value = evaluate(bits)
        decision = value.sign()
        if not decision.certified:
            raise PrecisionError(
                f"sign of {what or 'value'} ambiguous: {value}", ball=value, precision=bits
            )
        return decision

    return with_precision_ladder(decide, precision, max_precision, what=what)
