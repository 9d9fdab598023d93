"""Colossally abundant numbers, convex envelopes of divisor-sum deficits and certified Robin-type audits."""

__version__ = "0.1.0"
