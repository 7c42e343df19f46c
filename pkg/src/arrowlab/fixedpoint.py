"""Exact fixed-point scalars on a power-of-two grid.

Values are integers scaled by 2**SCALE_BITS. Addition, subtraction and
negation are exact; multiplication rounds toward zero, which commutes with
negation, so neg(a) * b == neg(a * b) bitwise. Every operation checks the
64-bit raw range and raises instead of wrapping.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FixedPointOverflowError

SCALE_BITS = 20
SCALE = 1 << SCALE_BITS

RAW_MIN = -(1 << 63)
RAW_MAX = (1 << 63) - 1


def check_raw(raw: int) -> int:
    if raw < RAW_MIN or raw > RAW_MAX:
        raise FixedPointOverflowError(f"raw value {raw} outside 64-bit range")
    return raw


def rtz_shift(value: int, bits: int) -> int:
    """Shift right rounding toward zero (>> alone floors, biasing negatives)."""
    if value >= 0:
        return value >> bits
    return -((-value) >> bits)


def rtz_shift_array(values: np.ndarray, bits: int) -> np.ndarray:
    neg = values < 0
    out = np.abs(values) >> bits
    return np.where(neg, -out, out)


def mul_raw(a_raw: int, b_raw: int) -> int:
    """Raw fixed-point product, rounded toward zero, overflow-checked."""
    return check_raw(rtz_shift(a_raw * b_raw, SCALE_BITS))


@dataclass(frozen=True)
class FixedPoint:
    """A scalar on the 2**-SCALE_BITS grid, stored as its integer raw value."""

    raw: int

    def __post_init__(self):
        check_raw(self.raw)

    @classmethod
    def from_int(cls, value: int) -> "FixedPoint":
        return cls(check_raw(value * SCALE))

    @classmethod
    def from_float(cls, value: float) -> "FixedPoint":
        return cls(check_raw(int(round(value * SCALE))))

    @classmethod
    def zero(cls) -> "FixedPoint":
        return cls(0)

    def __add__(self, other: "FixedPoint") -> "FixedPoint":
        return FixedPoint(check_raw(self.raw + other.raw))

    def __sub__(self, other: "FixedPoint") -> "FixedPoint":
        return FixedPoint(check_raw(self.raw - other.raw))

    def __neg__(self) -> "FixedPoint":
        return FixedPoint(check_raw(-self.raw))

    def __mul__(self, other: "FixedPoint") -> "FixedPoint":
        return FixedPoint(mul_raw(self.raw, other.raw))

    def __abs__(self) -> "FixedPoint":
        return FixedPoint(check_raw(abs(self.raw)))

    def __lt__(self, other: "FixedPoint") -> bool:
        return self.raw < other.raw

    def __le__(self, other: "FixedPoint") -> bool:
        return self.raw <= other.raw

    def __gt__(self, other: "FixedPoint") -> bool:
        return self.raw > other.raw

    def __ge__(self, other: "FixedPoint") -> bool:
        return self.raw >= other.raw

    def to_float(self) -> float:
        return self.raw / SCALE

    def __float__(self) -> float:
        return self.to_float()

    def to_decimal(self) -> str:
        """Exact decimal rendering; parses back bit-identically."""
        return raw_to_decimal(self.raw)

    @classmethod
    def from_decimal(cls, text: str) -> "FixedPoint":
        return cls(decimal_to_raw(text))

    def __repr__(self) -> str:
        return f"FixedPoint({self.to_decimal()})"


# 5**SCALE_BITS turns a /2**SCALE_BITS fraction into a /10**SCALE_BITS one,
# so every representable value has an exact decimal form of <= 20 digits.
_POW5 = 5**SCALE_BITS


def raw_to_decimal(raw: int) -> str:
    sign = "-" if raw < 0 else ""
    mag = abs(raw)
    whole, frac = divmod(mag, SCALE)
    if frac == 0:
        return f"{sign}{whole}"
    digits = str(frac * _POW5).rjust(SCALE_BITS, "0").rstrip("0")
    return f"{sign}{whole}.{digits}"


def decimal_to_raw(text: str) -> int:
    text = text.strip()
    if not text:
        raise DomainError("empty decimal string")
    sign = 1
    if text[0] in "+-":
        sign = -1 if text[0] == "-" else 1
        text = text[1:]
    whole_part, _, frac_part = text.partition(".")
    if not whole_part and not frac_part:
        raise DomainError(f"malformed decimal string {text!r}")
    whole = int(whole_part) if whole_part else 0
    raw = whole * SCALE
    if frac_part:
        num = int(frac_part) * SCALE
        den = 10 ** len(frac_part)
        if num % den != 0:
            raise DomainError(
                f"{text!r} is not representable on the 2**-{SCALE_BITS} grid"
            )
        raw += num // den
    return check_raw(sign * raw)
