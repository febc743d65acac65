"""Finite-precision arithmetic in the p-adic integers and their fraction field.

The model is deliberately flat: a ring element is one residue modulo p^N.
A valuation of at least N cannot be distinguished from infinity, so it is
reported as the sentinel ``AT_LEAST_PRECISION`` and consumers must treat it
as "at least N", never as an exact value.  Uniform residues modulo p^N are
exactly the pushforward of the Haar probability measure on the ring of
integers, which is what makes the samplers in this module suitable for
exact-in-distribution Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class _AtLeastPrecision:
    """Sentinel for valuations that are >= the working precision."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "AT_LEAST_PRECISION"

    def __reduce__(self):
        return (_AtLeastPrecision, ())


AT_LEAST_PRECISION = _AtLeastPrecision()

#: A valuation at working precision: an exact integer or the sentinel.
Val = int | _AtLeastPrecision


def is_exact_val(v: Val) -> bool:
    return not isinstance(v, _AtLeastPrecision)


def val_sort_key(v: Val) -> int:
    """Sorting key placing AT_LEAST_PRECISION after every finite valuation."""
    return 2**62 if isinstance(v, _AtLeastPrecision) else v


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for every 64-bit integer."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PadicConfig:
    """Ambient arithmetic parameters: the prime, the working precision and
    the residue-cardinality parameter q used by closed forms.

    q defaults to p.  Sampling is always over Q_p (so norms of concrete
    elements use p); q only feeds exact-rational formula evaluation.
    """

    p: int
    precision: int
    q: Fraction = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")
        if self.precision < 3:
            raise ValueError("precision must be at least 3 (mod-8 square test at p=2)")
        q = Fraction(self.p) if self.q is None else Fraction(self.q)
        if q <= 1:
            raise ValueError("q must exceed 1")
        object.__setattr__(self, "q", q)

    @property
    def modulus(self) -> int:
        return self.p**self.precision

    @property
    def epsilon(self) -> Fraction:
        """|p| = 1/p, the norm of the uniformizer of the sampled field."""
        return Fraction(1, self.p)

    def residue_valuation(self, residue: int) -> Val:
        """Largest v with p^v dividing the residue, capped at precision."""
        residue %= self.modulus
        if residue == 0:
            return AT_LEAST_PRECISION
        v = 0
        p = self.p
        while residue % p == 0:
            residue //= p
            v += 1
        return v


@dataclass(frozen=True)
class RingElement:
    """An element of the valuation ring known modulo p^N."""

    config: PadicConfig
    residue: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "residue", self.residue % self.config.modulus)

    def valuation(self) -> Val:
        return self.config.residue_valuation(self.residue)

    def norm(self) -> Fraction:
        """|x| = p^-val(x); zero-at-precision gets norm 0 (a lower bound of ambiguity)."""
        v = self.valuation()
        if not is_exact_val(v):
            return Fraction(0)
        return Fraction(1, self.config.p**v)

    def is_zero_at_precision(self) -> bool:
        return self.residue == 0

    def is_unit(self) -> bool:
        return self.residue % self.config.p != 0

    def _check(self, other: RingElement) -> None:
        if other.config != self.config:
            raise ValueError("config mismatch")

    def __add__(self, other: RingElement) -> RingElement:
        self._check(other)
        return RingElement(self.config, self.residue + other.residue)

    def __sub__(self, other: RingElement) -> RingElement:
        self._check(other)
        return RingElement(self.config, self.residue - other.residue)

    def __mul__(self, other: RingElement) -> RingElement:
        self._check(other)
        return RingElement(self.config, self.residue * other.residue)

    def __neg__(self) -> RingElement:
        return RingElement(self.config, -self.residue)

    def inverse(self) -> RingElement:
        if not self.is_unit():
            raise ZeroDivisionError("not a unit at precision")
        return RingElement(self.config, pow(self.residue, -1, self.config.modulus))

    def to_field(self) -> FieldElement:
        """Split off the power of p.  The unit part of a nonzero element keeps
        only the N - val(x) digits that are certain; exact constructors on
        FieldElement should be preferred when full precision matters."""
        v = self.valuation()
        if not is_exact_val(v):
            return FieldElement.zero(self.config)
        return FieldElement(self.config, v, (self.residue // self.config.p**v) % self.config.modulus)


@dataclass(frozen=True)
class FieldElement:
    """A field element p^shift * unit with the unit known modulo p^N.

    The zero element is encoded with unit_residue == 0.
    """

    config: PadicConfig
    shift: int
    unit_residue: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "unit_residue", self.unit_residue % self.config.modulus)
        if self.unit_residue != 0 and self.unit_residue % self.config.p == 0:
            raise ValueError("unit part must be a unit (or zero for the zero element)")

    @classmethod
    def zero(cls, config: PadicConfig) -> FieldElement:
        return cls(config, 0, 0)

    @classmethod
    def from_rational(cls, config: PadicConfig, value: Fraction | int) -> FieldElement:
        """Exact embedding of a rational number; the unit digit string is the
        full N-digit expansion, nothing is lost."""
        value = Fraction(value)
        if value == 0:
            return cls.zero(config)
        p, m = config.p, config.modulus
        num, den = value.numerator, value.denominator
        shift = 0
        while num % p == 0:
            num //= p
            shift += 1
        while den % p == 0:
            den //= p
            shift -= 1
        unit = num * pow(den, -1, m) % m
        return cls(config, shift, unit)

    def is_zero(self) -> bool:
        return self.unit_residue == 0

    def valuation(self) -> Val:
        if self.is_zero():
            return AT_LEAST_PRECISION
        return self.shift

    def norm(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        return Fraction(1, self.config.p) ** self.shift

    def __mul__(self, other: FieldElement) -> FieldElement:
        if other.config != self.config:
            raise ValueError("config mismatch")
        if self.is_zero() or other.is_zero():
            return FieldElement.zero(self.config)
        return FieldElement(self.config, self.shift + other.shift,
                            self.unit_residue * other.unit_residue)

    def inverse(self) -> FieldElement:
        if self.is_zero():
            raise ZeroDivisionError("zero at precision")
        return FieldElement(self.config, -self.shift,
                            pow(self.unit_residue, -1, self.config.modulus))

    def is_square(self) -> bool | None:
        """Decide whether the element is a square in the field.

        Returns None (indeterminate) only for the zero-at-precision element.
        A nonzero element p^e*u is a square iff e is even and u is a square
        unit: quadratic residue mod p for odd p, congruent to 1 mod 8 for
        p = 2.  Both tests only need the leading digits of the unit, which a
        FieldElement always carries in full.
        """
        if self.is_zero():
            return None
        if self.shift % 2 != 0:
            return False
        return unit_is_square(self.unit_residue, self.config.p)


def unit_is_square(unit: int, p: int) -> bool:
    """Squareness of a unit of the valuation ring (needs unit mod 8 for p=2)."""
    if p == 2:
        return unit % 8 == 1
    return pow(unit % p, (p - 1) // 2, p) == 1


# ---------------------------------------------------------------------------
# Deterministic counter-based sampling.
#
# Sample i of a run draws from the Philox stream with key=seed and the
# (label, i) pair placed in the high counter words: streams never overlap,
# and the result is independent of how samples are distributed over workers.
# ---------------------------------------------------------------------------


def substream(seed: int, label: int, index: int) -> np.random.Generator:
    """Independent generator for sample `index` of the stream `(seed, label)`."""
    return np.random.Generator(
        np.random.Philox(key=seed & (2**64 - 1), counter=[0, 0, label & (2**64 - 1), index])
    )


class ResidueSource:
    """Buffered uniform draws from [0, bound), batched to amortize generator cost."""

    __slots__ = ("gen", "bound", "_buf", "_pos")

    def __init__(self, gen: np.random.Generator, bound: int, batch: int = 192):
        if bound > 2**62:
            raise ValueError("residue bound too large for buffered sampling")
        self.gen = gen
        self.bound = bound
        self._buf = gen.integers(0, bound, size=batch, dtype=np.int64)
        self._pos = 0

    def take(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self.gen.integers(0, self.bound, size=len(self._buf), dtype=np.int64)
            self._pos = 0
        v = int(self._buf[self._pos])
        self._pos += 1
        return v

    def take_vector(self, n: int) -> list[int]:
        return [self.take() for _ in range(n)]


def sample_ring(config: PadicConfig, gen: np.random.Generator) -> RingElement:
    """Haar-uniform element of the valuation ring at precision N."""
    src = ResidueSource(gen, config.modulus, batch=1)
    return RingElement(config, src.take())


def sample_unit(config: PadicConfig, gen: np.random.Generator) -> RingElement:
    """Uniform unit, by rejection (acceptance rate 1 - 1/p)."""
    src = ResidueSource(gen, config.modulus, batch=8)
    p = config.p
    while True:
        r = src.take()
        if r % p != 0:
            return RingElement(config, r)


def sample_ring_vector(config: PadicConfig, n: int, gen: np.random.Generator) -> list[RingElement]:
    src = ResidueSource(gen, config.modulus, batch=max(n, 8))
    return [RingElement(config, src.take()) for _ in range(n)]


def sample_sphere(config: PadicConfig, n: int, gen: np.random.Generator) -> list[RingElement]:
    """Uniform point of the unit sphere in K^n (max-norm 1), by rejection.

    Acceptance rate is 1 - p^-n.
    """
    src = ResidueSource(gen, config.modulus, batch=max(2 * n, 8))
    p = config.p
    while True:
        vec = [src.take() for _ in range(n)]
        if any(r % p != 0 for r in vec):
            return [RingElement(config, r) for r in vec]


def _sphere_residues(src: ResidueSource, n: int, p: int) -> list[int]:
    """Raw-residue variant of sample_sphere for hot paths."""
    while True:
        vec = src.take_vector(n)
        if any(r % p for r in vec):
            return vec
