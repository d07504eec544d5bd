"""Classical invariants, spectra and signatures.

Everything here is exact: spectral numbers are :class:`fractions.Fraction`
and every count is an ``int``.  Spectra and signatures are only available
for types with a Brieskorn-Pham model ``x^p + y^q`` (constant-weight complete
dual graphs); other types get ``None`` and the callers skip the rules that
need them.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal

from .graph import SingularityType, constant_weight

HALF = Fraction(1, 2)


def binom2(n: int) -> int:
    """C(n, 2), taken as 0 for n < 2."""
    return n * (n - 1) // 2 if n >= 2 else 0


@dataclass(frozen=True)
class InvariantBundle:
    r: int
    mult: int
    delta: int
    mu: int
    kappa: int
    tau_es: int | None = None

    def to_json(self) -> dict:
        return {
            "branches": self.r,
            "mult": self.mult,
            "delta": self.delta,
            "mu": self.mu,
            "kappa": self.kappa,
            "tau_es": self.tau_es,
        }


@dataclass(frozen=True)
class BrieskornModel:
    """Exponents of ``x^p + y^q`` with ``p <= q``."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.p < 2 or self.q < self.p:
            raise ValueError(f"need 2 <= p <= q, got ({self.p}, {self.q})")

    @property
    def mu(self) -> int:
        return (self.p - 1) * (self.q - 1)


@dataclass(frozen=True)
class Spectrum:
    """Multiset of spectral numbers, stored sorted as ``(value, multiplicity)``."""

    items: tuple[tuple[Fraction, int], ...] = ()

    @classmethod
    def from_values(cls, values: Iterable[Fraction]) -> "Spectrum":
        return cls.from_counter(Counter(Fraction(v) for v in values))

    @classmethod
    def from_counter(cls, counts: Counter) -> "Spectrum":
        return cls(tuple(sorted((v, m) for v, m in counts.items() if m > 0)))

    def counter(self) -> Counter:
        return Counter(dict(self.items))

    def __add__(self, other: "Spectrum") -> "Spectrum":
        return Spectrum.from_counter(self.counter() + other.counter())

    def __mul__(self, n: int) -> "Spectrum":
        return Spectrum.from_counter(Counter({v: m * n for v, m in self.items}))

    __rmul__ = __mul__

    @property
    def total(self) -> int:
        return sum(m for _, m in self.items)

    def support(self) -> list[Fraction]:
        return [v for v, _ in self.items]

    def to_json(self) -> list:
        return [[f"{v.numerator}/{v.denominator}", m] for v, m in self.items]

    @classmethod
    def from_json(cls, data: list) -> "Spectrum":
        return cls.from_counter(Counter({Fraction(v): m for v, m in data}))

    def __str__(self) -> str:
        return " + ".join(f"{m}t^{v}" if m > 1 else f"t^{v}" for v, m in self.items) or "0"


def joint_spectrum(spectra: Iterable[Spectrum]) -> Spectrum:
    total = Counter()
    for s in spectra:
        total += s.counter()
    return Spectrum.from_counter(total)


@dataclass(frozen=True)
class Signature:
    plus: int
    zero: int
    minus: int

    @property
    def mu(self) -> int:
        return self.plus + self.zero + self.minus

    def __add__(self, other: "Signature") -> "Signature":
        return Signature(self.plus + other.plus, self.zero + other.zero, self.minus + other.minus)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.plus, self.zero, self.minus)

    def to_json(self) -> dict:
        return {"plus": self.plus, "zero": self.zero, "minus": self.minus}


def basic_invariants(t: SingularityType) -> InvariantBundle:
    """delta from the graph; mu and kappa from the smooth-branch identities."""
    delta = t.graph.delta
    r = t.graph.r
    mu = 2 * delta - r + 1
    return InvariantBundle(r=r, mult=r, delta=delta, mu=mu, kappa=mu + r - 1, tau_es=tau_es(t))


def brieskorn_model(t: SingularityType) -> BrieskornModel | None:
    k = constant_weight(t)
    if k is None:
        return None
    return BrieskornModel(t.r, t.r * k)


def spectrum(m: BrieskornModel) -> Spectrum:
    p, q = m.p, m.q
    counts: Counter = Counter()
    for i in range(1, p):
        for j in range(1, q):
            counts[Fraction(i, p) + Fraction(j, q) - 1] += 1
    return Spectrum.from_counter(counts)


def interval_count(
    s: Spectrum,
    lo: Fraction,
    hi: Fraction,
    lo_open: bool = True,
    hi_open: bool = True,
) -> int:
    if not lo < hi:
        raise ValueError(f"empty interval ({lo}, {hi})")
    n = 0
    for v, m in s.items:
        if (v > lo if lo_open else v >= lo) and (v < hi if hi_open else v <= hi):
            n += m
    return n


def closed_form_spectral_count(
    family: Literal["OMP", "KPK"], p: int, k: int = 1, alpha: Fraction = Fraction(0)
) -> int:
    """Closed-form count of spectral numbers in the open interval (-1/2+alpha, 1/2+alpha).

    ``OMP`` is the ordinary p-fold point (x^p + y^p); ``KPK`` is x^p + y^(pk).
    These are cross-checks for :func:`interval_count`; they are only exact on
    the range of ``alpha`` where the counting argument behind them holds,
    see :func:`closed_form_valid`.
    """
    alpha = Fraction(alpha)
    if family == "OMP":
        return (p - 1) ** 2 - binom2(math.floor((HALF - alpha) * p)) - binom2(math.floor((HALF + alpha) * p))
    if family != "KPK":
        raise ValueError(f"unknown family {family!r}")
    x = p * k * (HALF + alpha)
    c = math.ceil(x)
    a = math.ceil(Fraction(c, k))
    f = math.floor(x)
    b = f // k
    upper = (p - a) * (Fraction(k * (p - 1 + a), 2) - c)
    lower = b * (f - Fraction(k * (b + 1), 2))
    value = (p - 1) * (p * k - 1) - upper - lower
    assert value.denominator == 1
    return int(value)


def closed_form_valid(family: Literal["OMP", "KPK"], p: int, k: int, alpha: Fraction) -> bool:
    """Whether ``alpha`` lies where the closed form counts correctly.

    Both formulas count the spectral numbers below the window as the pairs
    under an anti-diagonal of the (p-1) x (q-1) exponent box and assume that
    anti-diagonal does not leave the box: ``(1/2 + alpha) p < p + 1`` for the
    ordinary point, ``alpha <= 1/2`` for x^p + y^(pk).
    """
    alpha = Fraction(alpha)
    if alpha < 0:
        return False
    if family == "OMP":
        return (HALF + alpha) * p < p + 1
    return alpha <= HALF


def signature_steenbrink(m: BrieskornModel) -> Signature:
    """Signature of the stabilised form x^p + y^q + z^2 from the monomial basis."""
    plus = zero = minus = 0
    for a in range(m.p - 1):
        for b in range(m.q - 1):
            ell = Fraction(a + 1, m.p) + Fraction(b + 1, m.q) + HALF
            if ell.denominator == 1:
                zero += 1
            elif math.floor(ell) % 2 == 0:
                plus += 1
            else:
                minus += 1
    return Signature(plus, zero, minus)


def signature_from_spectrum(s: Spectrum) -> Signature:
    minus = interval_count(s, -HALF, HALF)
    plus = 2 * interval_count(s, Fraction(-1), -HALF)
    return Signature(plus, s.total - plus - minus, minus)


def signature_closed_form(p: int, k: int) -> Signature:
    """Parity closed form for x^p + y^(pk) + z^2 (oracle for the enumeration)."""
    if p < 2 or k < 1:
        raise ValueError("need p >= 2 and k >= 1")
    P, K = Fraction(p), Fraction(k)
    if p % 2 == 0:
        zero = P - 2
        plus = (P - 2) / 2 * (P * K / 2 - 2)
        minus = (3 * P - 2) / 4 * K * P - (P - 1)
    elif k % 2 == 0:
        zero = P - 1
        plus = ((P - 1) / 2) ** 2 * K - (P - 1)
        minus = (P - 1) * (3 * P * K + K - 4) / 4
    else:
        zero = Fraction(0)
        plus = ((P - 1) / 2) ** 2 * K - (P - 1) / 2
        minus = (P - 1) * (3 * P * K + K - 2) / 4
    vals = (plus, zero, minus)
    if any(v.denominator != 1 for v in vals):
        raise ArithmeticError(f"closed form gives non-integer signature {vals} at p={p}, k={k}")
    return Signature(int(plus), int(zero), int(minus))


def tau_es(t: SingularityType) -> int | None:
    """Codimension of the equisingular stratum, for the types where it is pinned down.

    A_{2k-1}: 2k-1; ordinary p-fold point: p(p+1)/2 - 2; x^3 + y^6: 9.
    """
    k = constant_weight(t)
    if k is None:
        return None
    if t.r == 2:
        return 2 * k - 1
    if k == 1:
        return t.r * (t.r + 1) // 2 - 2
    if (t.r, k) == (3, 2):
        return 9
    return None


def tau_es_omp_uncorrected(p: int) -> int:
    """C(p+1, 2): the ordinary-point value before removing the two translations."""
    return p * (p + 1) // 2
