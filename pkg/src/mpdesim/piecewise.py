"""Piecewise polynomials on [0, 1] with exact rational coefficients.

The periodic basis functions are piecewise polynomials whose monomial
coefficients grow to ~1e13 in magnitude by degree 12.  Inner products and
point evaluation in float64 monomials would lose most significant digits
to cancellation, so segments are stored with exact ``fractions.Fraction``
coefficients in the global variable tau, together with a single float
``scale`` factor (the only irrational part, e.g. a 1/sqrt(norm) from
normalization).  All integrals are computed exactly on the rational part
and multiplied by the scales at the very end; point values are evaluated
by exact Horner at a rational abscissa and converted to float last.

Conventions
-----------
* Segment i covers [breakpoints[i], breakpoints[i+1]); the last segment
  also includes its right endpoint.  Values and one-sided derivatives at
  a breakpoint therefore come from the right-hand segment.
* Coefficients are stored low degree -> high degree.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, DomainError

Rational = Union[Fraction, int]


def _poly_eval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def _poly_integral(coeffs: Sequence[Fraction], lo: Fraction, hi: Fraction) -> Fraction:
    total = Fraction(0)
    plo, phi = lo, hi
    for i, c in enumerate(coeffs):
        if c:
            total += c * (phi - plo) / (i + 1)
        plo *= lo
        phi *= hi
    return total


def as_fraction(x: Union[float, Rational]) -> Fraction:
    """Exact rational image of x (floats convert exactly)."""
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Exact piecewise polynomial times a float scale factor."""

    breakpoints: tuple[Fraction, ...]
    coeffs: tuple[tuple[Fraction, ...], ...]
    scale: float = 1.0

    def __post_init__(self):
        if len(self.breakpoints) != len(self.coeffs) + 1:
            raise DimensionMismatchError("need one more breakpoint than segments")
        if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
            raise DimensionMismatchError("breakpoints must be strictly increasing")

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def constant(value: Rational, breakpoints: Sequence[Rational]) -> "PiecewisePolynomial":
        bps = tuple(as_fraction(b) for b in breakpoints)
        return PiecewisePolynomial(bps, tuple((as_fraction(value),) for _ in bps[:-1]))

    @staticmethod
    def zero(breakpoints: Sequence[Rational]) -> "PiecewisePolynomial":
        return PiecewisePolynomial.constant(0, breakpoints)

    # -- basic queries ---------------------------------------------------------

    @property
    def degree(self) -> int:
        return max(len(c) for c in self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.scale == 0.0 or all(not c for seg in self.coeffs for c in seg)

    def _segment_index(self, x: Fraction) -> int:
        lo, hi = self.breakpoints[0], self.breakpoints[-1]
        if x < lo or x > hi:
            raise DomainError(f"tau={float(x)} outside [{float(lo)}, {float(hi)}]")
        # right-continuous: segment starting at x when x is a breakpoint,
        # except the last segment which also owns its right endpoint
        return min(bisect_right(self.breakpoints, x) - 1, len(self.coeffs) - 1)

    def rational_value(self, x: Union[float, Rational]) -> Fraction:
        """Exact value of the rational part (scale not applied)."""
        xf = as_fraction(x)
        return _poly_eval(self.coeffs[self._segment_index(xf)], xf)

    def value(self, x: Union[float, Rational]) -> float:
        return self.scale * float(self.rational_value(x))

    def values(self, taus: Iterable[Union[float, Rational]]) -> np.ndarray:
        return np.array([self.value(t) for t in taus], dtype=float)

    # -- calculus ---------------------------------------------------------------

    def derivative(self) -> "PiecewisePolynomial":
        segs = []
        for c in self.coeffs:
            d = tuple(c[i] * i for i in range(1, len(c))) or (Fraction(0),)
            segs.append(d)
        return PiecewisePolynomial(self.breakpoints, tuple(segs), self.scale)

    def antiderivative_from(self, start: Union[float, Rational]) -> "PiecewisePolynomial":
        """F(x) = integral from start to x, continuous across breakpoints."""
        start = as_fraction(start)
        raw = [(Fraction(0),) + tuple(c / (i + 1) for i, c in enumerate(seg))
               for seg in self.coeffs]
        consts = []
        val = Fraction(0)
        for (lo, hi), a in zip(zip(self.breakpoints, self.breakpoints[1:]), raw):
            consts.append(val - _poly_eval(a, lo))
            val = _poly_eval(a, hi) + consts[-1]
        i0 = self._segment_index(start)
        shift = _poly_eval(raw[i0], start) + consts[i0]
        segs = tuple((a[0] + c - shift,) + a[1:] for a, c in zip(raw, consts))
        return PiecewisePolynomial(self.breakpoints, segs, self.scale)

    def rational_integral(self, lo: Union[float, Rational],
                          hi: Union[float, Rational]) -> Fraction:
        """Exact integral of the rational part over [lo, hi] (scale not applied)."""
        lo, hi = as_fraction(lo), as_fraction(hi)
        if lo > hi:
            return -self.rational_integral(hi, lo)
        total = Fraction(0)
        for i, seg in enumerate(self.coeffs):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            a, b = max(a, lo), min(b, hi)
            if a < b:
                total += _poly_integral(seg, a, b)
        return total

    def integral(self, lo: Union[float, Rational] = 0,
                 hi: Union[float, Rational] = 1) -> float:
        return self.scale * float(self.rational_integral(lo, hi))

    # -- algebra ----------------------------------------------------------------

    def combine(self, factor: Fraction, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        """self - factor * other, exact; both must share breakpoints and scale 1."""
        if self.breakpoints != other.breakpoints:
            raise DimensionMismatchError("combine requires identical breakpoints")
        if self.scale != 1.0 or other.scale != 1.0:
            raise DimensionMismatchError("combine operates on unscaled polynomials")
        segs = []
        for cs, ds in zip(self.coeffs, other.coeffs):
            n = max(len(cs), len(ds))
            cs = cs + (Fraction(0),) * (n - len(cs))
            ds = ds + (Fraction(0),) * (n - len(ds))
            segs.append(tuple(a - factor * b for a, b in zip(cs, ds)))
        return PiecewisePolynomial(self.breakpoints, tuple(segs))

    def with_scale(self, scale: float) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breakpoints, self.coeffs, scale)

    def resegmented(self, breakpoints: Sequence[Rational]) -> "PiecewisePolynomial":
        """Same function on a finer breakpoint set (superset of the current one)."""
        bps = tuple(as_fraction(b) for b in breakpoints)
        if not set(self.breakpoints) <= set(bps):
            raise DimensionMismatchError("new breakpoints must contain the old ones")
        segs = tuple(self.coeffs[self._segment_index((a + b) / 2)]
                     for a, b in zip(bps, bps[1:]))
        return PiecewisePolynomial(bps, segs, self.scale)


def product_integral_exact(f: PiecewisePolynomial, g: PiecewisePolynomial,
                           lo: Rational = 0, hi: Rational = 1) -> Fraction:
    """Exact integral of the rational parts of f*g over [lo, hi].

    Scales are not applied; multiply by f.scale * g.scale for the full value.
    Handles differing breakpoint sets by merging them.
    """
    lo, hi = as_fraction(lo), as_fraction(hi)
    if f.breakpoints == g.breakpoints:
        total = Fraction(0)
        for i, (cf, cg) in enumerate(zip(f.coeffs, g.coeffs)):
            a = max(f.breakpoints[i], lo)
            b = min(f.breakpoints[i + 1], hi)
            if a < b and any(cf) and any(cg):
                total += _poly_integral(_poly_mul(cf, cg), a, b)
        return total
    cuts = sorted({b for b in f.breakpoints + g.breakpoints if lo < b < hi} | {lo, hi})
    total = Fraction(0)
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        cf = f.coeffs[f._segment_index(mid)]
        cg = g.coeffs[g._segment_index(mid)]
        if any(cf) and any(cg):
            total += _poly_integral(_poly_mul(cf, cg), a, b)
    return total


def product_integral(f: PiecewisePolynomial, g: PiecewisePolynomial,
                     lo: Rational = 0, hi: Rational = 1) -> float:
    """Float inner product of f and g over [lo, hi], scales applied."""
    return f.scale * g.scale * float(product_integral_exact(f, g, lo, hi))


def nonzero_segments(f: PiecewisePolynomial) -> frozenset[int]:
    """Indices of segments with a nonzero polynomial (support of f)."""
    return frozenset(i for i, seg in enumerate(f.coeffs) if any(seg))


def product_integral_on_segments(f: PiecewisePolynomial, g: PiecewisePolynomial,
                                 segments: Iterable[int]) -> Fraction:
    """Exact integral of the rational parts of f*g over the given segments.

    Both functions must share the same breakpoints; used by the matrix
    assembly to exploit the local support of nodal functions.
    """
    if f.breakpoints != g.breakpoints:
        raise DimensionMismatchError("segment integral requires identical breakpoints")
    total = Fraction(0)
    for i in segments:
        total += _poly_integral(_poly_mul(f.coeffs[i], g.coeffs[i]),
                                f.breakpoints[i], f.breakpoints[i + 1])
    return total
