"""Periodic basis families on the relative time interval [0, 1].

Two families are provided for expanding the fast periodic component of a
switched-circuit solution:

* ``build_fe_nodal`` -- first-order nodal hat functions on an equidistant,
  endpoint-inclusive grid.  The two boundary hats are zeroed to enforce
  periodicity and a constant function (index 0) carries the envelope.
  The zeroed functions are kept as placeholders but excluded from the
  ``retained`` index list so assembled matrices stay nonsingular.
* ``build_pwm`` -- duty-cycle-aware piecewise polynomials built by
  recursive integration of a hat-shaped seed, then Gram-Schmidt
  orthonormalized.  The set is orthonormal in L2([0, 1]) and each member
  is C0-continuous with a breakpoint exactly at the duty cycle.

Construction and all inner products are exact (rational arithmetic, see
``piecewise``); the only floating-point content of a basis function is
its normalization scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, DutyAlignmentError
from .piecewise import (
    PiecewisePolynomial,
    as_fraction,
    nonzero_segments,
    product_integral_exact,
    product_integral_on_segments,
)

#: tolerance for accepting a duty cycle as landing on a grid node
DUTY_ALIGN_TOL = 1e-12


class BasisFamily(str, Enum):
    FE_NODAL = "fe"
    PWM = "pwm"


def snap_duty(duty: float) -> Fraction:
    """Exact rational duty cycle: snap to a simple fraction when the float
    is within 1e-12 of one, otherwise take the float's exact value."""
    if not 0.0 < duty < 1.0:
        raise DomainError(f"duty cycle must lie in (0, 1), got {duty}")
    snapped = Fraction(duty).limit_denominator(10**6)
    if abs(float(snapped) - duty) <= DUTY_ALIGN_TOL:
        return snapped
    return Fraction(duty)


@dataclass(frozen=True)
class BasisSet:
    """Family of Np + 1 periodic basis functions plus retained-index list.

    ``functions[k]`` is the k-th basis function; ``retained`` lists the
    indices that participate in expansions (for the nodal family the two
    zeroed boundary functions are dropped).  Entry 0 is always the
    constant function 1.
    """

    family: BasisFamily
    duty_exact: Fraction
    np_index: int
    functions: tuple[PiecewisePolynomial, ...]
    retained: tuple[int, ...]

    @property
    def duty(self) -> float:
        return float(self.duty_exact)

    @property
    def n_retained(self) -> int:
        return len(self.retained)

    def _check_tau(self, tau: Union[float, Fraction]) -> Fraction:
        t = as_fraction(tau)
        if t < 0 or t > 1:
            raise DomainError(f"tau={float(t)} outside [0, 1]")
        return t

    def eval(self, tau: Union[float, Fraction]) -> np.ndarray:
        """Values of the retained functions at tau, in retained order."""
        t = self._check_tau(tau)
        return np.array([self.functions[k].value(t) for k in self.retained])

    def eval_derivative(self, tau: Union[float, Fraction]) -> np.ndarray:
        """One-sided (right) derivatives of the retained functions at tau."""
        t = self._check_tau(tau)
        return np.array([_derivative(self.functions[k]).value(t) for k in self.retained])

    def eval_matrix(self, taus: Sequence[Union[float, Fraction]]) -> np.ndarray:
        """Stacked eval() rows, shape (len(taus), n_retained)."""
        return np.array([self.eval(t) for t in taus])

    def values_at_zero(self) -> np.ndarray:
        return self.eval(0)

    def excitation_integrals(self) -> tuple[np.ndarray, np.ndarray]:
        """(integral over [0, D], integral over [D, 1]) of each retained function."""
        d = self.duty_exact
        on = np.array([self.functions[k].integral(0, d) for k in self.retained])
        off = np.array([self.functions[k].integral(d, 1) for k in self.retained])
        return on, off


@lru_cache(maxsize=None)
def _derivative(f: PiecewisePolynomial) -> PiecewisePolynomial:
    return f.derivative()


def build_fe_nodal(np_index: int, duty: float) -> BasisSet:
    """Nodal hat basis on Np equidistant nodes tau_k = (k-1)/(Np-1).

    The duty cycle must coincide with a node so the excitation jump is a
    breakpoint of every function; otherwise DutyAlignmentError is raised
    with the admissible Np values in the message.
    """
    if np_index < 3:
        raise DutyAlignmentError(f"nodal basis needs Np >= 3, got {np_index}")
    n_seg = np_index - 1
    aligned = duty * n_seg
    if abs(aligned - round(aligned)) > DUTY_ALIGN_TOL or not 0 < round(aligned) < n_seg:
        frac = snap_duty(duty)
        q = frac.denominator
        valid = ", ".join(str(q * k + 1) for k in range(1, 5)) + ", ..."
        raise DutyAlignmentError(
            f"duty cycle {duty} does not land on a node for Np={np_index}; "
            f"valid Np: {valid} (multiples of {q} plus 1)"
        )
    nodes = tuple(Fraction(k, n_seg) for k in range(np_index))
    duty_exact = nodes[round(aligned)]

    def hat(center: int) -> PiecewisePolynomial:
        h = Fraction(1, n_seg)
        segs = []
        for i in range(n_seg):
            if i == center - 1:  # rising flank
                segs.append((-nodes[i] / h, 1 / h))
            elif i == center:  # falling flank
                segs.append((nodes[i + 1] / h, -1 / h))
            else:
                segs.append((Fraction(0),))
        return PiecewisePolynomial(nodes, tuple(segs))

    functions = [PiecewisePolynomial.constant(1, nodes)]
    for k in range(1, np_index + 1):
        if k == 1 or k == np_index:
            functions.append(PiecewisePolynomial.zero(nodes))
        else:
            functions.append(hat(k - 1))
    retained = (0,) + tuple(range(2, np_index))
    return BasisSet(BasisFamily.FE_NODAL, duty_exact, np_index,
                    tuple(functions), retained)


def _pwm_seed(duty_exact: Fraction) -> PiecewisePolynomial:
    """Hat-shaped seed (2 tau - D)/D on [0, D], (1 + D - 2 tau)/(1 - D) after;
    the sqrt(3) normalization lives in the scale factor."""
    d = duty_exact
    bps = (Fraction(0), d, Fraction(1))
    segs = ((Fraction(-1), Fraction(2) / d),
            ((1 + d) / (1 - d), Fraction(-2) / (1 - d)))
    return PiecewisePolynomial(bps, segs)


def _normalized(f: PiecewisePolynomial, norm2: Fraction) -> PiecewisePolynomial:
    return f.with_scale(1.0 / math.sqrt(float(norm2)))


def build_pwm(np_index: int, duty: float) -> BasisSet:
    """Orthonormal duty-cycle-aware basis up to index Np.

    Index 0 is the constant 1; index 1 the normalized hat seed; each higher
    function integrates its predecessor from the duty cycle, is
    orthogonalized against all lower functions and normalized.  Breakpoints
    are exactly {0, D, 1} and every index is retained.
    """
    if np_index < 0:
        raise DomainError(f"Np must be >= 0, got {np_index}")
    d = snap_duty(duty)
    bps = (Fraction(0), d, Fraction(1))
    raw = [PiecewisePolynomial.constant(1, bps)]
    norms = [Fraction(1)]
    if np_index >= 1:
        seed = _pwm_seed(d)
        raw.append(seed)
        norms.append(product_integral_exact(seed, seed))
    for _ in range(2, np_index + 1):
        q = raw[-1].antiderivative_from(d)
        for ql, nl in zip(raw, norms):
            coef = product_integral_exact(q, ql) / nl
            if coef:
                q = q.combine(coef, ql)
        raw.append(q)
        norms.append(product_integral_exact(q, q))
    functions = tuple(_normalized(q, n) for q, n in zip(raw, norms))
    return BasisSet(BasisFamily.PWM, d, np_index, functions,
                    tuple(range(np_index + 1)))


def pwm_intermediates(np_index: int, duty: float) -> tuple[PiecewisePolynomial, ...]:
    """Zero-mean recursive integrals of the orthonormal basis, k >= 2.

    Entry k is the integral of basis function k-1 from the duty cycle with
    only its mean removed, i.e. before orthogonalization against the
    non-constant functions; entries 0 and 1 are the final basis functions.
    Useful for cross-checking closed-form segment expressions.
    """
    basis = build_pwm(np_index, duty)
    out = list(basis.functions[:2])
    for k in range(2, np_index + 1):
        prev = basis.functions[k - 1]
        star = PiecewisePolynomial(prev.breakpoints, prev.coeffs
                                   ).antiderivative_from(basis.duty_exact)
        mean = star.rational_integral(0, 1)
        centered = star.combine(mean, PiecewisePolynomial.constant(1, star.breakpoints))
        out.append(centered.with_scale(prev.scale))
    return tuple(out)


def gram_matrix(basis: BasisSet, period: float) -> np.ndarray:
    """period * integral of P P^T over [0, 1], retained functions only.

    Assembled from exact segment integrals restricted to the overlap of
    the two supports (no quadrature); symmetric by construction.
    """
    n = basis.n_retained
    funcs = [basis.functions[k] for k in basis.retained]
    support = [nonzero_segments(f) for f in funcs]
    g = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            common = support[a] & support[b]
            if not common:
                continue
            v = funcs[a].scale * funcs[b].scale * float(
                product_integral_on_segments(funcs[a], funcs[b], common))
            g[a, b] = g[b, a] = period * v
    return g


def stiffness_matrix(basis: BasisSet) -> np.ndarray:
    """-integral of (dP/dtau) P^T over [0, 1], retained functions only.

    Exactly skew-symmetric: the upper triangle is computed from exact
    integrals and mirrored, and the diagonal vanishes by periodicity.
    """
    n = basis.n_retained
    funcs = [basis.functions[k] for k in basis.retained]
    derivs = [_derivative(f) for f in funcs]
    support = [nonzero_segments(f) for f in funcs]
    q = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            common = support[a] & support[b]
            if not common:
                continue
            v = -funcs[a].scale * funcs[b].scale * float(
                product_integral_on_segments(derivs[a], funcs[b], common))
            q[a, b] = v
            q[b, a] = -v
    return q
