"""Switched linear circuit models with 2-level pulsed excitation.

A model is the first-order system  A dx/dt + B x = c(t)  where c(t)
alternates between two constant levels inside each switching period:
``c_on`` while the relative time  tau = t * fs mod 1  is in [0, D) and
``c_off`` for the rest of the period.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError
from .linalg import FloatArray, LUFactorization


@dataclass(frozen=True)
class CircuitModel:
    """State-space description of a switched linear circuit.

    Attributes
    ----------
    a, b : (Ns, Ns) arrays
        Mass and stiffness matrices of the first-order system; ``a`` must
        be nonsingular (ODE scope, no algebraic states).
    c_on, c_off : (Ns,) arrays
        Excitation levels inside and outside the duty interval.
    fs : float
        Switching frequency in Hz; the period is 1/fs.
    duty : float
        Fraction of the period spent at the on level, in (0, 1).
    x0 : (Ns,) array
        Initial state.
    state_names : tuple of str
        Column labels used in CSV output.
    conduction_state : int or None
        Index of a state that must remain positive for the model to be
        valid (e.g. an inductor current in continuous conduction); the
        reference solution warns when it crosses zero.
    """

    a: FloatArray
    b: FloatArray
    c_on: FloatArray
    c_off: FloatArray
    fs: float
    duty: float
    x0: FloatArray
    state_names: tuple[str, ...] = ()
    conduction_state: Optional[int] = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        c_on = np.atleast_1d(np.asarray(self.c_on, dtype=float))
        c_off = np.atleast_1d(np.asarray(self.c_off, dtype=float))
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        ns = a.shape[0]
        shapes = (a.shape, b.shape, c_on.shape, c_off.shape, x0.shape)
        if a.shape != (ns, ns) or b.shape != (ns, ns) or \
                c_on.shape != (ns,) or c_off.shape != (ns,) or x0.shape != (ns,):
            raise DimensionMismatchError(f"inconsistent system shapes: {shapes}")
        for arr in (a, b, c_on, c_off, x0):
            if not np.all(np.isfinite(arr)):
                raise DimensionMismatchError("system contains non-finite entries")
        if not self.fs > 0:
            raise DimensionMismatchError(f"fs must be positive, got {self.fs}")
        if not 0.0 < self.duty < 1.0:
            raise DimensionMismatchError(f"duty must lie in (0, 1), got {self.duty}")
        names = self.state_names or tuple(f"x_{j + 1}" for j in range(ns))
        if len(names) != ns:
            raise DimensionMismatchError("state_names length mismatch")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c_on", c_on)
        object.__setattr__(self, "c_off", c_off)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "state_names", names)
        LUFactorization(a)  # rejects singular mass matrices up front

    @property
    def ns(self) -> int:
        return self.a.shape[0]

    @property
    def period(self) -> float:
        return 1.0 / self.fs

    def tau(self, t: float) -> float:
        """Relative time t * fs modulo 1."""
        return (t * self.fs) % 1.0

    def excitation(self, t: float) -> FloatArray:
        """Excitation level active at absolute time t."""
        return self.c_on if self.tau(t) < self.duty else self.c_off

    def with_initial_state(self, x0: Sequence[float]) -> "CircuitModel":
        return CircuitModel(self.a, self.b, self.c_on, self.c_off, self.fs,
                            self.duty, np.asarray(x0, dtype=float),
                            self.state_names, self.conduction_state)


def buck_converter(vi: float = 100.0, fs: float = 500.0, duty: float = 0.7,
                   inductance: float = 1e-3, r_inductor: float = 10e-3,
                   capacitance: float = 100e-6, r_load: float = 0.8,
                   x0: Sequence[float] = (0.0, 0.0)) -> CircuitModel:
    """Step-down converter in continuous conduction mode.

    States are the inductor current i_L and the capacitor (= output)
    voltage v_C; the input source alternates between ``vi`` and 0:

        [L 0; 0 C] d/dt [i_L; v_C] + [R_L 1; -1 1/R] [i_L; v_C] = [v_i(t); 0]

    Defaults give a pronounced ripple on a slowly settling envelope.
    """
    a = np.array([[inductance, 0.0], [0.0, capacitance]])
    b = np.array([[r_inductor, 1.0], [-1.0, 1.0 / r_load]])
    return CircuitModel(a, b, np.array([vi, 0.0]), np.zeros(2), fs, duty,
                        np.asarray(x0, dtype=float), ("i_L", "v_C"),
                        conduction_state=0)
