"""Dense linear algebra primitives shared by the whole package.

Matrices and vectors are plain float64 ndarrays.  The heavy lifting is
delegated to LAPACK through numpy/scipy; this module adds the singularity
policy and a reusable factorization object.  Constant matrices appear in
every stage of the implicit time stepper, so factorizations are cached and
reused rather than recomputed per solve.
"""

from __future__ import annotations

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla

from .errors import DimensionMismatchError, SingularMatrixError

FloatArray = npt.NDArray[np.float64]

#: relative pivot threshold below which a matrix is declared singular
PIVOT_RTOL = 1e-14


def kron(a: FloatArray, b: FloatArray) -> FloatArray:
    """Kronecker product: block (i, j) of the result equals a[i, j] * b."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


class LUFactorization:
    """LU factorization with partial pivoting, reusable across solves.

    Raises SingularMatrixError when the smallest pivot magnitude falls
    below ``PIVOT_RTOL * norm_inf(m)``.
    """

    def __init__(self, m: FloatArray):
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected square matrix, got shape {m.shape}")
        self.shape = m.shape
        norm = np.max(np.sum(np.abs(m), axis=1)) if m.size else 0.0
        self._lu, self._piv = sla.lu_factor(m, check_finite=False)
        pivots = np.abs(np.diag(self._lu))
        if m.size and (norm == 0.0 or np.min(pivots) < PIVOT_RTOL * norm):
            raise SingularMatrixError(
                f"matrix numerically singular (min pivot {np.min(pivots):.3e}, "
                f"norm {norm:.3e})"
            )

    def solve(self, rhs: npt.ArrayLike) -> FloatArray:
        rhs = np.asarray(rhs)
        if rhs.shape[0] != self.shape[0]:
            raise DimensionMismatchError(
                f"rhs length {rhs.shape[0]} != matrix size {self.shape[0]}"
            )
        return sla.lu_solve((self._lu, self._piv), rhs, check_finite=False)


def lu_solve(m: FloatArray, rhs: npt.ArrayLike) -> FloatArray:
    """Solve m @ y = rhs with partial pivoting (one-shot convenience)."""
    return LUFactorization(m).solve(rhs)


def expm(m: FloatArray) -> FloatArray:
    """Matrix exponential (scaling-and-squaring Pade), for small systems."""
    return sla.expm(np.asarray(m, dtype=float))


def nonzero_fraction(m: FloatArray, threshold: float = 1e-12) -> float:
    """Fill statistic: fraction of entries with magnitude above threshold."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.count_nonzero(np.abs(m) > threshold)) / m.size
