"""Adaptive implicit Runge-Kutta integrator for M y' + K y = f, f constant.

The scheme is the 3-stage Radau IIA collocation method of classical order
5 (A-stable, stiffly accurate) with the standard embedded order-3 error
estimate and the degree-3 collocation polynomial as dense output
(interpolation order 4).  All tableau data is derived at import time from
the collocation nodes, so there are no opaque literal constants.

Because the right-hand side is affine and constant in time, the stage
equations are linear and are solved directly: one real and one complex
factorization per step size, shared by all stages and by the error
estimate.  The right-hand side g(y) = f - K y is evaluated once per step
position, which is what the ``n_rhs_evaluations`` counter reports.

Error control uses the infinity norm  max_i |err_i / sc_i|  with
sc_i = abstol + reltol * max(|y_i| at the step ends), a PI step-size
controller (safety 0.9, growth clamp [0.2, 8]) and optional clamping of
step endpoints onto a periodic grid of discontinuity times so that no
step straddles an excitation switching instant.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    MaxStepsExceededError,
    OutOfSpanError,
    StepSizeUnderflowError,
)
from .linalg import FloatArray, LUFactorization

# -- tableau ----------------------------------------------------------------
# Radau IIA nodes; the Butcher matrix follows from a_ij = int_0^{c_i} L_j.

_S6 = math.sqrt(6.0)
NODES = np.array([(4.0 - _S6) / 10.0, (4.0 + _S6) / 10.0, 1.0])


def _lagrange_monomials(nodes: np.ndarray) -> list[np.ndarray]:
    out = []
    for j, cj in enumerate(nodes):
        num = np.array([1.0])
        den = 1.0
        for m, cm in enumerate(nodes):
            if m != j:
                num = np.convolve(num, np.array([-cm, 1.0]))
                den *= cj - cm
        out.append(num / den)
    return out


def _derive_tableau():
    lag = _lagrange_monomials(NODES)
    a = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            c = lag[j]
            a[i, j] = sum(c[p] * NODES[i] ** (p + 1) / (p + 1) for p in range(len(c)))
    b = a[2].copy()  # stiffly accurate: last row are the weights

    a_inv = np.linalg.inv(a)
    eigvals, eigvecs = np.linalg.eig(a_inv)
    i_real = int(np.argmin(np.abs(eigvals.imag)))
    i_pos = next(i for i in range(3) if i != i_real and eigvals[i].imag > 0)
    i_neg = next(i for i in range(3) if i != i_real and eigvals[i].imag < 0)
    gamma = eigvals[i_real].real
    lam = eigvals[i_pos]
    t_mat = np.column_stack(
        [eigvecs[:, i_real].real, eigvecs[:, i_pos], eigvecs[:, i_neg]])
    t_inv_ones = np.linalg.solve(t_mat, np.ones(3))
    assert abs(t_inv_ones[2] - np.conj(t_inv_ones[1])) < 1e-12

    # embedded order-3 quadrature over nodes {0, c1, c2, c3} with weight
    # 1/gamma on the left endpoint; e maps stage increments to the estimate
    bhat0 = 1.0 / gamma
    vander = np.vstack([np.ones(3), NODES, NODES ** 2])
    bhat = np.linalg.solve(vander, np.array([1.0 - bhat0, 0.5, 1.0 / 3.0]))
    e_coeff = a_inv.T @ (bhat - b)

    # dense output: collocation polynomial through (0, y0) and the stages,
    # stored as monomial coefficients of x, x^2, x^3 per stage
    lag4 = _lagrange_monomials(np.concatenate([[0.0], NODES]))
    p_mat = np.array([lag4[i + 1][1:4] for i in range(3)])
    return a, b, gamma, lam, t_mat, t_inv_ones, e_coeff, p_mat


(BUTCHER_A, BUTCHER_B, GAMMA_REAL, LAMBDA_COMPLEX,
 T_MAT, T_INV_ONES, ERR_COEFF, DENSE_P) = _derive_tableau()

#: controller constants
SAFETY = 0.9
FACTOR_MIN = 0.2
FACTOR_MAX = 8.0
_K_EXP = 4.0  # estimator local order + 1
ERR_FLOOR = 1e-10


@dataclass(frozen=True)
class EventGrid:
    """Periodic grid of discontinuity times: n * period + offset."""

    period: float
    offsets: tuple[float, ...] = (0.0,)

    @staticmethod
    def switching(period: float, duty: float) -> "EventGrid":
        return EventGrid(period, (0.0, duty * period))

    def next_after(self, t: float) -> float:
        """Smallest grid time strictly greater than t (with snap tolerance)."""
        t_eff = t + 1e-12 * self.period
        best = math.inf
        for off in self.offsets:
            k = math.floor((t_eff - off) / self.period) + 1
            best = min(best, k * self.period + off)
        return best


@dataclass(frozen=True)
class SolverConfig:
    reltol: float = 1e-6
    abstol: float = 1e-10
    initial_step: Optional[float] = None
    max_steps: int = 100_000
    discontinuity_times: Optional[EventGrid] = None
    fixed_step: Optional[float] = None

    def __post_init__(self):
        if self.reltol <= 0 or self.abstol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class SolverStats:
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs_evaluations: int = 0
    wall_time: float = 0.0

    def merged_with(self, other: "SolverStats") -> "SolverStats":
        return SolverStats(self.n_steps + other.n_steps,
                           self.n_rejected + other.n_rejected,
                           self.n_rhs_evaluations + other.n_rhs_evaluations,
                           self.wall_time + other.wall_time)


class Trajectory:
    """Accepted steps with per-step dense-output interpolants.

    Inside step [t_i, t_i + h_i] the solution is the collocation cubic
    y_i + Q_i @ (x, x^2, x^3) with x the normalized offset; it matches the
    stored endpoint values exactly, so the piecewise interpolant is
    continuous.
    """

    def __init__(self, t_start: float, t_end: float, starts: np.ndarray,
                 widths: np.ndarray, values: np.ndarray, dense: np.ndarray,
                 stats: SolverStats):
        self.t_start = t_start
        self.t_end = t_end
        self._starts = starts        # (n_steps,)
        self._widths = widths        # (n_steps,)
        self._values = values        # (n_steps + 1, N) node solutions
        self._dense = dense          # (n_steps, N, 3)
        self.stats = stats

    @property
    def times(self) -> np.ndarray:
        """Accepted node times, including both span endpoints."""
        return np.concatenate([self._starts, [self.t_end]])

    @property
    def widths(self) -> np.ndarray:
        """Accepted step sizes."""
        return self._widths

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def y_end(self) -> FloatArray:
        return self._values[-1]

    def _locate(self, t: float) -> int:
        span = max(self.t_end - self.t_start, np.finfo(float).tiny)
        if t < self.t_start - 1e-10 * span or t > self.t_end + 1e-10 * span:
            raise OutOfSpanError(
                f"t={t} outside solved span [{self.t_start}, {self.t_end}]")
        idx = int(np.searchsorted(self._starts, t, side="right")) - 1
        return min(max(idx, 0), len(self._starts) - 1)

    def eval(self, t: float) -> FloatArray:
        if len(self._starts) == 0:
            self._locate(t)
            return self._values[0].copy()
        i = self._locate(t)
        if t == self._starts[i]:
            return self._values[i].copy()
        x = (t - self._starts[i]) / self._widths[i]
        if t == self.t_end:
            return self._values[-1].copy()
        return self._values[i] + self._dense[i] @ np.array([x, x * x, x ** 3])

    def eval_many(self, times: Sequence[float]) -> np.ndarray:
        return np.array([self.eval(t) for t in times])


def _initial_step(config: SolverConfig, span: float) -> float:
    if config.fixed_step is not None:
        return config.fixed_step
    if config.initial_step is not None:
        return config.initial_step
    return span / 100.0


def integrate(mass: FloatArray, stiffness: FloatArray, forcing: FloatArray,
              y0: FloatArray, span: tuple[float, float],
              config: SolverConfig) -> Trajectory:
    """Integrate mass * y' + stiffness * y = forcing over the span.

    The mass matrix must be nonsingular.  Returns a Trajectory with dense
    output and solver statistics; see the module docstring for the error
    control and instrumentation contracts.
    """
    t_start, t_end = float(span[0]), float(span[1])
    mass = np.asarray(mass, dtype=float)
    stiffness = np.asarray(stiffness, dtype=float)
    forcing = np.asarray(forcing, dtype=float)
    y = np.asarray(y0, dtype=float).copy()
    n = y.shape[0]
    stats = SolverStats()
    clock = time.perf_counter()

    if t_end < t_start:
        raise OutOfSpanError("span must have t_end >= t_start")
    if t_end == t_start:
        return Trajectory(t_start, t_end, np.empty(0), np.empty(0),
                          y[np.newaxis, :].copy(), np.empty((0, n, 3)), stats)

    span_len = t_end - t_start
    mass_lu = LUFactorization(mass)
    grid = config.discontinuity_times

    starts: list[float] = []
    widths: list[float] = []
    values: list[FloatArray] = [y.copy()]
    dense: list[np.ndarray] = []

    h_prop = _initial_step(config, span_len)
    cached_h = None
    lu_real = lu_cplx = None
    t = t_start
    g = None
    err_prev = None
    rejected_last = False
    attempts = 0

    while t < t_end - 1e-14 * span_len:
        attempts += 1
        if attempts > config.max_steps:
            raise MaxStepsExceededError(
                f"exceeded {config.max_steps} step attempts at t={t}")

        h = min(h_prop, t_end - t)
        if grid is not None:
            nxt = grid.next_after(t)
            if nxt < t_end and t + h > nxt - 1e-12 * grid.period:
                h = nxt - t
        if h < 1e-14 * span_len:
            raise StepSizeUnderflowError(f"step size {h} underflowed at t={t}")

        if h != cached_h:
            lu_real = LUFactorization(GAMMA_REAL / h * mass + stiffness)
            lu_cplx = sla.lu_factor(LAMBDA_COMPLEX / h * mass + stiffness,
                                    check_finite=False)
            cached_h = h

        if g is None:
            g = forcing - stiffness @ y
            stats.n_rhs_evaluations += 1

        w_real = lu_real.solve(T_INV_ONES[0].real * g)
        w_cplx = sla.lu_solve(lu_cplx, T_INV_ONES[1] * g, check_finite=False)
        z = np.empty((3, n))
        for i in range(3):
            z[i] = T_MAT[i, 0].real * w_real + 2.0 * (T_MAT[i, 1] * w_cplx).real
        y_new = y + z[2]

        if config.fixed_step is None:
            err_raw = (h / GAMMA_REAL) * mass_lu.solve(g) + z.T @ ERR_COEFF
            err_vec = (GAMMA_REAL / h) * lu_real.solve(mass @ err_raw)
            sc = config.abstol + config.reltol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec / sc)))
        else:
            err = 0.0

        if err <= 1.0:
            starts.append(t)
            widths.append(h)
            dense.append(z.T @ DENSE_P)
            t = t + h
            y = y_new
            g = None
            values.append(y.copy())
            stats.n_steps += 1
            if config.fixed_step is None:
                err = max(err, ERR_FLOOR)
                if err_prev is None:
                    fac = SAFETY * err ** (-1.0 / _K_EXP)
                else:
                    fac = SAFETY * err ** (-0.7 / _K_EXP) * err_prev ** (0.4 / _K_EXP)
                fac = min(FACTOR_MAX, max(FACTOR_MIN, fac))
                if rejected_last:
                    fac = min(fac, 1.0)
                err_prev = err
                h_prop = h * fac
            rejected_last = False
        else:
            stats.n_rejected += 1
            rejected_last = True
            h_prop = h * min(1.0, max(FACTOR_MIN, SAFETY * err ** (-1.0 / _K_EXP)))

    stats.wall_time = time.perf_counter() - clock
    return Trajectory(t_start, t_end, np.array(starts), np.array(widths),
                      np.array(values), np.array(dense), stats)


def dense_eval(traj: Trajectory, t: float) -> FloatArray:
    """Continuous interpolant value at t (module-level convenience)."""
    return traj.eval(t)


class CompositeTrajectory:
    """Trajectories of consecutive spans glued together (piecewise runs)."""

    def __init__(self, parts: Sequence[Trajectory]):
        if not parts:
            raise ValueError("need at least one trajectory")
        self.parts = list(parts)
        self.t_start = parts[0].t_start
        self.t_end = parts[-1].t_end
        self._bounds = np.array([p.t_end for p in parts])
        stats = SolverStats()
        for p in parts:
            stats = stats.merged_with(p.stats)
        self.stats = stats

    @property
    def y_end(self) -> FloatArray:
        return self.parts[-1].y_end

    def eval(self, t: float) -> FloatArray:
        idx = int(np.searchsorted(self._bounds, t, side="left"))
        idx = min(idx, len(self.parts) - 1)
        return self.parts[idx].eval(t)

    def eval_many(self, times: Sequence[float]) -> np.ndarray:
        return np.array([self.eval(t) for t in times])
