"""Error metric, convergence/efficiency studies and the projection check.

The accuracy measure is the relative L2 error between a computed voltage
trace and the closed-form reference, both sampled on the same midpoint
grid (the quadrature weights cancel, so the metric reduces to a ratio of
discrete 2-norms).  Studies drive the multirate solver and the
conventional segment-wise time stepper over a parameter sweep and report
accuracy together with solver work.  The projection utilities quantify
how well the duty-cycle-aware basis can represent a 3-level pulse, which
it provably cannot do beyond a fixed residual.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .analytic import AnalyticSolution
from .basis import BasisFamily, BasisSet, build_fe_nodal, build_pwm
from .circuit import CircuitModel
from .errors import DomainError, GridMismatchError, ZeroReferenceError
from .galerkin import solve_multirate
from .piecewise import PiecewisePolynomial, product_integral_exact
from .radau import CompositeTrajectory, EventGrid, SolverConfig, integrate


def relative_l2_error(test: np.ndarray, reference: np.ndarray) -> float:
    """||test - reference|| / ||reference|| on a shared midpoint grid."""
    test = np.asarray(test, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if test.shape != reference.shape:
        raise GridMismatchError(
            f"series shapes differ: {test.shape} vs {reference.shape}")
    ref_norm = float(np.sqrt(np.sum(reference ** 2)))
    if ref_norm == 0.0:
        raise ZeroReferenceError("reference series is identically zero")
    return float(np.sqrt(np.sum((test - reference) ** 2))) / ref_norm


@dataclass(frozen=True)
class ErrorReport:
    """Accuracy and cost of one solver configuration."""

    method: str                    # "mpde-pwm" | "mpde-fe" | "timestep"
    family: Optional[str]
    np_index: Optional[int]
    reltol: float
    epsilon: float
    n_steps: int
    n_rhs_evaluations: int
    wall_time_solve: float
    wall_time_reconstruct: float


def build_basis(family: BasisFamily, np_index: int, duty: float) -> BasisSet:
    if family == BasisFamily.PWM:
        return build_pwm(np_index, duty)
    return build_fe_nodal(np_index, duty)


def baseline_timestep(circuit: CircuitModel, t_end: float, reltol: float,
                      abstol: float = 1e-10) -> CompositeTrajectory:
    """Integrate the original switched system segment by segment.

    Each excitation segment has a constant right-hand side; step endpoints
    are clamped onto the switching grid so no accepted step straddles a
    jump.  The first segment starts from Ts / 100 and later segments
    continue with the controller's last step size.
    """
    ts = circuit.period
    grid = EventGrid.switching(ts, circuit.duty)
    bounds = [0.0]
    t = 0.0
    while True:
        nxt = grid.next_after(t)
        if nxt >= t_end - 1e-12 * ts:
            break
        bounds.append(nxt)
        t = nxt
    bounds.append(t_end)

    parts = []
    y = circuit.x0
    h0 = ts / 100.0
    for lo, hi in zip(bounds, bounds[1:]):
        level = circuit.excitation(0.5 * (lo + hi))
        config = SolverConfig(reltol=reltol, abstol=abstol,
                              initial_step=min(h0, hi - lo),
                              discontinuity_times=grid)
        traj = integrate(circuit.a, circuit.b, level, y, (lo, hi), config)
        parts.append(traj)
        y = traj.y_end
        if len(traj.widths):
            h0 = float(traj.widths[-1])
    return CompositeTrajectory(parts)


def _mpde_case(circuit: CircuitModel, family: BasisFamily, np_index: int,
               reltol: float, abstol: float, t_end: float,
               samples_per_period: int, reference: np.ndarray,
               error_state: int) -> ErrorReport:
    basis = build_basis(family, np_index, circuit.duty)
    solution = solve_multirate(circuit, basis, t_end, reltol, abstol)
    clock = time.perf_counter()
    _, values = solution.reconstruct_grid(samples_per_period, t_end)
    wall_reconstruct = time.perf_counter() - clock
    eps = relative_l2_error(values[:, error_state], reference[:, error_state])
    stats = solution.trajectory.stats
    return ErrorReport(
        method=f"mpde-{family.value}", family=family.value, np_index=np_index,
        reltol=reltol, epsilon=eps, n_steps=stats.n_steps,
        n_rhs_evaluations=stats.n_rhs_evaluations,
        wall_time_solve=stats.wall_time,
        wall_time_reconstruct=wall_reconstruct)


def midpoint_grid(circuit: CircuitModel, t_end: float,
                  samples_per_period: int) -> np.ndarray:
    """Sample times at the centers of uniform subintervals of the period."""
    dt = circuit.period / samples_per_period
    n = int(np.floor(t_end / dt + 1e-9))
    return (np.arange(n) + 0.5) * dt


def _timestep_case(circuit: CircuitModel, reltol: float, abstol: float,
                   t_end: float, samples_per_period: int,
                   reference: np.ndarray, error_state: int,
                   timing_runs: int = 1) -> ErrorReport:
    walls = []
    traj = None
    for _ in range(max(timing_runs, 1)):
        traj = baseline_timestep(circuit, t_end, reltol, abstol)
        walls.append(traj.stats.wall_time)
    times = midpoint_grid(circuit, t_end, samples_per_period)
    clock = time.perf_counter()
    values = traj.eval_many(times)
    wall_reconstruct = time.perf_counter() - clock
    eps = relative_l2_error(values[:, error_state], reference[:, error_state])
    return ErrorReport(
        method="timestep", family=None, np_index=None, reltol=reltol,
        epsilon=eps, n_steps=traj.stats.n_steps,
        n_rhs_evaluations=traj.stats.n_rhs_evaluations,
        wall_time_solve=float(np.median(walls)),
        wall_time_reconstruct=wall_reconstruct)


def convergence_study(circuit: CircuitModel, family: BasisFamily,
                      np_list: Sequence[int], reltol: float = 1e-6,
                      abstol: float = 1e-10, t_end: float = 10e-3,
                      samples_per_period: int = 500,
                      error_state: Optional[int] = None,
                      parallel: int = 1) -> list[ErrorReport]:
    """One ErrorReport per basis count, against the analytic reference.

    The error is restricted to a single state, by default the last one
    (the output voltage of the converter models).
    """
    state = circuit.ns - 1 if error_state is None else error_state
    _, reference = AnalyticSolution(circuit).sample(t_end, samples_per_period)

    def run(np_index: int) -> ErrorReport:
        return _mpde_case(circuit, family, np_index, reltol, abstol, t_end,
                          samples_per_period, reference, state)

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(run, np_list))
    return [run(n) for n in np_list]


@dataclass(frozen=True)
class EfficiencyCase:
    """One column of the work-precision comparison."""

    method: str                    # "timestep" | "mpde-pwm" | "mpde-fe"
    reltol: float
    np_index: Optional[int] = None


def efficiency_study(circuit: CircuitModel, cases: Sequence[EfficiencyCase],
                     t_end: float = 10e-3, samples_per_period: int = 500,
                     abstol: float = 1e-10, error_state: Optional[int] = None,
                     timing_runs: int = 3, parallel: int = 1
                     ) -> list[ErrorReport]:
    """Accuracy versus work for a mix of solver configurations.

    Solve timings are the median over ``timing_runs`` repetitions;
    reconstruction time is reported separately and excluded from the
    solve figure.
    """
    state = circuit.ns - 1 if error_state is None else error_state
    _, reference = AnalyticSolution(circuit).sample(t_end, samples_per_period)

    def run(case: EfficiencyCase) -> ErrorReport:
        if case.method == "timestep":
            return _timestep_case(circuit, case.reltol, abstol, t_end,
                                  samples_per_period, reference, state,
                                  timing_runs)
        family = BasisFamily.PWM if case.method.endswith("pwm") else BasisFamily.FE_NODAL
        walls = []
        report = None
        for _ in range(max(timing_runs, 1)):
            report = _mpde_case(circuit, family, case.np_index, case.reltol,
                                abstol, t_end, samples_per_period, reference,
                                state)
            walls.append(report.wall_time_solve)
        return replace(report, wall_time_solve=float(np.median(walls)))

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(run, cases))
    return [run(c) for c in cases]


# -- 3-level projection counterexample ---------------------------------------


def three_level_signal() -> PiecewisePolynomial:
    """Pulse with levels +1, 0, -1 on the breakpoints {0, 1/4, 3/4, 1}."""
    bps = (Fraction(0), Fraction(1, 4), Fraction(3, 4), Fraction(1))
    return PiecewisePolynomial(bps, ((Fraction(1),), (Fraction(0),),
                                     (Fraction(-1),)))


@dataclass(frozen=True)
class ProjectionResult:
    """L2 projection of a signal onto an orthonormal basis.

    ``projection`` is the exact rational combination sum_k a_k p_k on the
    merged breakpoint grid, so residual identities can be verified to
    machine precision.
    """

    coefficients: np.ndarray
    residual: float
    signal: PiecewisePolynomial
    projection: PiecewisePolynomial


def l2_project(signal: PiecewisePolynomial, basis: BasisSet) -> ProjectionResult:
    """Project the signal onto the orthonormal duty-cycle basis.

    Restricted to the PWM family with duty cycle 1/2 (the setting of the
    non-spanning counterexample); coefficients are a_k = <signal, p_k>
    computed exactly.
    """
    if basis.family != BasisFamily.PWM:
        raise DomainError("projection requires the orthonormal PWM family")
    if basis.duty_exact != Fraction(1, 2):
        raise DomainError("projection counterexample is defined for duty 1/2")
    merged = tuple(sorted(set(signal.breakpoints)
                          | set(basis.functions[0].breakpoints)))
    sig = signal.resegmented(merged)
    proj = PiecewisePolynomial.zero(merged)
    coeffs = []
    for k in basis.retained:
        f = basis.functions[k]
        inner_exact = product_integral_exact(sig, f)          # scale-free part
        norm_exact = product_integral_exact(f, f)             # 1 / scale^2
        coeffs.append(f.scale * float(inner_exact) * sig.scale)
        # a_k p_k = (<g, q_k> / <q_k, q_k>) q_k stays rational
        rational_part = PiecewisePolynomial(merged, f.resegmented(merged).coeffs)
        proj = proj.combine(-inner_exact / norm_exact, rational_part)
    diff = sig.combine(Fraction(1), proj)
    residual2 = product_integral_exact(diff, diff)
    return ProjectionResult(np.array(coeffs), float(np.sqrt(float(residual2))),
                            sig, proj)


def projection_residuals(np_max: int) -> list[float]:
    """Residual norm of the 3-level projection for every count 0..np_max."""
    signal = three_level_signal()
    basis = build_pwm(np_max, 0.5)
    merged = tuple(sorted(set(signal.breakpoints)
                          | set(basis.functions[0].breakpoints)))
    sig = signal.resegmented(merged)
    total = product_integral_exact(sig, sig)   # ||g||^2 exactly
    residuals = []
    acc = Fraction(0)
    for k in basis.retained:
        f = basis.functions[k]
        inner_exact = product_integral_exact(sig, f)
        norm_exact = product_integral_exact(f, f)
        acc += inner_exact * inner_exact / norm_exact   # a_k^2 exactly
        residuals.append(float(np.sqrt(float(total - acc))))
    return residuals
