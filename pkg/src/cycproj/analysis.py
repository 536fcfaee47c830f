"""Empirical convergence-rate fitting and error-bound probing.

Rate fits are ordinary least squares in log space: log e_k against log k for
a power law, log e_k against k for a geometric law.  The probe samples a
neighborhood of a feasible point and fits the regularity inequality
``dist^theta(x, C) <= c (sum_i dist^theta(x, C_i))^tau`` to estimate tau
empirically, next to the worst-case theoretical exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import rates
from .engine import Trace, _run_steps
from .rates import IndexPartition, PowerLaw, RateClass
from .sets import (
    DEFAULT_TOL,
    CapabilityError,
    FeasibilityProblem,
    ProjectionTolerances,
    Singleton,
    as_vector,
    distance,
    residual,
    vdist,
)

ErrorSeq = Sequence[Tuple[int, float]]

MIN_FIT_POINTS = 20
_TIE_R2 = 1e-6


@dataclass(frozen=True)
class PowerFit:
    exponent: float
    r2: float


@dataclass(frozen=True)
class GeometricFit:
    ratio: float
    r2: float


@dataclass(frozen=True)
class RateReport:
    theoretical: RateClass
    power_fit: PowerFit
    geometric_fit: GeometricFit
    chosen: str  # "power" | "geometric"
    fit_window: Tuple[int, int]
    errors_used: str
    verdict: str  # "CONSISTENT" | "INCONSISTENT"

    @property
    def empirical_model(self):
        return self.power_fit if self.chosen == "power" else self.geometric_fit


def _ols(xs: List[float], ys: List[float]) -> Tuple[float, float, float]:
    """Least-squares slope, intercept and r^2 (r^2 = 1 for zero-variance ys)."""
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((a - mx) ** 2 for a in xs)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys))
    syy = math.fsum((b - my) ** 2 for b in ys)
    if sxx == 0.0:
        raise ValueError("degenerate fit: all abscissae identical")
    slope = sxy / sxx
    intercept = my - slope * mx
    r2 = 1.0 if syy == 0.0 else (sxy * sxy) / (sxx * syy)
    return slope, intercept, r2


def _window_points(errors: ErrorSeq, window: Tuple[int, int]) -> List[Tuple[int, float]]:
    lo, hi = window
    if lo > hi:
        raise ValueError(f"empty window {window}")
    pts = [(k, e) for k, e in errors if lo <= k <= hi]
    if len(pts) < MIN_FIT_POINTS:
        raise ValueError(
            f"window {window} holds {len(pts)} points; at least {MIN_FIT_POINTS} required"
        )
    for k, e in pts:
        if e <= 0.0:
            raise ValueError(f"nonpositive error {e} at k={k} inside the fit window")
    return pts


def fit_power_rate(errors: ErrorSeq, window: Tuple[int, int]) -> PowerFit:
    """Slope and r^2 of log e_k against log k over the window."""
    pts = _window_points(errors, window)
    slope, _, r2 = _ols([math.log(k) for k, _ in pts], [math.log(e) for _, e in pts])
    return PowerFit(exponent=slope, r2=r2)


def fit_geometric_rate(errors: ErrorSeq, window: Tuple[int, int]) -> GeometricFit:
    """exp(slope) and r^2 of log e_k against k over the window."""
    pts = _window_points(errors, window)
    slope, _, r2 = _ols([float(k) for k, _ in pts], [math.log(e) for _, e in pts])
    return GeometricFit(ratio=math.exp(slope), r2=r2)


def classify_rate(errors: ErrorSeq, window: Tuple[int, int]):
    """The better-fitting of the two models; near-ties go to geometric, the
    stronger claim."""
    pf = fit_power_rate(errors, window)
    gf = fit_geometric_rate(errors, window)
    if gf.r2 >= pf.r2 - _TIE_R2:
        return gf
    return pf


def default_fit_window(errors: ErrorSeq, noise_floor: float = 0.0) -> Tuple[int, int]:
    """Last 80% of the recorded steps whose error exceeds 10x the noise floor."""
    ks = [k for k, e in errors if e > 10.0 * noise_floor]
    if not ks:
        raise ValueError("no points above the noise floor")
    lo = ks[max(0, int(math.ceil(len(ks) * 0.2)) - 1)]
    return (lo, ks[-1])


_POWER_SLACK = 0.05


def compare_with_theory(
    errors: ErrorSeq,
    n: int,
    d: int,
    window: Optional[Tuple[int, int]] = None,
    errors_used: str = "unspecified",
    noise_floor: float = 0.0,
) -> RateReport:
    """Fit both empirical models and compare against the guaranteed class.

    CONSISTENT means the observed decay is at least as fast as the guarantee:
    a fitted power exponent <= -rho + 0.05, or any genuinely decaying
    geometric fit (which beats every power law).
    """
    if window is None:
        window = default_fit_window(errors, noise_floor)
    theoretical = rates.cyclic_rate(n, d)
    pf = fit_power_rate(errors, window)
    gf = fit_geometric_rate(errors, window)
    chosen = "geometric" if gf.r2 >= pf.r2 - _TIE_R2 else "power"
    if isinstance(theoretical, PowerLaw):
        if chosen == "geometric":
            consistent = gf.ratio < 1.0
        else:
            consistent = pf.exponent <= -theoretical.rho + _POWER_SLACK
    else:
        consistent = chosen == "geometric" and gf.ratio < 1.0
    return RateReport(
        theoretical=theoretical,
        power_fit=pf,
        geometric_fit=gf,
        chosen=chosen,
        fit_window=window,
        errors_used=errors_used,
        verdict="CONSISTENT" if consistent else "INCONSISTENT",
    )


def trace_error_sequence(
    trace: Trace,
    limit: Optional[Sequence[float]] = None,
) -> List[Tuple[int, float]]:
    """(k, e_k) pairs from a trace: distance to the problem's singleton oracle
    when available, else to ``limit`` (default: the last recorded iterate)."""
    oracle = trace.problem.intersection_oracle
    if limit is None and isinstance(oracle, Singleton):
        target = oracle.point
    elif limit is not None:
        target = as_vector(limit)
    else:
        target = trace.last_iterate()
    return [(k, vdist(x, target)) for k, x in zip(trace.ks, trace.iterates)]


# ---------------------------------------------------------------------------
# error-bound probe


@dataclass(frozen=True)
class ErrorBoundReport:
    """Sampled regularity of an intersection around a feasible center.

    ``violations_at_theoretical_tau`` counts samples violating the inequality
    with unit constant at the theoretical exponent; ``best_constant`` is the
    smallest constant that repairs them all.
    """

    theta: float
    theoretical_tau: float
    fitted_tau: float
    fitted_log_c: float
    r2: float
    sample_count: int
    samples_used: int
    radius: float
    seed: int
    violations_at_theoretical_tau: int
    best_constant: float
    heuristic_distances: bool


_PROBE_FEAS_TOL = 1e-8
_CERT_TOL = 1e-8
_REFINE_SWEEPS = 2000


def _dist_to_intersection(
    problem: FeasibilityProblem,
    x,
    tol: ProjectionTolerances,
) -> Tuple[float, bool]:
    """dist(x, C): exact via the oracle, else via long cyclic refinement.

    The refined value carries a heuristic flag; it is accepted only when the
    refined point is itself within 1e-8 of every set (summed), otherwise the
    distance cannot be certified and a CapabilityError is raised.
    """
    oracle = problem.intersection_oracle
    if oracle is not None:
        return oracle.distance(x), False
    m = len(problem.sets)
    _, xhat = _run_steps(
        problem,
        as_vector(x),
        order=lambda k: k % m,
        max_steps=_REFINE_SWEEPS * m,
        tol=tol,
        record_cap=1,
        stop_after_sweep=tol.optimality * 1e-2,
    )
    surrogate = 0.0
    for s in problem.sets:
        surrogate += distance(s, xhat, tol)
    if surrogate > _CERT_TOL:
        raise CapabilityError(
            "distance to the intersection could not be certified; provide an oracle"
        )
    return vdist(x, xhat), True


def error_bound_probe(
    problem: FeasibilityProblem,
    xbar: Sequence[float],
    theta: float,
    n_samples: int,
    radius: float,
    seed: int,
    tol: ProjectionTolerances = DEFAULT_TOL,
) -> ErrorBoundReport:
    """Sample the ball around ``xbar`` and fit the regularity exponent.

    For each sample x, L = dist(x, C) and R = sum_i dist^theta(x, C_i); the
    fitted tau is the log-log slope of L^theta against R.  Samples with
    L = 0 or R = 0 enter the counts but not the fit.
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    xbar = as_vector(xbar)
    for s in problem.sets:
        if residual(s, xbar) > _PROBE_FEAS_TOL:
            raise ValueError(f"center is infeasible for set {s.name!r}")
    n = problem.dimension
    rng = np.random.default_rng(seed)
    tau_theory = rates.holder_exponent_tau(n, problem.max_degree)
    log_l: List[float] = []
    log_r: List[float] = []
    violations = 0
    best_c = 0.0
    heuristic = False
    drawn = 0
    while drawn < n_samples:
        cand = rng.uniform(-1.0, 1.0, size=n)
        nrm2 = float(np.dot(cand, cand))
        if nrm2 > 1.0:
            continue
        drawn += 1
        x = tuple(xi + radius * ci for xi, ci in zip(xbar, cand))
        dist_c, heur = _dist_to_intersection(problem, x, tol)
        heuristic = heuristic or heur
        r_sum = 0.0
        for s in problem.sets:
            r_sum += distance(s, x, tol) ** theta
        l_theta = dist_c**theta
        if r_sum > 0.0:
            ratio = l_theta / r_sum**tau_theory
            if ratio > best_c:
                best_c = ratio
            if ratio > 1.0:
                violations += 1
        if dist_c > 0.0 and r_sum > 0.0:
            log_l.append(theta * math.log(dist_c))
            log_r.append(math.log(r_sum))
    if len(log_l) < 2:
        raise CapabilityError("too few informative samples to fit an exponent")
    slope, intercept, r2 = _ols(log_r, log_l)
    return ErrorBoundReport(
        theta=theta,
        theoretical_tau=tau_theory,
        fitted_tau=slope,
        fitted_log_c=intercept,
        r2=r2,
        sample_count=n_samples,
        samples_used=len(log_l),
        radius=radius,
        seed=seed,
        violations_at_theoretical_tau=violations,
        best_constant=best_c,
        heuristic_distances=heuristic,
    )


def error_bound_exponent_on_curve(
    problem: FeasibilityProblem,
    curve: Callable[[float], Sequence[float]],
    ts: Sequence[float],
    tol: ProjectionTolerances = DEFAULT_TOL,
) -> Tuple[float, float]:
    """Fitted exponent of dist(x(t), C) against the pooled constraint residual
    max_i [g_i(x(t))]_+ along a parametrized curve; needs a singleton oracle.
    """
    oracle = problem.intersection_oracle
    if not isinstance(oracle, Singleton):
        raise CapabilityError("curve-mode fit needs a singleton intersection oracle")
    log_r: List[float] = []
    log_d: List[float] = []
    for t in ts:
        x = as_vector(curve(t))
        r = max(residual(s, x) for s in problem.sets)
        dd = oracle.distance(x)
        if r > 0.0 and dd > 0.0:
            log_r.append(math.log(r))
            log_d.append(math.log(dd))
    if len(log_r) < 2:
        raise ValueError("curve produced fewer than 2 informative points")
    slope, _, r2 = _ols(log_r, log_d)
    return slope, r2


# ---------------------------------------------------------------------------
# index partition


_PARTITION_ZERO_TOL = 1e-8


def estimate_index_partition(
    problem: FeasibilityProblem,
    oracle_samples: Sequence[Sequence[float]],
) -> IndexPartition:
    """Sample-based split of the flattened constraint list: index i lands in
    j0 when |g_i| <= 1e-8 at every sample.  Heuristic by construction."""
    samples = [as_vector(p) for p in oracle_samples]
    if not samples:
        raise ValueError("at least one feasible sample is required")
    for p in samples:
        for s in problem.sets:
            if residual(s, p) > _PROBE_FEAS_TOL:
                raise ValueError(f"sample {p} is infeasible for set {s.name!r}")
    flat = [g for s in problem.sets for g in s.constraints]
    j0 = set()
    for i, g in enumerate(flat):
        if all(abs(g.evaluate(p)) <= _PARTITION_ZERO_TOL for p in samples):
            j0.add(i)
    j1 = set(range(len(flat))) - j0
    return IndexPartition(j0=frozenset(j0), j1=frozenset(j1))
