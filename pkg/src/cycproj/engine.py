"""Cyclic and two-set alternating projection drivers, plus trace diagnostics.

A run produces a :class:`Trace` holding every recorded projection step: the
post-step iterate, the index of the set projected onto, the residual of that
set at the pre-step point, and the step norm.  Long runs switch to thinned
recording (dense head, then geometrically spaced checkpoints).  Runs are
strictly sequential and deterministic; traces are immutable once returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from .sets import (
    DEFAULT_TOL,
    CapabilityError,
    ConvexSetDescriptor,
    FeasibilityProblem,
    ProjectionError,
    ProjectionTolerances,
    Singleton,
    Vector,
    as_vector,
    project,
    residual,
    vdist,
    vsub,
)

RECORD_CAP_DEFAULT = 10**6
_DENSE_HEAD = 10**4
_THIN_GROWTH = 1.05


class ProjectionStepError(RuntimeError):
    """A projection solve failed mid-run; carries the step context and the
    partial trace accumulated so far."""

    def __init__(self, message, step_index, set_index, partial_trace, cause):
        super().__init__(message)
        self.step_index = step_index
        self.set_index = set_index
        self.partial_trace = partial_trace
        self.cause = cause


@dataclass(frozen=True)
class LimitEstimate:
    point: Vector
    radius: float
    certified: bool


@dataclass
class Trace:
    """Recorded history of one projection run.

    ``ks`` are the recorded step indices (k >= 1, strictly increasing); the
    parallel lists hold the iterate reached at step k, the set projected
    onto, the residual of that set before the step, and the step norm.
    ``x0`` is the starting point (step 0).
    """

    problem: FeasibilityProblem
    x0: Vector
    ks: List[int]
    iterates: List[Vector]
    set_indices: List[int]
    residuals_before: List[float]
    step_norms: List[float]
    sets_per_sweep: int
    total_steps: int
    thinned: bool
    limit_estimate: Optional[LimitEstimate] = None

    def last_iterate(self) -> Vector:
        return self.iterates[-1] if self.iterates else self.x0

    def iterate_at(self, k: int) -> Vector:
        if k == 0:
            return self.x0
        i = self.ks.index(k)
        return self.iterates[i]

    def recorded(self):
        """(k, x_k) pairs including the start point."""
        yield 0, self.x0
        for k, x in zip(self.ks, self.iterates):
            yield k, x

    def sweep_points(self):
        """Recorded iterates at sweep boundaries (k multiple of m), start included."""
        m = self.sets_per_sweep
        out = [(0, self.x0)]
        for k, x in zip(self.ks, self.iterates):
            if k % m == 0:
                out.append((k, x))
        return out


class _Recorder:
    """Decides which step indices are kept. Dense up to the cap; beyond it a
    dense head plus checkpoints at rounded powers of 1.05."""

    def __init__(self, budget: int, cap: int):
        self.dense = budget <= cap
        self.next_cp = _DENSE_HEAD + 1
        self.level = math.log(_DENSE_HEAD + 1) / math.log(_THIN_GROWTH)

    def want(self, k: int) -> bool:
        if self.dense or k <= _DENSE_HEAD:
            return True
        if k < self.next_cp:
            return False
        while self.next_cp <= k:
            self.level += 1.0
            self.next_cp = max(self.next_cp + 1, round(_THIN_GROWTH**self.level))
        return True


def _run_steps(
    problem: FeasibilityProblem,
    x0: Vector,
    order: Callable[[int], int],
    max_steps: int,
    tol: ProjectionTolerances,
    record_cap: int,
    stop_after_sweep: Optional[float],
    on_step: Optional[Callable[[int, Vector], None]] = None,
    stop_check: Optional[Callable[[], bool]] = None,
):
    """Shared driver: at step k+1 project the current point onto
    problem.sets[order(k)].  Stops on the sweep-displacement rule when
    ``stop_after_sweep`` is given; ``stop_check`` is consulted at sweep ends."""
    m = len(problem.sets)
    rec = _Recorder(max_steps, record_cap)
    x = x0
    ks: List[int] = []
    iterates: List[Vector] = []
    set_indices: List[int] = []
    residuals_before: List[float] = []
    step_norms: List[float] = []
    thinned = not rec.dense

    def make_trace(total):
        return Trace(
            problem=problem,
            x0=x0,
            ks=ks,
            iterates=iterates,
            set_indices=set_indices,
            residuals_before=residuals_before,
            step_norms=step_norms,
            sets_per_sweep=m,
            total_steps=total,
            thinned=thinned,
        )

    k = 0
    sweep_moved = 0.0
    while k < max_steps:
        idx = order(k)
        s = problem.sets[idx]
        rb = residual(s, x)
        try:
            y = project(s, x, tol)
        except ProjectionError as exc:
            raise ProjectionStepError(
                f"projection onto set {idx} ({s.name!r}) failed at step {k + 1}: {exc}",
                step_index=k + 1,
                set_index=idx,
                partial_trace=make_trace(k),
                cause=exc,
            ) from exc
        if residual(s, y) > tol.feasibility:
            raise ProjectionStepError(
                f"post-projection iterate violates set {idx} ({s.name!r}) "
                f"beyond tolerance at step {k + 1}",
                step_index=k + 1,
                set_index=idx,
                partial_trace=make_trace(k),
                cause=None,
            )
        sn = vdist(y, x)
        k += 1
        if rec.want(k):
            ks.append(k)
            iterates.append(y)
            set_indices.append(idx)
            residuals_before.append(rb)
            step_norms.append(sn)
        x = y
        if on_step is not None:
            on_step(k, x)
        sweep_moved += sn
        if k % m == 0:
            if stop_after_sweep is not None and sweep_moved < stop_after_sweep:
                break
            if stop_check is not None and stop_check():
                break
            sweep_moved = 0.0
    return make_trace(k), x


def cyclic_project(
    problem: FeasibilityProblem,
    x0: Sequence[float],
    max_sweeps: int,
    stop_tol: float,
    tol: ProjectionTolerances = DEFAULT_TOL,
    record_cap: int = RECORD_CAP_DEFAULT,
) -> Trace:
    """Run cyclic projections P_1, P_2, ..., P_m, P_1, ... from ``x0``.

    Stops when a full sweep moves less than ``stop_tol`` in total, or after
    ``max_sweeps`` sweeps.  The intersection is assumed non-empty (oracle
    set, or asserted by the caller).
    """
    if stop_tol <= 0.0:
        raise ValueError("stop_tol must be positive")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    x0 = as_vector(x0)
    if len(x0) != problem.dimension:
        raise ValueError(f"x0 length {len(x0)} != dimension {problem.dimension}")
    m = len(problem.sets)
    trace, _ = _run_steps(
        problem,
        x0,
        order=lambda k: k % m,
        max_steps=max_sweeps * m,
        tol=tol,
        record_cap=record_cap,
        stop_after_sweep=stop_tol,
    )
    return trace


@dataclass
class AlternatingResult:
    """Paired output of the two-set alternating driver.

    ``a_trace``/``b_trace`` are views of the combined run restricted to the
    A-iterates (odd combined steps) and B-iterates (even combined steps);
    ``combined`` is the full per-projection trace.  ``gap_vector`` is
    b_K - a_K at the final recorded pair, an estimate of the translation
    between the two limits (its norm estimates dist(A, B), which is attained
    for these sets).
    """

    a_trace: Trace
    b_trace: Trace
    combined: Trace
    gap_vector: Vector
    limits: Tuple[Vector, Vector]

    @property
    def gap_norm(self) -> float:
        s = 0.0
        for v in self.gap_vector:
            s += v * v
        return math.sqrt(s)


def _subtrace(combined: Trace, parity: int) -> Trace:
    sel = [i for i, k in enumerate(combined.ks) if k % 2 == parity]
    return Trace(
        problem=combined.problem,
        x0=combined.x0,
        ks=[combined.ks[i] for i in sel],
        iterates=[combined.iterates[i] for i in sel],
        set_indices=[combined.set_indices[i] for i in sel],
        residuals_before=[combined.residuals_before[i] for i in sel],
        step_norms=[combined.step_norms[i] for i in sel],
        sets_per_sweep=combined.sets_per_sweep,
        total_steps=combined.total_steps,
        thinned=combined.thinned,
    )


def alternating_project(
    A: ConvexSetDescriptor,
    B: ConvexSetDescriptor,
    b0: Sequence[float],
    max_iters: int,
    stop_tol: float,
    tol: ProjectionTolerances = DEFAULT_TOL,
    record_cap: int = RECORD_CAP_DEFAULT,
    oracle=None,
) -> AlternatingResult:
    """Alternate a_{k+1} = P_A(b_k), b_{k+1} = P_B(a_{k+1}) from ``b0``.

    A and B may have empty intersection.  Stops when
    ||a_{k+1} - a_k|| + ||b_{k+1} - b_k|| < stop_tol, or after ``max_iters``
    pairs.  An exact oracle for A `intersect` B, when known, is attached to
    the traces so downstream error sequences use true distances.
    """
    if stop_tol <= 0.0:
        raise ValueError("stop_tol must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    b0 = as_vector(b0)
    problem = FeasibilityProblem(A.dimension, (A, B), intersection_oracle=oracle)
    state = {"a_prev": None, "b_prev": None, "a": None, "b": None, "stop": False}

    def on_step(k: int, x: Vector):
        if k % 2 == 1:
            state["a_prev"] = state["a"]
            state["a"] = x
        else:
            state["b_prev"] = state["b"]
            state["b"] = x
            if state["a_prev"] is not None and state["b_prev"] is not None:
                moved = vdist(state["a"], state["a_prev"]) + vdist(state["b"], state["b_prev"])
                if moved < stop_tol:
                    state["stop"] = True

    combined, _ = _run_steps(
        problem,
        b0,
        order=lambda k: k % 2,
        max_steps=max_iters * 2,
        tol=tol,
        record_cap=record_cap,
        stop_after_sweep=None,
        on_step=on_step,
        stop_check=lambda: state["stop"],
    )
    a_last = state["a"]
    b_last = state["b"]
    gap = vsub(b_last, a_last)
    return AlternatingResult(
        a_trace=_subtrace(combined, 1),
        b_trace=_subtrace(combined, 0),
        combined=combined,
        gap_vector=gap,
        limits=(a_last, b_last),
    )


def estimate_limit(
    trace: Trace,
    problem: FeasibilityProblem,
    refine_sweeps: int,
    tol: ProjectionTolerances = DEFAULT_TOL,
) -> LimitEstimate:
    """Estimate the run's limit point with a radius bound.

    With a singleton oracle the answer is exact.  Otherwise the last iterate
    is refined by ``refine_sweeps`` extra sweeps; the radius is twice the
    distance to the intersection when computable exactly (segment oracle),
    else twice the sum of per-set distances, flagged as uncertified.
    """
    oracle = problem.intersection_oracle
    if isinstance(oracle, Singleton):
        return LimitEstimate(point=oracle.point, radius=0.0, certified=True)
    x = trace.last_iterate()
    if refine_sweeps > 0:
        m = len(problem.sets)
        _, x = _run_steps(
            problem,
            x,
            order=lambda k: k % m,
            max_steps=refine_sweeps * m,
            tol=tol,
            record_cap=1,  # thinned recording; only the final point is used
            stop_after_sweep=None,
        )
    if oracle is not None:
        return LimitEstimate(point=x, radius=2.0 * oracle.distance(x), certified=True)
    from .sets import distance as set_distance

    surrogate = 0.0
    for s in problem.sets:
        surrogate += set_distance(s, x, tol)
    return LimitEstimate(point=x, radius=2.0 * surrogate, certified=False)


@dataclass(frozen=True)
class FejerReport:
    violations: List[Tuple[int, int]]  # (step index k, witness index)
    pairs_checked: int


_WITNESS_FEAS_TOL = 1e-8
_FEJER_SLACK = 1e-9


def check_fejer(trace: Trace, witnesses: Sequence[Sequence[float]]) -> FejerReport:
    """Verify distance monotonicity to each witness at recorded sweep ends.

    Every witness must be feasible for all of the trace's sets (residual
    <= 1e-8).  A pair (k, w) is reported when the distance to witness w
    increased by more than 1e-9 between consecutive recorded sweep ends.
    """
    ws = [as_vector(w) for w in witnesses]
    for i, w in enumerate(ws):
        for s in trace.problem.sets:
            if residual(s, w) > _WITNESS_FEAS_TOL:
                raise ValueError(f"witness {i} is infeasible for set {s.name!r}")
    points = trace.sweep_points()
    violations = []
    pairs = 0
    for (k_prev, x_prev), (k_next, x_next) in zip(points, points[1:]):
        for i, w in enumerate(ws):
            pairs += 1
            if vdist(x_next, w) > vdist(x_prev, w) + _FEJER_SLACK:
                violations.append((k_next, i))
    return FejerReport(violations=violations, pairs_checked=pairs)


@dataclass(frozen=True)
class DescentReport:
    min_slack: float
    violations: List[Tuple[int, float]]
    steps_checked: int


_DESCENT_SLACK = -1e-8


def check_descent_inequality(trace: Trace, problem: FeasibilityProblem) -> DescentReport:
    """Check dist^2(x_k, C) - dist^2(x_{k+1}, C) >= ||x_{k+1} - x_k||^2 on the
    recorded consecutive steps, using the problem's exact intersection oracle.
    """
    oracle = problem.intersection_oracle
    if oracle is None:
        raise CapabilityError("descent check needs an intersection oracle")
    pairs = []
    if trace.ks and trace.ks[0] == 1:
        pairs.append((trace.x0, trace.iterates[0], trace.step_norms[0], 1))
    for i in range(len(trace.ks) - 1):
        if trace.ks[i + 1] == trace.ks[i] + 1:
            pairs.append(
                (trace.iterates[i], trace.iterates[i + 1], trace.step_norms[i + 1], trace.ks[i + 1])
            )
    min_slack = math.inf
    violations = []
    for x_prev, x_next, sn, k in pairs:
        d_prev = oracle.distance(x_prev)
        d_next = oracle.distance(x_next)
        slack = (d_prev * d_prev - d_next * d_next) - sn * sn
        if slack < min_slack:
            min_slack = slack
        if slack < _DESCENT_SLACK:
            violations.append((k, slack))
    if not pairs:
        min_slack = 0.0
    return DescentReport(min_slack=min_slack, violations=violations, steps_checked=len(pairs))
