"""Basic semi-algebraic convex set descriptors and Euclidean projectors.

A set is described by convex polynomial constraints ``g_j(x) <= 0``.  The
projector dispatches, in order:

  (a) feasible input          -> returned unchanged,
  (b) halfspace analytic hint -> closed form,
  (c) ball analytic hint      -> closed form,
  (d) one active constraint   -> damped Newton on the KKT system,
  (e) anything else           -> quadratic-penalty continuation with
                                 gradient-descent inner solves.

A power-epigraph hint documents and validates the set's shape but does not
add a dispatch branch; such sets go through (d)/(e) like any other smooth
constraint.  All vectors are plain tuples of floats and every path is
deterministic, so identical inputs give bitwise identical projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .poly import Polynomial

Vector = Tuple[float, ...]


# ---------------------------------------------------------------------------
# errors


class ProjectionError(RuntimeError):
    """Projection solver failed within its iteration budget.

    Carries the best iterate found and its residuals.
    """

    def __init__(self, message, best=None, feasibility=None, optimality=None):
        super().__init__(message)
        self.best = best
        self.feasibility = feasibility
        self.optimality = optimality


class NumericalError(ProjectionError):
    """A NaN/Inf appeared during the solve."""


class CapabilityError(RuntimeError):
    """The requested check needs an exact intersection oracle that is absent."""


# ---------------------------------------------------------------------------
# small vector helpers (tuples in, tuples out; deterministic accumulation)


def vsub(a: Sequence[float], b: Sequence[float]) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def vdot(a: Sequence[float], b: Sequence[float]) -> float:
    s = 0.0
    for x, y in zip(a, b):
        s += x * y
    return s


def vnorm(a: Sequence[float]) -> float:
    s = 0.0
    for x in a:
        s += x * x
    return math.sqrt(s)


def vdist(a: Sequence[float], b: Sequence[float]) -> float:
    s = 0.0
    for x, y in zip(a, b):
        d = x - y
        s += d * d
    return math.sqrt(s)


def as_vector(x: Sequence[float]) -> Vector:
    return tuple(float(v) for v in x)


# ---------------------------------------------------------------------------
# analytic hints


@dataclass(frozen=True)
class Halfspace:
    """{x : <a, x> <= b}"""

    a: Vector
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", as_vector(self.a))
        object.__setattr__(self, "b", float(self.b))
        if vnorm(self.a) == 0.0:
            raise ValueError("halfspace normal must be nonzero")

    def residual(self, x: Sequence[float]) -> float:
        return max(vdot(self.a, x) - self.b, 0.0)


@dataclass(frozen=True)
class Ball:
    """{x : ||x - center||^2 <= radius^2}"""

    center: Vector
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0.0:
            raise ValueError("ball radius must be positive")

    def residual(self, x: Sequence[float]) -> float:
        # squared form, so it matches the polynomial constraint exactly
        d2 = 0.0
        for xi, ci in zip(x, self.center):
            d2 += (xi - ci) * (xi - ci)
        return max(d2 - self.radius * self.radius, 0.0)


@dataclass(frozen=True)
class PowerEpigraph:
    """{(x, y) : y^degree <= x} in the first two coordinates; degree even."""

    degree: int

    def __post_init__(self):
        d = int(self.degree)
        if d < 2 or d % 2:
            raise ValueError("power epigraph degree must be even and >= 2")
        object.__setattr__(self, "degree", d)

    def residual(self, x: Sequence[float]) -> float:
        return max(x[1] ** self.degree - x[0], 0.0)


AnalyticHint = Union[Halfspace, Ball, PowerEpigraph]


# ---------------------------------------------------------------------------
# tolerances


@dataclass(frozen=True)
class ProjectionTolerances:
    feasibility: float = 1e-10
    optimality: float = 1e-10
    newton_max_iter: int = 100
    penalty_mu_max: float = 1e12
    penalty_inner_max_iter: int = 4000

    def __post_init__(self):
        if self.feasibility <= 0.0 or self.optimality <= 0.0:
            raise ValueError("tolerances must be positive")


DEFAULT_TOL = ProjectionTolerances()

_HINT_CHECK_POINTS = 100
_HINT_CHECK_TOL = 1e-9
_HINT_CHECK_SEED = 20131116


# ---------------------------------------------------------------------------
# descriptors


class ConvexSetDescriptor:
    """One basic semi-algebraic convex set {x : g_j(x) <= 0 for all j}.

    Convexity of the constraint polynomials is trusted from the caller
    (see :func:`cycproj.poly.sample_convexity_check` for an advisory screen).
    When an analytic hint is given, construction verifies at seeded sample
    points that the constraint residual coincides with the hinted form.
    """

    __slots__ = ("name", "constraints", "analytic_hint")

    def __init__(
        self,
        name: str,
        constraints: Sequence[Polynomial],
        analytic_hint: Optional[AnalyticHint] = None,
    ):
        constraints = tuple(constraints)
        if not constraints:
            raise ValueError(
                "constraint list must be non-empty (use -1 <= 0 for the whole space)"
            )
        dim = constraints[0].dimension
        for g in constraints:
            if g.dimension != dim:
                raise ValueError("all constraints must share the ambient dimension")
        object.__setattr__(self, "name", str(name))
        object.__setattr__(self, "constraints", constraints)
        object.__setattr__(self, "analytic_hint", analytic_hint)
        if analytic_hint is not None:
            self._validate_hint()

    def __setattr__(self, name, value):
        raise AttributeError("ConvexSetDescriptor is immutable")

    @property
    def dimension(self) -> int:
        return self.constraints[0].dimension

    def __repr__(self):
        return f"ConvexSetDescriptor({self.name!r}, dim={self.dimension}, m={len(self.constraints)})"

    def _hint_center(self) -> Vector:
        h = self.analytic_hint
        if isinstance(h, Ball):
            return h.center
        if isinstance(h, Halfspace):
            nn = vdot(h.a, h.a)
            return tuple(h.b * ai / nn for ai in h.a)
        return (0.0,) * self.dimension

    def _validate_hint(self):
        h = self.analytic_hint
        if isinstance(h, (Halfspace, Ball)) and len(self._hint_center()) != self.dimension:
            raise ValueError("hint dimension does not match constraints")
        if isinstance(h, PowerEpigraph) and self.dimension != 2:
            raise ValueError("power epigraph hint requires dimension 2")
        rng = np.random.default_rng(_HINT_CHECK_SEED)
        center = self._hint_center()
        pts = rng.normal(0.0, 1.5, size=(_HINT_CHECK_POINTS, self.dimension))
        for row in pts:
            x = tuple(c + v for c, v in zip(center, row))
            if abs(self.residual(x) - h.residual(x)) > _HINT_CHECK_TOL:
                raise ValueError(
                    f"analytic hint disagrees with constraints of {self.name!r} at {x}"
                )

    def residual(self, x: Sequence[float]) -> float:
        """max_j [g_j(x)]_+ ; zero exactly when x belongs to the set."""
        if len(x) != self.dimension:
            raise ValueError(f"point length {len(x)} != dimension {self.dimension}")
        worst = 0.0
        for g in self.constraints:
            v = g.evaluate(x)
            if v > worst:
                worst = v
        return worst


# ---------------------------------------------------------------------------
# intersection oracles


@dataclass(frozen=True)
class Singleton:
    point: Vector

    def __post_init__(self):
        object.__setattr__(self, "point", as_vector(self.point))

    def distance(self, x: Sequence[float]) -> float:
        return vdist(x, self.point)


@dataclass(frozen=True)
class AffineSegment:
    endpoints: Tuple[Vector, Vector]

    def __post_init__(self):
        a, b = self.endpoints
        object.__setattr__(self, "endpoints", (as_vector(a), as_vector(b)))

    def distance(self, x: Sequence[float]) -> float:
        a, b = self.endpoints
        ab = vsub(b, a)
        denom = vdot(ab, ab)
        if denom == 0.0:
            return vdist(x, a)
        t = vdot(vsub(x, a), ab) / denom
        t = min(1.0, max(0.0, t))
        proj = tuple(ai + t * di for ai, di in zip(a, ab))
        return vdist(x, proj)


IntersectionOracle = Union[Singleton, AffineSegment]


class FeasibilityProblem:
    """Ambient dimension, an ordered family of sets, and optional exact
    knowledge of their intersection."""

    __slots__ = ("dimension", "sets", "max_degree", "intersection_oracle")

    def __init__(
        self,
        dimension: int,
        sets: Sequence[ConvexSetDescriptor],
        intersection_oracle: Optional[IntersectionOracle] = None,
        max_degree: Optional[int] = None,
    ):
        sets = tuple(sets)
        if not sets:
            raise ValueError("a feasibility problem needs at least one set")
        for s in sets:
            if s.dimension != dimension:
                raise ValueError(f"set {s.name!r} has dimension {s.dimension}, expected {dimension}")
        computed = max(g.degree() for s in sets for g in s.constraints)
        if max_degree is not None and max_degree != computed:
            raise ValueError(f"declared max_degree {max_degree} != computed {computed}")
        object.__setattr__(self, "dimension", int(dimension))
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "max_degree", computed)
        object.__setattr__(self, "intersection_oracle", intersection_oracle)

    def __setattr__(self, name, value):
        raise AttributeError("FeasibilityProblem is immutable")

    def __repr__(self):
        return (
            f"FeasibilityProblem(n={self.dimension}, m={len(self.sets)}, "
            f"d={self.max_degree}, oracle={self.intersection_oracle!r})"
        )


# ---------------------------------------------------------------------------
# projection


def residual(s: ConvexSetDescriptor, x: Sequence[float]) -> float:
    return s.residual(x)


def project(
    s: ConvexSetDescriptor,
    x: Sequence[float],
    tol: ProjectionTolerances = DEFAULT_TOL,
) -> Vector:
    """Euclidean projection of ``x`` onto ``s``.

    The result y satisfies residual(s, y) <= tol.feasibility and the
    first-order optimality/complementarity conditions within tol.optimality.
    Raises :class:`ProjectionError` (with best iterate attached) if no branch
    converges, :class:`NumericalError` on NaN.
    """
    x = as_vector(x)
    if len(x) != s.dimension:
        raise ValueError(f"point length {len(x)} != dimension {s.dimension}")
    if s.residual(x) == 0.0:
        return x
    hint = s.analytic_hint
    if isinstance(hint, Halfspace):
        v = vdot(hint.a, x) - hint.b
        if v <= 0.0:
            return x
        nn = vdot(hint.a, hint.a)
        return tuple(xi - v * ai / nn for xi, ai in zip(x, hint.a))
    if isinstance(hint, Ball):
        dx = vsub(x, hint.center)
        nrm = vnorm(dx)
        if nrm <= hint.radius:
            return x
        f = hint.radius / nrm
        return tuple(ci + f * di for ci, di in zip(hint.center, dx))
    active = [
        j for j, g in enumerate(s.constraints) if g.evaluate(x) > -10.0 * tol.feasibility
    ]
    if len(active) == 1:
        y = _kkt_newton(s, active, x, tol)
        if y is not None:
            return y
    return _project_penalty(s, x, tol)


def distance(
    s: ConvexSetDescriptor,
    x: Sequence[float],
    tol: ProjectionTolerances = DEFAULT_TOL,
) -> float:
    """||x - P_s(x)||; exactly 0 for feasible x."""
    return vdist(as_vector(x), project(s, x, tol))


# -- branch (d): damped Newton on the active-constraint KKT system ----------


def _solve_dense(A, b):
    """In-place Gaussian elimination with partial pivoting; None if singular."""
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = col
        best = abs(M[col][col])
        for r in range(col + 1, n):
            v = abs(M[r][col])
            if v > best:
                best = v
                piv = r
        if best == 0.0 or not math.isfinite(best):
            return None
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
        prow = M[col]
        inv = 1.0 / prow[col]
        for r in range(col + 1, n):
            f = M[r][col] * inv
            if f != 0.0:
                row = M[r]
                for c in range(col, n + 1):
                    row[c] -= f * prow[c]
    out = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = M[r][n]
        row = M[r]
        for c in range(r + 1, n):
            acc -= row[c] * out[c]
        out[r] = acc / row[r]
    return out


def _kkt_state(gs, x, y, lams):
    """Stationarity vector, constraint values, and gradients at (y, lams)."""
    grads = [g.gradient(y) for g in gs]
    stat = [yi - xi for yi, xi in zip(y, x)]
    for lam, grad in zip(lams, grads):
        for i, gi in enumerate(grad):
            stat[i] += lam * gi
    vals = [g.evaluate(y) for g in gs]
    return stat, vals, grads


def _kkt_newton(s, active, x, tol, y0=None, lam0=None):
    """Damped Newton on the KKT system of the active constraints:
    y = x - sum_j lam_j grad g_j(y), g_j(y) = 0.

    Returns None when the attempt should be abandoned (stall, singular
    Jacobian, negative multiplier, or an inactive constraint violated at the
    would-be solution); the caller falls through to / continues the penalty
    ladder.
    """
    n = len(x)
    gs = [s.constraints[j] for j in active]
    p = len(gs)
    if y0 is None or lam0 is None:
        # first-order seed along the dominant constraint's gradient
        g = gs[0]
        gx = g.evaluate(x)
        grad0 = g.gradient(x)
        gn2 = vdot(grad0, grad0)
        if gn2 <= 0.0:
            return None
        lam_seed = gx / gn2
        y = [xi - lam_seed * gi for xi, gi in zip(x, grad0)]
        lams = [lam_seed] + [0.0] * (p - 1)
    else:
        y = list(y0)
        lams = list(lam0)
    stat, vals, grads = _kkt_state(gs, x, y, lams)
    fnorm = math.sqrt(vdot(stat, stat) + vdot(vals, vals))

    def newton_direction():
        A = [[0.0] * (n + p) for _ in range(n + p)]
        for g, lam in zip(gs, lams):
            H = g.hessian_rows(y)
            for i in range(n):
                row = A[i]
                Hi = H[i]
                for j in range(n):
                    row[j] += lam * Hi[j]
        for i in range(n):
            A[i][i] += 1.0
        for jj, grad in enumerate(grads):
            for i in range(n):
                A[i][n + jj] = grad[i]
                A[n + jj][i] = grad[i]
        rhs = [-v for v in stat] + [-v for v in vals]
        return _solve_dense(A, rhs)

    converged = False
    for _ in range(tol.newton_max_iter):
        if not math.isfinite(fnorm):
            return None
        if max(abs(v) for v in vals) <= tol.feasibility and vnorm(stat) <= tol.optimality:
            converged = True
            break
        step = newton_direction()
        if step is None:
            return None
        t = 1.0
        while True:
            y_new = [yi + t * si for yi, si in zip(y, step[:n])]
            lam_new = [li + t * si for li, si in zip(lams, step[n:])]
            stat_new, vals_new, grads_new = _kkt_state(gs, x, y_new, lam_new)
            fn_new = math.sqrt(vdot(stat_new, stat_new) + vdot(vals_new, vals_new))
            if math.isfinite(fn_new) and fn_new <= (1.0 - 1e-4 * t) * fnorm:
                break
            t *= 0.5
            if t < 2.0**-40:
                return None
        y, lams = y_new, lam_new
        stat, vals, grads, fnorm = stat_new, vals_new, grads_new, fn_new
    if not converged:
        # rescue for degenerate constraints (gradients vanishing on the set,
        # hence no finite KKT point): restore feasibility by Gauss-Newton
        # steps on the worst constraint alone, then pick the least-squares
        # multipliers, which minimize the stationarity defect achievable at
        # the restored point
        target = tol.feasibility * 1e-4
        for _ in range(120):
            worst = max(range(p), key=lambda jj: abs(vals[jj]))
            v = vals[worst]
            if abs(v) <= target:
                break
            grad = grads[worst]
            gn2 = vdot(grad, grad)
            if gn2 <= 0.0:
                break
            f = v / gn2
            y = [yi - f * gi for yi, gi in zip(y, grad)]
            vals = [g.evaluate(y) for g in gs]
            grads = [g.gradient(y) for g in gs]
        if max(abs(v) for v in vals) > tol.feasibility:
            return None
        G = [[grads[jj][i] for jj in range(p)] for i in range(n)]
        N = [[sum(G[i][a] * G[i][b] for i in range(n)) for b in range(p)] for a in range(p)]
        r = [-sum(G[i][a] * (y[i] - x[i]) for i in range(n)) for a in range(p)]
        lam_ls = _solve_dense(N, r)
        if lam_ls is None:
            return None
        stat, vals, grads = _kkt_state(gs, x, y, lam_ls)
        if vnorm(stat) > tol.optimality or max(abs(v) for v in vals) > tol.feasibility:
            return None
        lams = lam_ls
        fnorm = math.sqrt(vdot(stat, stat) + vdot(vals, vals))
    # polish: full steps are quadratically convergent here, so a couple more
    # drive the residual toward machine precision; keep them only while ||F||
    # strictly decreases
    for _ in range(2):
        if fnorm == 0.0:
            break
        step = newton_direction()
        if step is None:
            break
        y_new = [yi + si for yi, si in zip(y, step[:n])]
        lam_new = [li + si for li, si in zip(lams, step[n:])]
        stat_new, vals_new, grads_new = _kkt_state(gs, x, y_new, lam_new)
        fn_new = math.sqrt(vdot(stat_new, stat_new) + vdot(vals_new, vals_new))
        if not math.isfinite(fn_new) or fn_new >= fnorm:
            break
        y, lams = y_new, lam_new
        stat, vals, grads, fnorm = stat_new, vals_new, grads_new, fn_new
    if any(lam < -tol.optimality for lam in lams):
        return None
    result = tuple(y)
    active_set = set(active)
    for j, other in enumerate(s.constraints):
        if j not in active_set and other.evaluate(result) > tol.feasibility:
            return None
    if s.residual(result) > tol.feasibility:
        return None
    return result


# -- branch (e): quadratic-penalty continuation ------------------------------


def _penalty_value_grad(s, x, y, mu):
    n = len(x)
    val = 0.0
    grad = [0.0] * n
    for yi, xi in zip(y, x):
        d = yi - xi
        val += d * d
    for i in range(n):
        grad[i] = 2.0 * (y[i] - x[i])
    for g in s.constraints:
        v = g.evaluate(y)
        if v > 0.0:
            val += mu * v * v
            gg = g.gradient(y)
            f = 2.0 * mu * v
            for i in range(n):
                grad[i] += f * gg[i]
    return val, grad


def _project_penalty(s, x, tol):
    """Quadratic-penalty continuation with Armijo gradient descent inner loops.

    The penalty ladder alone cannot certify 1e-10 stationarity in double
    precision (the gradient's noise floor grows like mu * eps), so once an
    inner solve has identified a candidate active set, the exact KKT system
    for that active set is polished by Newton and, when it checks out, its
    solution is returned.
    """
    y = list(x)
    mu = 1.0
    best = tuple(y)
    best_feas = s.residual(best)
    best_opt = math.inf
    tried = set()
    feas_history = []
    while mu <= tol.penalty_mu_max:
        inner_tol = max(tol.optimality, min(1e-4, 1.0 / mu))
        for _ in range(tol.penalty_inner_max_iter):
            val, grad = _penalty_value_grad(s, x, y, mu)
            if not math.isfinite(val):
                raise NumericalError(
                    "penalty objective became non-finite",
                    best=tuple(y),
                    feasibility=s.residual(tuple(y)),
                )
            gn = vnorm(grad)
            if gn <= inner_tol:
                break
            t = 1.0
            while True:
                cand = [yi - t * gi for yi, gi in zip(y, grad)]
                cval, _ = _penalty_value_grad(s, x, cand, mu)
                if math.isfinite(cval) and cval <= val - 1e-4 * t * gn * gn:
                    break
                t *= 0.5
                if t < 2.0**-60:
                    cand = y
                    break
            if cand is y:
                break
            y = cand
        yt = tuple(y)
        feas = s.residual(yt)
        # with lam_j = mu [g_j]_+ the stationarity defect is half the gradient
        _, grad = _penalty_value_grad(s, x, y, mu)
        opt = 0.5 * vnorm(grad)
        comp = max((mu * max(g.evaluate(yt), 0.0) ** 2 for g in s.constraints), default=0.0)
        if feas < best_feas or (feas == best_feas and opt < best_opt):
            best, best_feas, best_opt = yt, feas, opt
        if feas <= tol.feasibility and opt <= tol.optimality and comp <= tol.optimality:
            return yt
        if feas <= 1e-3:
            active = [
                j
                for j, g in enumerate(s.constraints)
                if g.evaluate(yt) > -10.0 * max(tol.feasibility, feas)
            ]
            key = tuple(active)
            if active and key not in tried:
                tried.add(key)
                lam0 = [mu * max(s.constraints[j].evaluate(yt), 0.0) for j in active]
                polished = _kkt_newton(s, active, x, tol, y0=y, lam0=lam0)
                if polished is not None:
                    return polished
        # feasibility of a convergent ladder halves per rung; six doublings
        # with no real progress mean the set is empty or the solver is stuck
        feas_history.append(feas)
        if (
            len(feas_history) >= 6
            and feas > 1000.0 * tol.feasibility
            and feas >= 0.9 * feas_history[-6]
        ):
            break
        mu *= 2.0
    raise ProjectionError(
        f"penalty continuation did not converge for set {s.name!r}",
        best=best,
        feasibility=best_feas,
        optimality=best_opt,
    )
