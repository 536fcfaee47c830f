"""Sparse multivariate polynomials: evaluation, gradients, Hessians.

A polynomial is a finite sum of monomials ``coefficient * x1^e1 * ... * xn^en``
stored as an exponent-vector -> coefficient map.  Terms are kept in a fixed
graded-lexicographic order so that evaluation is a deterministic, bit
reproducible sum.  Instances are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

Exponents = Tuple[int, ...]


@dataclass(frozen=True)
class Monomial:
    """One term of a sparse polynomial.

    ``exponents`` has one non-negative integer per variable; ``coefficient``
    must be finite.
    """

    exponents: Exponents
    coefficient: float

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        object.__setattr__(self, "exponents", exps)
        c = float(self.coefficient)
        if not math.isfinite(c):
            raise ValueError(f"non-finite coefficient {c!r}")
        object.__setattr__(self, "coefficient", c)

    @property
    def degree(self) -> int:
        return sum(self.exponents)


def _grlex_key(exps: Exponents):
    return (sum(exps), exps)


class Polynomial:
    """Immutable sparse polynomial in ``dimension`` real variables.

    Construct from a mapping of exponent tuples to coefficients, or from an
    iterable of :class:`Monomial`.  Duplicate exponent vectors are merged by
    summation; exact-zero coefficients are dropped, so the zero polynomial
    has no terms (and degree 0 by convention).
    """

    __slots__ = ("dimension", "_terms", "_ordered", "_grad", "_hess_rows")

    def __init__(
        self,
        dimension: int,
        terms: Union[Mapping[Exponents, float], Iterable[Monomial], None] = None,
    ):
        dimension = int(dimension)
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        merged: dict = {}
        if terms is not None:
            items: Iterable
            if isinstance(terms, Mapping):
                items = (Monomial(e, c) for e, c in terms.items())
            else:
                items = terms
            for mono in items:
                if not isinstance(mono, Monomial):
                    mono = Monomial(*mono)
                if len(mono.exponents) != dimension:
                    raise ValueError(
                        f"exponent vector {mono.exponents} has length "
                        f"{len(mono.exponents)}, expected {dimension}"
                    )
                merged[mono.exponents] = merged.get(mono.exponents, 0.0) + mono.coefficient
        object.__setattr__(self, "dimension", dimension)
        cleaned = {e: c for e, c in merged.items() if c != 0.0}
        object.__setattr__(self, "_terms", cleaned)
        ordered = tuple(sorted(cleaned.items(), key=lambda item: _grlex_key(item[0])))
        object.__setattr__(self, "_ordered", ordered)
        object.__setattr__(self, "_grad", None)
        object.__setattr__(self, "_hess_rows", None)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- basic structure ---------------------------------------------------

    @property
    def terms(self) -> Tuple[Monomial, ...]:
        return tuple(Monomial(e, c) for e, c in self._ordered)

    def degree(self) -> int:
        if not self._ordered:
            return 0
        return max(sum(e) for e, _ in self._ordered)

    def is_zero(self) -> bool:
        return not self._ordered

    def __repr__(self):
        if not self._ordered:
            return f"Polynomial({self.dimension}, 0)"
        parts = " + ".join(f"{c:g}*x^{list(e)}" for e, c in self._ordered)
        return f"Polynomial({self.dimension}, {parts})"

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.dimension == other.dimension
            and self._ordered == other._ordered
        )

    def __hash__(self):
        return hash((self.dimension, self._ordered))

    # -- algebra (add / scale / differentiate only) ------------------------

    def add(self, other: "Polynomial") -> "Polynomial":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch in add")
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(self.dimension, out)

    def scale(self, a: float) -> "Polynomial":
        return Polynomial(self.dimension, {e: a * c for e, c in self._terms.items()})

    def partial(self, var: int) -> "Polynomial":
        """Partial derivative with respect to variable ``var``."""
        if not 0 <= var < self.dimension:
            raise ValueError(f"variable index {var} out of range")
        out = {}
        for e, c in self._terms.items():
            k = e[var]
            if k == 0:
                continue
            de = e[:var] + (k - 1,) + e[var + 1 :]
            out[de] = out.get(de, 0.0) + c * k
        return Polynomial(self.dimension, out)

    # -- evaluation --------------------------------------------------------

    def _check_point(self, x: Sequence[float]):
        if len(x) != self.dimension:
            raise ValueError(
                f"point has length {len(x)}, polynomial dimension is {self.dimension}"
            )

    def evaluate(self, x: Sequence[float]) -> float:
        """Value at ``x``; terms are summed in canonical graded-lex order."""
        self._check_point(x)
        total = 0.0
        for exps, coeff in self._ordered:
            t = coeff
            for xi, e in zip(x, exps):
                if e:
                    t *= xi**e
            total += t
        return total

    def __call__(self, x: Sequence[float]) -> float:
        return self.evaluate(x)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an ``(N, n)`` array of points."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dimension:
            raise ValueError(f"expected (N, {self.dimension}) array")
        total = np.zeros(points.shape[0])
        for exps, coeff in self._ordered:
            t = np.full(points.shape[0], coeff)
            for i, e in enumerate(exps):
                if e:
                    t = t * points[:, i] ** e
            total += t
        return total

    def _gradient_polys(self) -> Tuple["Polynomial", ...]:
        if self._grad is None:
            object.__setattr__(
                self, "_grad", tuple(self.partial(i) for i in range(self.dimension))
            )
        return self._grad

    def gradient(self, x: Sequence[float]) -> Tuple[float, ...]:
        """Gradient at ``x`` from symbolically differentiated terms."""
        self._check_point(x)
        return tuple(p.evaluate(x) for p in self._gradient_polys())

    def _hessian_polys(self):
        # upper triangle only; mirrored at evaluation time
        if self._hess_rows is None:
            grads = self._gradient_polys()
            rows = tuple(
                tuple(grads[i].partial(j) for j in range(i, self.dimension))
                for i in range(self.dimension)
            )
            object.__setattr__(self, "_hess_rows", rows)
        return self._hess_rows

    def hessian_rows(self, x: Sequence[float]) -> list:
        """Hessian at ``x`` as nested lists, exactly symmetric by mirroring."""
        self._check_point(x)
        n = self.dimension
        rows = [[0.0] * n for _ in range(n)]
        hp = self._hessian_polys()
        for i in range(n):
            for j in range(i, n):
                v = hp[i][j - i].evaluate(x)
                rows[i][j] = v
                rows[j][i] = v
        return rows

    def hessian(self, x: Sequence[float]) -> np.ndarray:
        return np.array(self.hessian_rows(x), dtype=float)


@dataclass(frozen=True)
class ConvexityReport:
    """Result of sampled Hessian eigenvalue screening (heuristic, never a proof)."""

    min_eigenvalue_seen: float
    witness: Optional[Tuple[float, ...]]

    @property
    def suspect(self) -> bool:
        return self.witness is not None


_WITNESS_CUTOFF = -1e-8


def sample_convexity_check(
    p: Polynomial,
    box: Sequence[Tuple[float, float]],
    samples: int,
    seed: int,
) -> ConvexityReport:
    """Sample the box uniformly and record the smallest Hessian eigenvalue seen.

    Reports a witness point when an eigenvalue below -1e-8 is found.  This is
    an advisory screen: convexity of the input polynomials is otherwise
    trusted as declared.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if len(box) != p.dimension:
        raise ValueError("box length must equal polynomial dimension")
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    if np.any(lo > hi):
        raise ValueError("malformed box: lo > hi")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(samples, p.dimension))
    min_seen = math.inf
    witness = None
    for row in pts:
        eigs = np.linalg.eigvalsh(p.hessian(row))
        m = float(eigs[0])
        if m < min_seen:
            min_seen = m
            if m < _WITNESS_CUTOFF:
                witness = tuple(float(v) for v in row)
    return ConvexityReport(min_eigenvalue_seen=min_seen, witness=witness)
