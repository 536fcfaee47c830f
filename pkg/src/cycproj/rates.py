"""Worst-case convergence exponents for projection methods on polynomial sets.

All exponent formulas work in exact integer arithmetic and divide to float
only at the very end, so the min{...} selections can never be corrupted by
rounding.  Intermediates that leave the 64-bit integer range raise
:class:`ExponentOverflowError` instead of silently degrading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import FrozenSet, List, Sequence, Union

_INT64_MAX = 2**63 - 1


class ExponentOverflowError(OverflowError):
    """An exact integer intermediate exceeded the 64-bit contract range."""


def _guard(value: int, what: str) -> int:
    if value > _INT64_MAX:
        raise ExponentOverflowError(f"{what} = {value} exceeds 64-bit range")
    return value


@dataclass(frozen=True)
class Linear:
    """Geometric error decay ``M * r0^k`` (degree-1 case); r0 is not computable
    from (n, d) and is left to empirical fitting."""


@dataclass(frozen=True)
class PowerLaw:
    """Power-law error decay ``M / k^rho``."""

    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")


RateClass = Union[Linear, PowerLaw]


@dataclass(frozen=True)
class IndexPartition:
    """Split of (0-based) constraint indices into the identically-zero-on-the-set
    part ``j0`` and the remainder ``j1``."""

    j0: FrozenSet[int]
    j1: FrozenSet[int]

    def __post_init__(self):
        if self.j0 & self.j1:
            raise ValueError("j0 and j1 must be disjoint")


def central_binomial(s: int) -> int:
    """C(s, floor(s/2)), with the convention C(0,0) = 1."""
    if s < 0:
        raise ValueError("s must be >= 0")
    return _guard(math.comb(s, s // 2), f"central_binomial({s})")


def kappa(n: int, d: int) -> int:
    """(d-1)^n + 1, the single-polynomial error-bound exponent denominator."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    return _guard((d - 1) ** n + 1, f"kappa({n},{d})")


def holder_exponent_tau(n: int, d: int) -> float:
    """Error-bound exponent max{2/kappa(n,2d), 1/(beta(n-1) d^n)}.

    Equals 1 exactly when d = 1, and 1/d when n = 1.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    k2 = kappa(n, 2 * d)
    b = _guard(central_binomial(n - 1) * d**n, f"beta({n-1})*{d}^{n}")
    # 2/k2 >= 1/b  <=>  2b >= k2, decided exactly in integers
    if 2 * b >= k2:
        return 2.0 / k2
    return 1.0 / b


def cyclic_rate(n: int, d: int) -> RateClass:
    """Guaranteed decay class of cyclic projections onto degree-<=d sets in R^n.

    Linear for d = 1; otherwise a power law with exponent
    1 / min{(2d-1)^n - 1, 2 beta(n-1) d^n - 2}.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if d == 1:
        return Linear()
    a = _guard((2 * d - 1) ** n - 1, f"(2d-1)^n-1 for n={n}, d={d}")
    b = _guard(2 * central_binomial(n - 1) * d**n - 2, f"2*beta(n-1)*d^n-2 for n={n}, d={d}")
    return PowerLaw(1.0 / min(a, b))


def recurrence_bound(beta0: float, p: float, deltas: Sequence[float]) -> List[float]:
    """Upper bounds for sequences obeying ``beta_{k+1} <= beta_k (1 - delta_k beta_k^p)``.

    Returns ``B_k = (beta0^{-p} + p * sum_{i<k} delta_i)^{-1/p}`` for
    k = 1..len(deltas).  With the 1/0 = +inf convention, beta0 = 0 gives all
    zeros.  Computed in the overflow-safe form
    ``beta0 * (1 + beta0^p * p * S_k)^{-1/p}``.
    """
    if p <= 0.0:
        raise ValueError("p must be > 0")
    if beta0 < 0.0:
        raise ValueError("beta0 must be >= 0")
    if any(d < 0.0 for d in deltas):
        raise ValueError("all deltas must be >= 0")
    if beta0 == 0.0:
        return [0.0] * len(deltas)
    bp = beta0**p
    acc = 0.0
    out = []
    for d in deltas:
        acc += p * d
        out.append(beta0 * (1.0 + bp * acc) ** (-1.0 / p))
    return out
