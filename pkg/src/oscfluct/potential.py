"""Interaction potentials and their inverse-temperature scaling.

A potential enters the dynamics only through the rescaled family
``V_beta(x) = V(beta*x) / beta**2`` and its derivatives.  As ``beta -> 0``
every admissible potential flattens onto ``x**2/2``, and the coefficients of
the Taylor expansion at the origin decide which universality class the chain
falls into, so those coefficients get a first-class type here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import EvalOverflowError

__all__ = [
    "Family",
    "PotentialSpec",
    "TaylorData",
    "K_STAR_INF",
    "ValidationReport",
    "harmonic",
    "fpu_alpha",
    "toda",
    "custom",
    "eval_scaled",
    "taylor_data",
    "validate_assumptions",
    "central_difference",
]

#: Sentinel for "every Taylor coefficient beyond the quadratic one vanishes".
#: Kept as +inf (not a large int) so threshold arithmetic like
#: ``1.0 / (2*k_star - 4)`` degrades to 0 instead of silently misbranching.
K_STAR_INF = math.inf

MAX_DERIV_ORDER = 5


class Family(Enum):
    HARMONIC = "harmonic"
    FPU_ALPHA = "fpu_alpha"
    TODA = "toda"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PotentialSpec:
    """A smooth interaction potential with derivative access up to order 5.

    ``deriv(order, x)`` must be vectorized in ``x``.  ``gamma_v`` is the
    exponential-growth constant: every derivative up to order 5 is assumed
    bounded by ``C * exp(gamma_v * |x|)``.  Instances are immutable and safe
    to share between threads.
    """

    family: Family
    deriv: Callable[[int, np.ndarray], np.ndarray] = field(repr=False)
    gamma_v: float = 1.0
    alpha: float | None = None  # only for FPU_ALPHA

    def __call__(self, order: int, x):
        if not 0 <= order <= MAX_DERIV_ORDER:
            raise ValueError(f"derivative order must be 0..5, got {order}")
        return self.deriv(order, np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TaylorData:
    """Taylor coefficients ``c_k = V^(k)(0)`` for k = 3, 4, 5 and the first
    non-vanishing order ``k_star`` (K_STAR_INF when none exists)."""

    c3: float
    c4: float
    c5: float
    k_star: float  # 3, 4, 5 or K_STAR_INF


def harmonic() -> PotentialSpec:
    """V(x) = x**2 / 2.  Fixed point of the beta-scaling."""

    def deriv(order, x):
        if order == 0:
            return 0.5 * x * x
        if order == 1:
            return x
        if order == 2:
            return np.ones_like(x)
        return np.zeros_like(x)

    return PotentialSpec(Family.HARMONIC, deriv, gamma_v=1.0)


def fpu_alpha(alpha: float) -> PotentialSpec:
    """V(x) = x**2/2 + alpha*x**3 + x**4/4 (convex iff 3*alpha**2 <= 1)."""

    def deriv(order, x):
        if order == 0:
            return 0.5 * x * x + alpha * x**3 + 0.25 * x**4
        if order == 1:
            return x + 3.0 * alpha * x * x + x**3
        if order == 2:
            return 1.0 + 6.0 * alpha * x + 3.0 * x * x
        if order == 3:
            return 6.0 * alpha + 6.0 * x
        if order == 4:
            return np.full_like(x, 6.0)
        return np.zeros_like(x)

    return PotentialSpec(Family.FPU_ALPHA, deriv, gamma_v=1.0, alpha=alpha)


def toda() -> PotentialSpec:
    """V(x) = exp(-x) - 1 + x."""

    def deriv(order, x):
        # expm1 keeps V and V' accurate near 0, where e^-x - 1 cancels
        if order == 0:
            return np.expm1(-x) + x
        if order == 1:
            return -np.expm1(-x)
        # alternating sign of the pure exponential from order 2 up
        e = np.exp(-x)
        return e if order % 2 == 0 else -e

    return PotentialSpec(Family.TODA, deriv, gamma_v=1.0)


def custom(deriv: Callable[[int, np.ndarray], np.ndarray], gamma_v: float) -> PotentialSpec:
    """Wrap analytically supplied derivatives.

    No automatic differentiation: orders up to 5 combined with exponential
    growth make numeric differentiation of a black box too fragile.
    """
    return PotentialSpec(Family.CUSTOM, deriv, gamma_v=gamma_v)


def from_config(family: str, alpha: float = 0.0, gamma_v: float = 1.0) -> PotentialSpec:
    """Build a spec from the config keys potential.family / potential.alpha."""
    fam = family.strip().lower()
    if fam == "harmonic":
        return harmonic()
    if fam in ("fpu_alpha", "fpualpha", "fpu"):
        return fpu_alpha(alpha)
    if fam == "toda":
        return toda()
    raise ValueError(f"unknown potential family {family!r}")


def eval_scaled(spec: PotentialSpec, beta: float, order: int, x) -> np.ndarray | float:
    """Derivative of order ``order`` of the rescaled potential
    ``V_beta(x) = V(beta*x)/beta**2``, i.e. ``beta**(order-2) * V^(order)(beta*x)``.

    ``order=1`` is the tilted-variable map ``xi = V_beta'(x)``.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    xs = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):  # overflow is reported as an error below
        out = beta ** (order - 2) * spec(order, beta * xs)
    if not np.all(np.isfinite(out)):
        bad = xs[~np.isfinite(np.atleast_1d(out))] if xs.ndim else xs
        raise EvalOverflowError(
            f"non-finite V_beta^({order}) at x={bad!r}, beta={beta}"
        )
    return out if xs.ndim else float(out)


_COEFF_TOL = 1e-10


def taylor_data(spec: PotentialSpec) -> TaylorData:
    """Read off c_3, c_4, c_5 and the first non-vanishing order.

    The infinity sentinel is reserved for the harmonic family; a custom
    potential with all three coefficients below tolerance cannot be
    classified from order-5 data alone.
    """
    z = np.zeros(1)
    c3, c4, c5 = (float(spec(k, z)[0]) for k in (3, 4, 5))
    for k, c in ((3, c3), (4, c4), (5, c5)):
        if abs(c) > _COEFF_TOL:
            return TaylorData(c3, c4, c5, k_star=k)
    if spec.family is Family.HARMONIC:
        return TaylorData(c3, c4, c5, k_star=K_STAR_INF)
    raise ValueError(
        "all Taylor coefficients c_3..c_5 vanish but the potential is not "
        "declared harmonic; cannot determine k_star from order-5 data"
    )


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    worst_value: float
    witness_x: float
    severity: str = "error"  # or "warning"


@dataclass(frozen=True)
class ValidationReport:
    conditions: tuple[ConditionResult, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.conditions if c.severity == "error")

    def failed(self) -> list[ConditionResult]:
        return [c for c in self.conditions if not c.passed]


def validate_assumptions(
    spec: PotentialSpec, sample_range: float = 8.0, n_samples: int = 400
) -> ValidationReport:
    """Sampled check of the standing assumptions on a potential.

    Normalization at the origin is exact-tolerance; convexity and growth are
    grid-sampled (advisory, not symbolic).  Non-negativity is reported as a
    warning only: adding a constant to V does not change the dynamics.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100 for a meaningful grid")
    xs = np.linspace(-sample_range, sample_range, n_samples)
    conds: list[ConditionResult] = []

    z = np.zeros(1)
    for name, order, target in (("V(0)=0", 0, 0.0), ("V'(0)=0", 1, 0.0), ("V''(0)=1", 2, 1.0)):
        val = float(spec(order, z)[0])
        conds.append(
            ConditionResult(name, abs(val - target) <= 1e-12, val - target, 0.0)
        )

    v2 = np.asarray(spec(2, xs))
    i = int(np.argmin(v2))
    conds.append(
        ConditionResult("convexity V''>=0", bool(v2[i] >= -1e-12), float(v2[i]), float(xs[i]))
    )

    v0 = np.asarray(spec(0, xs))
    i = int(np.argmin(v0))
    conds.append(
        ConditionResult(
            "non-negativity V>=0", bool(v0[i] >= -1e-12), float(v0[i]), float(xs[i]),
            severity="warning",
        )
    )

    # Exponential growth: |V^(k)| e^{-gamma_v |x|} should not keep climbing at
    # the edge of the window.  Compare the boundary decile against the bulk.
    damp = np.exp(-spec.gamma_v * np.abs(xs))
    worst = -np.inf
    worst_x = 0.0
    grows = False
    for k in range(MAX_DERIV_ORDER + 1):
        g = np.abs(np.asarray(spec(k, xs))) * damp
        j = int(np.argmax(g))
        if g[j] > worst:
            worst, worst_x = float(g[j]), float(xs[j])
        edge = max(g[0], g[-1])
        bulk = float(np.max(g[n_samples // 10 : -n_samples // 10]))
        if edge > 2.0 * max(bulk, 1e-300):
            grows = True
    conds.append(
        ConditionResult("exponential growth bound", not grows, worst, worst_x)
    )

    return ValidationReport(tuple(conds))


# 9-point central stencils for d^k/dx^k, truncation error O(h^4).
_STENCILS = {
    1: np.array([1, -8, 0, 8, -1], dtype=float) / 12.0,
    2: np.array([-1, 16, -30, 16, -1], dtype=float) / 12.0,
    3: np.array([1, -8, 13, 0, -13, 8, -1], dtype=float) / 8.0,
    4: np.array([-1, 12, -39, 56, -39, 12, -1], dtype=float) / 6.0,
    5: np.array([1, -9, 26, -29, 0, 29, -26, 9, -1], dtype=float) / 6.0,
}


def central_difference(f: Callable[[np.ndarray], np.ndarray], order: int, x, h: float):
    """O(h^4) central finite difference of ``f`` at ``x``; the independent
    oracle used by the derivative-consistency tests."""
    if order == 0:
        return f(np.asarray(x, dtype=float))
    w = _STENCILS[order]
    r = len(w) // 2
    xs = np.asarray(x, dtype=float)
    acc = np.zeros_like(xs)
    for i, c in enumerate(w):
        if c != 0.0:
            acc = acc + c * f(xs + (i - r) * h)
    return acc / h**order
