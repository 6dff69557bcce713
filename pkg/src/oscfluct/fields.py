"""Fluctuation fields, discrete derivatives, moving frames and the
quadratic-variation / Boltzmann-Gibbs diagnostics.

Lattice site j sits at macroscopic position x = j/n.  On the ring all
test-function arguments are wrapped modulo 1 into a window centred on the
function's support; a frame shift by a whole number of sites is therefore an
exact permutation of the evaluated values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .chain import ChainState, ScalingParams, Trajectory
from .errors import WindowOverflowError
from .gibbs import GibbsParams, mean_eta, mean_zeta
from .potential import PotentialSpec, eval_scaled

__all__ = [
    "TestFunction",
    "gaussian_bump",
    "compact_bump",
    "hermite_gaussian",
    "FieldKind",
    "FieldSample",
    "Centering",
    "discrete_derivatives",
    "grad1_ring",
    "grad2_ring",
    "lap_ring",
    "fluctuation_field",
    "regime_parameters",
    "martingale_qv",
    "local_average",
    "bg2_integral",
    "bg2_diagnostic",
    "bg2_bound",
]


@dataclass(frozen=True)
class TestFunction:
    """A smooth test function with derivatives up to order 3.

    ``center`` places the function on the ring [0,1); ``support_radius`` is
    the radius beyond which the function (and the derivatives used here) is
    numerically negligible, used by window guards and norm quadrature.
    """

    eval: Callable[[np.ndarray, int], np.ndarray]
    support_radius: float
    center: float = 0.5
    name: str = "phi"

    def __call__(self, x, order: int = 0):
        return self.eval(np.asarray(x, dtype=float) - self.center, order)

    def on_ring(self, n: int, shift: float = 0.0, order: int = 0) -> np.ndarray:
        """Values phi(((j - shift) mod n)/n) for j = 0..n-1, with the wrap
        centred on the support so real-valued shifts stay smooth."""
        pos = (np.arange(n) - shift) / n
        rel = (pos - self.center + 0.5) % 1.0 - 0.5
        return self.eval(rel, order)

    def l2_norm_sq(self, order: int = 0) -> float:
        r = self.support_radius
        val, _ = integrate.quad(lambda x: self.eval(np.asarray(x), order) ** 2, -r, r,
                                limit=200)
        return float(val)

    def inner_deriv(self, other: "TestFunction") -> float:
        """<phi', psi'> on the common window (both centred)."""
        r = max(self.support_radius, other.support_radius)
        off = other.center - self.center
        val, _ = integrate.quad(
            lambda x: self.eval(np.asarray(x), 1) * other.eval(np.asarray(x) - off, 1),
            -r, r + abs(off), limit=200,
        )
        return float(val)


def gaussian_bump(sigma: float = 0.05, center: float = 0.5) -> TestFunction:
    def ev(x, order):
        g = np.exp(-(x * x) / (2 * sigma**2))
        y = x / sigma**2
        if order == 0:
            return g
        if order == 1:
            return -y * g
        if order == 2:
            return (y * y - 1.0 / sigma**2) * g
        if order == 3:
            return (3.0 * y / sigma**2 - y**3) * g
        raise ValueError("derivative order must be 0..3")

    return TestFunction(ev, support_radius=9 * sigma, center=center,
                        name=f"gauss({sigma})")


def compact_bump(radius: float = 0.25, center: float = 0.5) -> TestFunction:
    """exp(-1/(1-(x/r)^2)) on |x| < r, zero outside."""

    def ev(x, order):
        y = x / radius
        out = np.zeros_like(y)
        m = np.abs(y) < 1.0
        ym = y[m]
        w = 1.0 - ym * ym
        u1 = -2.0 * ym / w**2
        if order >= 2:
            u2 = -2.0 / w**2 - 8.0 * ym * ym / w**3
        if order == 3:
            u3 = -24.0 * ym / w**3 - 48.0 * ym**3 / w**4
        g = np.exp(-1.0 / w)
        if order == 0:
            out[m] = g
        elif order == 1:
            out[m] = u1 * g / radius
        elif order == 2:
            out[m] = (u2 + u1 * u1) * g / radius**2
        elif order == 3:
            out[m] = (u3 + 3.0 * u2 * u1 + u1**3) * g / radius**3
        else:
            raise ValueError("derivative order must be 0..3")
        return out

    return TestFunction(ev, support_radius=radius, center=center,
                        name=f"bump({radius})")


def hermite_gaussian(k: int, sigma: float = 0.05, center: float = 0.5) -> TestFunction:
    """He_k(x/sigma) * exp(-x^2/(2 sigma^2)); d/dy He_k e^{-y^2/2} = -He_{k+1} e^{-y^2/2}."""
    from numpy.polynomial.hermite_e import hermeval

    def hk(y, m):
        c = np.zeros(k + m + 1)
        c[k + m] = 1.0
        return hermeval(y, c)

    def ev(x, order):
        y = x / sigma
        return (-1.0) ** order * hk(y, order) * np.exp(-y * y / 2) / sigma**order

    return TestFunction(ev, support_radius=(9 + k) * sigma, center=center,
                        name=f"hermite({k},{sigma})")


def from_config(name: str) -> TestFunction:
    """field.phi config values: gauss[:sigma], bump[:radius], hermite[:k:sigma]."""
    parts = name.split(":")
    kind = parts[0].strip().lower()
    if kind in ("gauss", "gaussian"):
        return gaussian_bump(float(parts[1]) if len(parts) > 1 else 0.05)
    if kind == "bump":
        return compact_bump(float(parts[1]) if len(parts) > 1 else 0.25)
    if kind == "hermite":
        k = int(parts[1]) if len(parts) > 1 else 1
        sigma = float(parts[2]) if len(parts) > 2 else 0.05
        return hermite_gaussian(k, sigma)
    raise ValueError(f"unknown test function {name!r}")


# -- discrete derivatives --------------------------------------------------


def discrete_derivatives(phi: TestFunction, n: int, j: int) -> tuple[float, float, float]:
    """(grad1, grad2, lap) at site j on the infinite lattice:
    n(phi_{j+1}-phi_j), (n/2)(phi_{j+1}-phi_{j-1}), n^2(phi_{j+1}+phi_{j-1}-2 phi_j)."""
    pm, p0, pp = (float(phi(np.array([(j + d) / n]))[0]) for d in (-1, 0, 1))
    return n * (pp - p0), 0.5 * n * (pp - pm), n * n * (pp + pm - 2 * p0)


def grad1_ring(vals: np.ndarray, n: int) -> np.ndarray:
    return n * (np.roll(vals, -1) - vals)


def grad2_ring(vals: np.ndarray, n: int) -> np.ndarray:
    return 0.5 * n * (np.roll(vals, -1) - np.roll(vals, 1))


def lap_ring(vals: np.ndarray, n: int) -> np.ndarray:
    return n * n * (np.roll(vals, -1) + np.roll(vals, 1) - 2 * vals)


# -- fluctuation fields -----------------------------------------------------


class FieldKind(Enum):
    VOLUME = "volume"
    ENERGY = "energy"
    COMBINED = "combined"


@dataclass(frozen=True)
class FieldSample:
    value: float
    t: float
    frame_velocity: float
    kind: FieldKind


@dataclass(frozen=True)
class Centering:
    """Quadrature centering constants of the invariant marginal.

    Quadrature, not ensemble means: ensemble centering would leak an
    O(1/sqrt(members)) bias into every field statistic.
    """

    eta: float
    zeta: float
    xi: float

    @classmethod
    def from_measure(cls, p: GibbsParams, spec: PotentialSpec) -> "Centering":
        return cls(eta=mean_eta(p, spec), zeta=mean_zeta(p, spec),
                   xi=p.lam / p.b)


def window_guard(n: int, v: float, t: float) -> None:
    if abs(v) * t > n / 4:
        raise WindowOverflowError(
            f"frame displacement |v|t = {abs(v) * t:.3g} exceeds n/4 = {n / 4}; "
            "ring wrap-around would corrupt moving-frame statistics"
        )


def observable(
    state_eta: np.ndarray,
    spec: PotentialSpec,
    beta: float,
    cent: Centering,
    kind: FieldKind,
    u_n: float = 0.0,
) -> np.ndarray:
    eta_bar = state_eta - cent.eta
    if kind is FieldKind.VOLUME:
        return eta_bar
    zeta_bar = np.asarray(eval_scaled(spec, beta, 0, state_eta)) - cent.zeta
    if kind is FieldKind.ENERGY:
        return zeta_bar
    return eta_bar + u_n * zeta_bar


def fluctuation_field(
    state: ChainState,
    spec: PotentialSpec,
    p: ScalingParams,
    phi: TestFunction,
    kind: FieldKind,
    t: float,
    frame_velocity: float = 0.0,
    u_n: float = 0.0,
    centering: Centering | None = None,
) -> FieldSample:
    """n^{-1/2} sum_j (centered observable)_j phi((j - v t)/n).

    The frame shift is applied at real-valued arguments (no rounding to the
    lattice); whole-site shifts reproduce permuted sums bit-for-bit.
    """
    n = state.n
    window_guard(n, frame_velocity, t)
    if centering is None:
        centering = Centering.from_measure(p.gibbs(n), spec)
    obs = observable(state.eta, spec, p.beta(n), centering, kind, u_n)
    w = phi.on_ring(n, shift=frame_velocity * t)
    # fsum is exactly rounded, so lattice-aligned frame shifts (which permute
    # the summands) reproduce the value bit-for-bit
    return FieldSample(
        value=math.fsum(obs * w) / math.sqrt(n),
        t=t,
        frame_velocity=frame_velocity,
        kind=kind,
    )


def regime_parameters(
    case: str, n: int, p: ScalingParams, c3: float
) -> tuple[float, float]:
    """The two admissible (u_n, v_n) pairs that cancel the divergent linear
    terms: case 'I' -> (c3 beta_n, theta alpha (2 + 2 lam c3 beta_n));
    case 'II' -> (-1/lam, 0), requiring lam != 0."""
    if case.upper() == "I":
        u = c3 * p.beta(n)
        v = p.drift_prefactor(n) * (2.0 + 2.0 * p.lam * u)
        return u, v
    if case.upper() == "II":
        if p.lam == 0.0:
            raise ValueError("case II requires lam != 0")
        return -1.0 / p.lam, 0.0
    raise ValueError(f"case must be 'I' or 'II', got {case!r}")


# -- martingale quadratic variation ------------------------------------------


def qv_integrand(
    eta: np.ndarray,
    spec: PotentialSpec,
    p: ScalingParams,
    phi1: TestFunction,
    phi2: TestFunction,
    s: float,
    frames: tuple[float, float],
) -> float:
    """The bracket integrand at one time: the eta-difference, zeta-difference
    and cross terms with their discrete-gradient weights."""
    n = eta.shape[0]
    beta = p.beta(n)
    th = p.theta(n)
    zeta = np.asarray(eval_scaled(spec, beta, 0, eta))
    de = eta - np.roll(eta, -1)
    dz = zeta - np.roll(zeta, -1)
    g1 = grad1_ring(phi1.on_ring(n, shift=frames[0] * s), n)
    g2a = grad2_ring(phi2.on_ring(n, shift=frames[1] * s), n)
    g2b = grad1_ring(phi2.on_ring(n, shift=frames[1] * s), n)
    t1 = th / (2 * n**3) * float(de @ (de * g1 * g1))
    t2 = th / (2 * n**3) * float(dz @ (dz * g2a * g2a))
    t3 = th / n**3 * float((de * dz) @ (g1 * g2b))
    return t1 + t2 + t3


def martingale_qv(
    traj: Trajectory,
    spec: PotentialSpec,
    p: ScalingParams,
    phi1: TestFunction,
    phi2: TestFunction,
    frames: tuple[float, float] = (0.0, 0.0),
) -> float:
    """Time quadrature (trapezoid over snapshots) of the three bracket terms."""
    vals = [
        qv_integrand(traj.snapshots[i], spec, p, phi1, phi2, float(traj.times[i]), frames)
        for i in range(len(traj.times))
    ]
    return float(np.trapezoid(vals, traj.times))


# -- local averages and the second-order Boltzmann-Gibbs diagnostic -----------


def local_average(series: np.ndarray, j: int, ell: int, side: str = "right") -> float:
    """(1/ell) sum of ell consecutive entries starting at j (right) or ending
    at j-1 (left), with periodic wrap."""
    n = len(series)
    if not 1 <= ell <= n:
        raise ValueError("need 1 <= ell <= n")
    idx = (j + np.arange(ell)) % n if side == "right" else (j - 1 - np.arange(ell)) % n
    return float(np.mean(series[idx]))


def right_averages(series: np.ndarray, ell: int) -> np.ndarray:
    """All right local averages at once (vector of (1/ell) sum_{i<ell} g_{j+i})."""
    n = len(series)
    c = np.concatenate([series, series[: ell - 1]]) if ell > 1 else series
    csum = np.concatenate([[0.0], np.cumsum(c)])
    return (csum[ell:] - csum[:-ell])[:n] / ell if ell > 1 else series.copy()


def bg2_integrand(
    eta: np.ndarray,
    spec: PotentialSpec,
    p: ScalingParams,
    phi: TestFunction,
    ell: int,
    s: float,
    frame_velocity: float,
    cent: Centering,
) -> float:
    n = eta.shape[0]
    xi_bar = np.asarray(eval_scaled(spec, p.beta(n), 1, eta)) - cent.xi
    g = grad1_ring(phi.on_ring(n, shift=frame_velocity * s), n)
    pair = xi_bar * np.roll(xi_bar, -1)
    avg2 = right_averages(xi_bar, ell) ** 2
    return float((pair - avg2) @ g)


def bg2_integral(
    traj: Trajectory,
    spec: PotentialSpec,
    p: ScalingParams,
    phi: TestFunction,
    ell: int,
    frame_velocity: float = 0.0,
    centering: Centering | None = None,
) -> float:
    """Trapezoid time integral of the BG2 replacement discrepancy along one
    trajectory."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    n = traj.n
    cent = centering or Centering.from_measure(p.gibbs(n), spec)
    vals = [
        bg2_integrand(traj.snapshots[i], spec, p, phi, ell, float(traj.times[i]),
                      frame_velocity, cent)
        for i in range(len(traj.times))
    ]
    return float(np.trapezoid(vals, traj.times))


def bg2_diagnostic(integrals: Sequence[float]) -> float:
    """Ensemble second moment of the per-trajectory BG2 time integrals."""
    arr = np.asarray(integrals, dtype=float)
    return float(np.mean(arr**2))


def bg2_bound(T: float, n: int, ell: int, phi: TestFunction) -> float:
    """The replacement-cost envelope (T ell / n + T^2 n / ell^2) ||phi'||^2
    against which the diagnostic is compared."""
    return (T * ell / n + T * T * n / (ell * ell)) * phi.l2_norm_sq(order=1)
