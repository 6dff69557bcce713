"""Two-point functions: the correlation S_j(t) of the zero-velocity mode,
its smeared version, the quadratic field, and kernel comparisons.

S_j(t) = (1/2) E[(zeta - lam eta)bar_0(0) (zeta - lam eta)bar_j(t)], with a
factor 1/2 kept here (single source of truth; the crossover theorem's
normalization depends on it).  Estimators average over all lattice
translations per trajectory: the stationary measure is translation
invariant, which cuts the variance by O(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import HarmonicWindowEngine, ScalingParams, Trajectory
from .fields import Centering, TestFunction
from .potential import PotentialSpec, eval_scaled
from .spectral import SpectralGrid, kernel_P

__all__ = [
    "CorrelationEstimate",
    "correlation_S",
    "smeared_two_point",
    "quadratic_field",
    "harmonic_energy_correlation",
    "kernel_comparison",
]


@dataclass
class CorrelationEstimate:
    times: np.ndarray
    offsets: np.ndarray
    S: np.ndarray        # (time, offset)
    stderr: np.ndarray   # same shape; across-ensemble standard error
    ensemble_size: int

    def mass(self, i: int = 0) -> float:
        return float(self.S[i].sum())


def _mode_field(eta: np.ndarray, spec: PotentialSpec, beta: float, lam: float,
                cent: Centering) -> np.ndarray:
    zeta = np.asarray(eval_scaled(spec, beta, 0, eta))
    return (zeta - cent.zeta) - lam * (eta - cent.eta)


def correlation_S(
    trajectories: Sequence[Trajectory],
    spec: PotentialSpec,
    p: ScalingParams,
    offsets: np.ndarray | None = None,
    centering: Centering | None = None,
) -> CorrelationEstimate:
    """Translation-averaged estimate of S_j(t) from trajectories whose first
    snapshot is the time-0 state (all started from exact product samples).

    The circular cross-correlation over all translations is done by FFT.
    """
    trajs = list(trajectories)
    if not trajs:
        raise ValueError("need at least one trajectory")
    n = trajs[0].n
    tgrid = trajs[0].times
    cent = centering or Centering.from_measure(p.gibbs(n), spec)
    if offsets is None:
        offsets = np.arange(-(n // 2), n - n // 2)
    offsets = np.asarray(offsets, dtype=int)
    beta = p.beta(n)

    acc = np.zeros((len(tgrid), n))
    acc2 = np.zeros((len(tgrid), n))
    for traj in trajs:
        u0 = _mode_field(traj.snapshots[0], spec, beta, p.lam, cent)
        f0 = np.conj(np.fft.rfft(u0))
        for i in range(len(tgrid)):
            ut = _mode_field(traj.snapshots[i], spec, beta, p.lam, cent)
            # (1/n) sum_k u0_k ut_{k+j}
            c = np.fft.irfft(f0 * np.fft.rfft(ut), n=n) / n
            acc[i] += c
            acc2[i] += c * c
    m = len(trajs)
    mean = 0.5 * acc / m
    var = np.maximum(0.25 * acc2 / m - mean**2, 0.0)
    stderr = np.sqrt(var / max(m - 1, 1))
    cols = offsets % n
    return CorrelationEstimate(
        times=tgrid.copy(),
        offsets=offsets,
        S=mean[:, cols],
        stderr=stderr[:, cols],
        ensemble_size=m,
    )


def smeared_two_point(
    trajectories: Sequence[Trajectory],
    spec: PotentialSpec,
    p: ScalingParams,
    f: TestFunction | np.ndarray,
    g: TestFunction | np.ndarray,
    time_index: int,
    centering: Centering | None = None,
) -> float:
    """(1/2) E[X_0(g) X_t(f)] with X the zero-velocity mode field
    n^{-1/2} sum_j (zetabar - lam etabar)_j phi(j/n).

    Estimated with the same joint translation averaging as correlation_S
    (the stationary law is translation invariant), which makes smearing the
    correlation estimate and smearing the fields the identical computation.
    """
    trajs = list(trajectories)
    n = trajs[0].n
    cent = centering or Centering.from_measure(p.gibbs(n), spec)
    beta = p.beta(n)
    fv = f.on_ring(n) if isinstance(f, TestFunction) else np.asarray(f, dtype=float)
    gv = g.on_ring(n) if isinstance(g, TestFunction) else np.asarray(g, dtype=float)
    fh = np.fft.rfft(fv)
    gh = np.fft.rfft(gv)
    acc = 0.0
    for traj in trajs:
        u0 = _mode_field(traj.snapshots[0], spec, beta, p.lam, cent)
        ut = _mode_field(traj.snapshots[time_index], spec, beta, p.lam, cent)
        a = np.fft.irfft(np.conj(gh) * np.fft.rfft(u0), n=n)
        b = np.fft.irfft(np.conj(fh) * np.fft.rfft(ut), n=n)
        acc += float(a @ b) / n**2
    return 0.5 * acc / len(trajs)


def smear_correlation(est: CorrelationEstimate, time_index: int,
                      fv: np.ndarray, gv: np.ndarray) -> float:
    """(1/n) sum_{j,j'} S_t(j'-j) g(j/n) f(j'/n) from an S estimate on the
    full offset range; definitionally identical to smeared_two_point."""
    n = len(fv)
    S_by_offset = np.empty(n)
    S_by_offset[est.offsets % n] = est.S[time_index]
    acc = 0.0
    for d in range(n):
        # offset d pairs g at site k with f at site k + d
        acc += S_by_offset[d] * float(gv @ np.roll(fv, -d))
    return acc / n


def quadratic_field(
    eta: np.ndarray,
    spec: PotentialSpec,
    p: ScalingParams,
    h: np.ndarray,
    centering: Centering | None = None,
) -> float:
    """(1/n) sum_{j != j'} xibar_j xibar_j' h(j/n, j'/n); h must be symmetric."""
    n = eta.shape[0]
    if h.shape != (n, n):
        raise ValueError(f"kernel shape {h.shape} does not match n={n}")
    if np.max(np.abs(h - h.T)) > 1e-12 * max(1.0, float(np.max(np.abs(h)))):
        raise ValueError("quadratic-field kernel must be symmetric")
    cent = centering or Centering.from_measure(p.gibbs(n), spec)
    xi_bar = np.asarray(eval_scaled(spec, p.beta(n), 1, eta)) - cent.xi
    full = float(xi_bar @ h @ xi_bar)
    diag = float(np.sum(xi_bar * xi_bar * np.diagonal(h)))
    return (full - diag) / n


def harmonic_energy_correlation(
    n: int,
    p: ScalingParams,
    times: np.ndarray,
    rng: np.random.Generator,
    members: int,
    max_drift_angle: float = 0.02,
) -> CorrelationEstimate:
    """Exact-reduction estimator of S_j(t) for the harmonic family at lam=0.

    The harmonic dynamics is a random orthogonal map O(t) (rotation flow
    interleaved with transpositions) applied to an iid Gaussian start, so by
    Wick's theorem S_j(t) = (1/4) E[(O(t) e_0)_j^2].  Each trajectory
    propagates the basis vector through the same noise as the physical chain
    and contributes a whole self-normalized profile (sum_j w_j^2 = 1).
    """
    if p.lam != 0.0:
        raise ValueError("exact reduction requires lam = 0")
    eng = HarmonicWindowEngine(n, p, max_drift_angle=max_drift_angle)
    tgrid = np.asarray(times, dtype=float)
    acc = np.zeros((len(tgrid), n))
    acc2 = np.zeros((len(tgrid), n))
    w0 = np.zeros(n)
    w0[0] = 1.0
    for _ in range(members):
        traj = eng.run(w0, rng, tgrid)
        w2 = traj.snapshots**2
        acc += w2
        acc2 += w2 * w2
    mean = 0.25 * acc / members
    var = np.maximum(0.0625 * acc2 / members - mean**2, 0.0)
    offsets = np.arange(-(n // 2), n - n // 2)
    cols = offsets % n
    return CorrelationEstimate(
        times=tgrid,
        offsets=offsets,
        S=mean[:, cols],
        stderr=np.sqrt(var / max(members - 1, 1))[:, cols],
        ensemble_size=members,
    )


def kernel_comparison(
    est: CorrelationEstimate,
    n: int,
    gamma: float,
    kappa: float,
    time_index: int,
) -> dict:
    """Normalized lattice correlation against the periodized fundamental
    solution on the unit ring: L1 and Linf distances of the probability
    profiles, plus the skew surrogate (median - mean) of both."""
    t = float(est.times[time_index])
    S = est.S[time_index]
    mass = float(S.sum())
    prof = S / mass  # probability over offsets
    grid = SpectralGrid(m=n, L=1.0)
    P = kernel_P(gamma, kappa, t, grid, check=False)
    pk = P / n  # kernel mass per site
    pk = pk / pk.sum()
    # align offsets: grid.x runs [-1/2, 1/2); offsets run -(n//2)..
    x_off = est.offsets / n
    kern = np.interp(x_off, grid.x, pk, period=1.0)
    kern /= kern.sum()
    l1 = float(np.sum(np.abs(prof - kern)))
    linf = float(np.max(np.abs(prof - kern)) * n)
    def skew(q):
        c = np.cumsum(np.maximum(q, 0.0))
        c = c / c[-1]
        med = float(np.interp(0.5, c, x_off))
        mean = float(np.sum(x_off * q))
        return med - mean
    return {
        "t": t,
        "l1": l1,
        "linf": linf,
        "mass": mass,
        "skew_chain": skew(prof),
        "skew_kernel": skew(kern),
    }
