"""Markov dynamics of the oscillator chain on a periodic lattice.

Generator: theta(n) * (S + alpha_n * A) where S exchanges nearest-neighbour
values at rate 1/2 per bond and A drives d eta_j/dt = xi_{j-1} - xi_{j+1}
with xi = V_beta'(eta).  The ring replaces the infinite lattice; moving-frame
statistics stay clean as long as the frame displacement is well inside the
ring, which callers must guard (see fields.window_guard).

Times are macroscopic throughout: theta(n) enters rates and drift strengths,
never the clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _engines
from .errors import StepSizeUnderflowError
from .gibbs import GibbsParams
from .potential import Family, PotentialSpec, eval_scaled

__all__ = [
    "ChainState",
    "ScalingParams",
    "Trajectory",
    "drift",
    "exchange_event",
    "simulate",
    "HarmonicWindowEngine",
]

_FAMILY_CODE = {
    Family.HARMONIC: _engines.FAMILY_HARMONIC,
    Family.FPU_ALPHA: _engines.FAMILY_FPU,
    Family.TODA: _engines.FAMILY_TODA,
}


@dataclass(frozen=True)
class ScalingParams:
    """All n-dependent scalings: theta(n) = n**a, alpha_n = gamma * n**-kappa,
    beta_n = n**-beta_exp, and the tilt lam of the invariant measure."""

    a: float
    kappa: float = 0.0
    gamma: float = 1.0
    beta_exp: float = 0.0
    lam: float = 0.0

    def theta(self, n: int) -> float:
        return float(n) ** self.a

    def alpha(self, n: int) -> float:
        return self.gamma * float(n) ** (-self.kappa)

    def beta(self, n: int) -> float:
        return float(n) ** (-self.beta_exp)

    def drift_prefactor(self, n: int) -> float:
        return self.theta(n) * self.alpha(n)

    def exchange_rate(self, n: int) -> float:
        return n * self.theta(n) / 2.0

    def gibbs(self, n: int) -> GibbsParams:
        return GibbsParams(beta=self.beta(n), b=1.0, lam=self.lam)

    def validate(self, n: int) -> None:
        for name, v in (("theta", self.theta(n)), ("alpha", self.alpha(n)),
                        ("beta", self.beta(n))):
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name}(n={n}) = {v} is not finite/positive")


@dataclass(frozen=True)
class ChainState:
    eta: np.ndarray
    t_macro: float = 0.0

    def __post_init__(self):
        if self.eta.ndim != 1 or self.eta.shape[0] < 8:
            raise ValueError("state must be a 1-d array with n >= 8")
        if not np.all(np.isfinite(self.eta)):
            raise ValueError("state contains non-finite entries")

    @property
    def n(self) -> int:
        return self.eta.shape[0]


@dataclass
class Trajectory:
    """Snapshots of eta at increasing macroscopic times, plus event counts."""

    times: np.ndarray
    snapshots: np.ndarray  # shape (len(times), n)
    n_exchanges: int = 0
    n_ode_steps: int = 0
    meta: dict = dc_field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.snapshots.shape[1]


def xi_of(state_eta: np.ndarray, spec: PotentialSpec, beta: float) -> np.ndarray:
    return np.asarray(eval_scaled(spec, beta, 1, state_eta))


def zeta_of(state_eta: np.ndarray, spec: PotentialSpec, beta: float) -> np.ndarray:
    return np.asarray(eval_scaled(spec, beta, 0, state_eta))


def drift(state: ChainState, spec: PotentialSpec, p: ScalingParams) -> np.ndarray:
    """theta*alpha_n * (xi_{j-1} - xi_{j+1}) with periodic indices."""
    xi = xi_of(state.eta, spec, p.beta(state.n))
    return p.drift_prefactor(state.n) * (np.roll(xi, 1) - np.roll(xi, -1))


def exchange_event(state: ChainState, j: int, rng=None) -> ChainState:
    """Swap eta_j and eta_{j+1} (periodic); conserved totals move verbatim."""
    n = state.n
    if not 0 <= j < n:
        raise ValueError(f"bond index {j} outside 0..{n - 1}")
    eta = state.eta.copy()
    jp = (j + 1) % n
    eta[j], eta[jp] = eta[jp], eta[j]
    return ChainState(eta, state.t_macro)


def simulate(
    state0: ChainState,
    spec: PotentialSpec,
    p: ScalingParams,
    T: float,
    ode_tol: float,
    rng: np.random.Generator,
    snapshot_times: np.ndarray | None = None,
    exchange: bool = True,
) -> Trajectory:
    """Event-driven splitting: exponential bond clocks at total rate
    n*theta/2 interleaved with adaptive DP5(4) integration of the drift.

    Built-in potential families run through a compiled kernel; custom
    potentials fall back to a NumPy stepper with identical semantics (but
    a different, slower random stream layout).
    """
    if T <= 0 or ode_tol <= 0:
        raise ValueError("T and ode_tol must be positive")
    n = state0.n
    p.validate(n)
    if snapshot_times is None:
        snapshot_times = np.array([T])
    snap = np.asarray(snapshot_times, dtype=float)
    if np.any(snap < 0) or np.any(np.diff(snap) <= 0) or snap[-1] > T:
        raise ValueError("snapshot times must be increasing within [0, T]")

    rate = p.exchange_rate(n) if exchange else 0.0
    pref = p.drift_prefactor(n)
    beta = p.beta(n)

    if spec.family in _FAMILY_CODE:
        seed = np.uint64(rng.integers(0, 2**64, dtype=np.uint64))
        try:
            snaps, n_ex, n_steps = _engines.simulate_chain(
                state0.eta.astype(float),
                _FAMILY_CODE[spec.family],
                float(spec.alpha or 0.0),
                beta,
                pref,
                rate,
                snap,
                ode_tol,
                seed,
            )
        except ValueError as exc:  # numba surfaces the underflow as ValueError
            raise StepSizeUnderflowError(str(exc)) from None
        return Trajectory(snap, snaps, n_ex, n_steps)

    return _simulate_numpy(state0, spec, p, ode_tol, rng, snap, rate, pref, beta)


def _simulate_numpy(state0, spec, p, ode_tol, rng, snap, rate, pref, beta):
    eta = state0.eta.astype(float).copy()
    n = eta.shape[0]
    snaps = np.empty((len(snap), n))
    t = 0.0
    isnap = 0
    n_ex = 0
    n_steps = 0

    def rhs(y):
        xi = np.asarray(eval_scaled(spec, beta, 1, y))
        return pref * (np.roll(xi, 1) - np.roll(xi, -1))

    def advance(y, dt):
        nonlocal n_steps
        if pref == 0.0 or dt <= 0.0:
            return y
        remaining = dt
        h = dt
        while remaining > 0.0:
            h = min(h, remaining)
            k = np.empty((7, n))
            k[0] = rhs(y)
            for s in range(1, 6):
                k[s] = rhs(y + h * (_engines._DP_A[s, :s] @ k[:s]))
            y5 = y + h * (_engines._DP_B5[:6] @ k[:6])
            k[6] = rhs(y5)
            scale = ode_tol * (1.0 + np.abs(y))
            err = np.sqrt(np.mean((h * (_engines._DP_BERR @ k) / scale) ** 2))
            if err <= 1.0:
                y = y5
                remaining -= h
                n_steps += 1
                h *= min(2.0, max(0.2, 0.9 * err**-0.2)) if err > 0 else 2.0
            else:
                h *= max(0.2, 0.9 * err**-0.2)
            if h < 1e-15 * dt and remaining > 0.0:
                raise StepSizeUnderflowError("ODE step underflow in numpy engine")
        return y

    while isnap < len(snap):
        dt = rng.exponential(1.0 / rate) if rate > 0 else np.inf
        t_event = t + dt
        while isnap < len(snap) and snap[isnap] <= t_event:
            eta = advance(eta, snap[isnap] - t)
            t = snap[isnap]
            snaps[isnap] = eta
            isnap += 1
        if isnap >= len(snap):
            break
        eta = advance(eta, t_event - t)
        t = t_event
        b = int(rng.integers(0, n))
        bp = (b + 1) % n
        eta[b], eta[bp] = eta[bp], eta[b]
        n_ex += 1
    return Trajectory(snap, snaps, n_ex, n_steps)


class HarmonicWindowEngine:
    """Fast trajectory engine for the harmonic family only.

    The harmonic drift is the linear circulant map
    d eta/dt = pref * (eta_{j-1} - eta_{j+1}), an exact phase rotation in
    Fourier space.  Exchange events inside a short window of length h are
    applied in Poisson-sampled order between two exact half-window rotations
    (Strang splitting).  The splitting bias is O((pref*h)^2) per window and
    is validated against the event-driven engine in the test suite.

    Used by the correlation and BG2 drivers where exact event-driven
    integration at n ~ 1000, theta = n^2 would be prohibitively slow.
    """

    def __init__(self, n: int, p: ScalingParams, max_drift_angle: float = 0.02):
        self.n = n
        self.pref = p.drift_prefactor(n)
        self.rate = p.exchange_rate(n)
        k = np.fft.rfftfreq(n, d=1.0 / n)
        self.eig = -2j * self.pref * np.sin(2 * np.pi * k / n)
        # window length limited only by the drift angle per window; with no
        # drift the window is just an amortization unit for the swap batches
        if self.pref > 0:
            self.h = max_drift_angle / self.pref
        else:
            self.h = 256.0 / max(self.rate, 1.0)

    def _rotate(self, eta: np.ndarray, dt: float) -> np.ndarray:
        if self.pref == 0.0:
            return eta
        return np.fft.irfft(np.fft.rfft(eta) * np.exp(dt * self.eig), n=self.n)

    def _half_stencil(self, h: float) -> tuple[np.ndarray, int]:
        """Exact half-window rotation as a localized circulant stencil.

        The multiplier exp((h/2) eig) has an inverse transform whose entries
        decay like Bessel coefficients of the (small) rotation angle, so a
        short stencil reproduces the rotation to ~1e-14 per application."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        lam = -2j * self.pref * np.sin(2 * np.pi * k / self.n)
        c = np.fft.ifft(np.exp(0.5 * h * lam))
        c = np.real(c)  # operator is real; imaginary dust ~1e-17
        r = 1
        while r < self.n // 2:
            tail = np.abs(np.concatenate([c[r + 1 : self.n - r]]))
            if tail.size == 0 or np.max(tail) < 1e-14:
                break
            r += 1
        stencil = np.empty(2 * r + 1)
        for m in range(-r, r + 1):
            stencil[m + r] = c[m % self.n]
        return stencil, r

    def run(
        self,
        eta0: np.ndarray,
        rng: np.random.Generator,
        snapshot_times: np.ndarray,
    ) -> Trajectory:
        eta = eta0.astype(float).copy()
        snap = np.asarray(snapshot_times, dtype=float)
        snaps = np.empty((len(snap), self.n))
        t = 0.0
        n_ex = 0
        for i, ts in enumerate(snap):
            delta = ts - t
            if delta > 1e-15:
                nw = max(1, int(np.ceil(delta / self.h)))
                hw = delta / nw
                stencil, r = self._half_stencil(hw)
                if 2 * r + 1 >= self.n:  # angle too large: exact FFT windows
                    for _ in range(nw):
                        n_swaps = int(rng.poisson(self.rate * hw))
                        eta = self._rotate(eta, hw / 2)
                        if n_swaps:
                            _engines.apply_swaps(
                                eta, rng.integers(0, self.n, size=n_swaps)
                            )
                            n_ex += n_swaps
                        eta = self._rotate(eta, hw / 2)
                else:
                    # chunk the swap buffers to a few million events
                    per_win = max(self.rate * hw, 1.0)
                    chunk = max(1, int(4e6 / per_win))
                    done = 0
                    while done < nw:
                        take = min(chunk, nw - done)
                        counts = rng.poisson(self.rate * hw, size=take).astype(np.int64)
                        bonds = rng.integers(0, self.n, size=int(counts.sum()))
                        _engines.window_walk(eta, stencil, r, counts, bonds)
                        n_ex += int(counts.sum())
                        done += take
                t = ts
            snaps[i] = eta
        return Trajectory(snap, snaps, n_exchanges=n_ex, meta={"engine": "window-fft"})
