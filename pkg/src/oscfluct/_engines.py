"""Numba kernels for the event-driven chain dynamics.

The chain is a superposition of a bond-exchange Poisson process (total rate
n*theta/2, uniform bond) and a deterministic flow driven by the potential.
Between events the flow is integrated with an embedded Dormand-Prince 5(4)
pair under a local tolerance; exchange events swap two entries verbatim.

Randomness comes from a hand-rolled xoshiro256++ stream seeded through
splitmix64, so trajectories are reproducible from a single uint64 seed and
independent streams never share low-entropy state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

FAMILY_HARMONIC = 0
FAMILY_FPU = 1
FAMILY_TODA = 2

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    ]
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_BERR = _DP_B5 - _DP_B4


@njit(cache=True, inline="always")
def _splitmix64(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _rng_init(seed):
    s = np.empty(4, dtype=np.uint64)
    z = np.uint64(seed)
    for i in range(4):
        z = (z + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
        s[i] = _splitmix64(z)
    return s


@njit(cache=True, inline="always")
def _rotl(x, k):
    return ((x << np.uint64(k)) | (x >> np.uint64(64 - k))) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )


@njit(cache=True, inline="always")
def _rng_next(s):
    # xoshiro256++
    result = (_rotl((s[0] + s[3]) & np.uint64(0xFFFFFFFFFFFFFFFF), 23) + s[0]) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    t = (s[1] << np.uint64(17)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True, inline="always")
def _uniform(s):
    return (_rng_next(s) >> np.uint64(11)) * 1.1102230246251565e-16  # 2^-53


@njit(cache=True, inline="always")
def _xi(family, fpu_alpha, beta, y):
    """xi = V_beta'(y) = V'(beta*y)/beta for the built-in families."""
    if family == FAMILY_HARMONIC:
        return y
    if family == FAMILY_FPU:
        return y + 3.0 * fpu_alpha * beta * y * y + beta * beta * y * y * y
    # Toda
    return -np.expm1(-beta * y) / beta


@njit(cache=True)
def _drift(eta, out, pref, family, fpu_alpha, beta):
    n = eta.shape[0]
    xim1 = _xi(family, fpu_alpha, beta, eta[n - 1])
    xi0 = _xi(family, fpu_alpha, beta, eta[0])
    xi_prev = xim1
    xi_cur = xi0
    for j in range(n):
        xi_next = _xi(family, fpu_alpha, beta, eta[(j + 1) % n]) if j + 1 < n else xi0
        out[j] = pref * (xi_prev - xi_next)
        xi_prev = xi_cur
        xi_cur = xi_next


@njit(cache=True)
def _dp45_advance(eta, dt, pref, family, fpu_alpha, beta, tol, k, work, a, b5, berr):
    """Advance the drift flow by dt with adaptive DP5(4); returns step count.

    Raises on step underflow (stiff regime: reduce theta or n).
    """
    n = eta.shape[0]
    remaining = dt
    h = dt
    steps = 0
    while remaining > 0.0:
        if h > remaining:
            h = remaining
        _drift(eta, k[0], pref, family, fpu_alpha, beta)
        for s in range(1, 6):
            for j in range(n):
                acc = 0.0
                for m in range(s):
                    acc += a[s, m] * k[m, j]
                work[j] = eta[j] + h * acc
            _drift(work, k[s], pref, family, fpu_alpha, beta)
        # 5th-order solution, then the FSAL stage for the embedded estimate
        for j in range(n):
            acc = 0.0
            for m in range(6):
                acc += b5[m] * k[m, j]
            work[j] = eta[j] + h * acc
        _drift(work, k[6], pref, family, fpu_alpha, beta)
        err = 0.0
        for j in range(n):
            e = 0.0
            for m in range(7):
                e += berr[m] * k[m, j]
            sc = tol + tol * abs(eta[j])
            err += (h * e / sc) ** 2
        err = np.sqrt(err / n)
        if err <= 1.0:
            for j in range(n):
                eta[j] = work[j]
            remaining -= h
            steps += 1
            fac = 2.0 if err == 0.0 else min(2.0, max(0.2, 0.9 * err ** (-0.2)))
            h *= fac
        else:
            h *= max(0.2, 0.9 * err ** (-0.2))
        if h < 1e-15 * max(dt, 1e-300) and remaining > 0.0:
            raise ValueError("ODE step underflow: stiff drift, reduce theta or n")
    return steps


@njit(cache=True)
def simulate_chain(
    eta0,
    family,
    fpu_alpha,
    beta,
    pref,
    rate,
    snap_times,
    ode_tol,
    seed,
):
    """Event-driven trajectory; returns (snapshots, n_exchanges, n_ode_steps).

    pref = theta(n)*alpha_n multiplies the drift; rate = n*theta(n)/2 is the
    total exchange rate. Snapshots are eta at the requested macro times.
    """
    n = eta0.shape[0]
    eta = eta0.copy()
    s = _rng_init(seed)
    nsnap = snap_times.shape[0]
    snaps = np.empty((nsnap, n))
    k = np.empty((7, n))
    work = np.empty(n)
    a = _DP_A
    b5 = _DP_B5
    berr = _DP_BERR
    t = 0.0
    isnap = 0
    n_ex = 0
    n_steps = 0
    have_drift = pref != 0.0
    while isnap < nsnap:
        u = _uniform(s)
        dt = -np.log(1.0 - u) / rate if rate > 0.0 else np.inf
        t_event = t + dt
        while isnap < nsnap and snap_times[isnap] <= t_event:
            if have_drift:
                n_steps += _dp45_advance(
                    eta, snap_times[isnap] - t, pref, family, fpu_alpha, beta,
                    ode_tol, k, work, a, b5, berr,
                )
            t = snap_times[isnap]
            for j in range(n):
                snaps[isnap, j] = eta[j]
            isnap += 1
        if isnap >= nsnap:
            break
        if have_drift:
            n_steps += _dp45_advance(
                eta, t_event - t, pref, family, fpu_alpha, beta,
                ode_tol, k, work, a, b5, berr,
            )
        t = t_event
        bond = int(_rng_next(s) % np.uint64(n))
        tmp = eta[bond]
        eta[bond] = eta[(bond + 1) % n]
        eta[(bond + 1) % n] = tmp
        n_ex += 1
    return snaps, n_ex, n_steps


@njit(cache=True)
def exchange_only_qv(
    eta0, zeta0, w1, w2, w3, rate, t_end, seed
):
    """Pure-exchange path integral of the three quadratic-variation sums.

    Accumulates  int_0^T sum_j (eta_j - eta_{j+1})^2 w1_j ds  (and the zeta
    and cross analogues) exactly, with O(1) work per exchange event.
    Returns (I1, I2, I3, n_events).
    """
    n = eta0.shape[0]
    eta = eta0.copy()
    zeta = zeta0.copy()
    s = _rng_init(seed)

    S1 = 0.0
    S2 = 0.0
    S3 = 0.0
    for j in range(n):
        jp = (j + 1) % n
        de = eta[j] - eta[jp]
        dz = zeta[j] - zeta[jp]
        S1 += de * de * w1[j]
        S2 += dz * dz * w2[j]
        S3 += de * dz * w3[j]

    I1 = 0.0
    I2 = 0.0
    I3 = 0.0
    t = 0.0
    n_ev = 0
    while True:
        u = _uniform(s)
        dt = -np.log(1.0 - u) / rate
        last = t + dt >= t_end
        if last:
            dt = t_end - t
        I1 = I1 + S1 * dt
        I2 = I2 + S2 * dt
        I3 = I3 + S3 * dt
        if last:
            break
        t += dt
        b = int(_rng_next(s) % np.uint64(n))
        bp = (b + 1) % n
        # bonds b-1, b, b+1 change; subtract old, swap, add new
        for jj in range(-1, 2):
            j = (b + jj) % n
            jp = (j + 1) % n
            de = eta[j] - eta[jp]
            dz = zeta[j] - zeta[jp]
            S1 -= de * de * w1[j]
            S2 -= dz * dz * w2[j]
            S3 -= de * dz * w3[j]
        tmp = eta[b]
        eta[b] = eta[bp]
        eta[bp] = tmp
        tmp = zeta[b]
        zeta[b] = zeta[bp]
        zeta[bp] = tmp
        for jj in range(-1, 2):
            j = (b + jj) % n
            jp = (j + 1) % n
            de = eta[j] - eta[jp]
            dz = zeta[j] - zeta[jp]
            S1 += de * de * w1[j]
            S2 += dz * dz * w2[j]
            S3 += de * dz * w3[j]
        n_ev += 1
    return I1, I2, I3, n_ev


@njit(cache=True)
def exchange_only_bg2(xi_bar0, grad_phi, ell, rate, t_end, seed):
    """Pure-exchange time integral of
    sum_j ( xibar_j xibar_{j+1} - (avg_{i<ell} xibar_{j+i})^2 ) * grad_phi_j.

    Maintains the lattice sum incrementally: each exchange touches two sites,
    so the nearest-neighbour term updates in O(1) and the ell-block averages
    in O(ell).  Returns the time integral F = int_0^T (...) ds.
    """
    n = xi_bar0.shape[0]
    xb = xi_bar0.copy()
    s = _rng_init(seed)

    # block sums A_j = sum_{i=0}^{ell-1} xb_{j+i}
    A = np.empty(n)
    acc = 0.0
    for i in range(ell):
        acc += xb[i]
    for j in range(n):
        A[j] = acc
        acc += xb[(j + ell) % n] - xb[j]

    inv_ell2 = 1.0 / float(ell * ell)
    F = 0.0
    for j in range(n):
        F += (xb[j] * xb[(j + 1) % n] - A[j] * A[j] * inv_ell2) * grad_phi[j]

    out = 0.0
    t = 0.0
    while True:
        u = _uniform(s)
        dt = -np.log(1.0 - u) / rate
        last = t + dt >= t_end
        if last:
            dt = t_end - t
        out = out + F * dt
        if last:
            break
        t += dt
        b = int(_rng_next(s) % np.uint64(n))
        bp = (b + 1) % n
        d = xb[bp] - xb[b]  # change at site b; site bp changes by -d
        if d != 0.0:
            # remove affected terms: pair terms at bonds b-1, b, b+1 and
            # block terms A_j for j in (b-ell, b] and (bp-ell, bp]
            for jj in range(-1, 2):
                j = (b + jj) % n
                F -= xb[j] * xb[(j + 1) % n] * grad_phi[j]
            for i in range(ell):
                j = (b - i) % n
                F += A[j] * A[j] * inv_ell2 * grad_phi[j]
                A[j] += d
                F -= A[j] * A[j] * inv_ell2 * grad_phi[j]
            for i in range(ell):
                j = (bp - i) % n
                F += A[j] * A[j] * inv_ell2 * grad_phi[j]
                A[j] -= d
                F -= A[j] * A[j] * inv_ell2 * grad_phi[j]
            tmp = xb[b]
            xb[b] = xb[bp]
            xb[bp] = tmp
            for jj in range(-1, 2):
                j = (b + jj) % n
                F += xb[j] * xb[(j + 1) % n] * grad_phi[j]
    return out


@njit(cache=True)
def apply_swaps(vec, bonds):
    for i in range(bonds.shape[0]):
        b = bonds[i]
        bp = b + 1 if b + 1 < vec.shape[0] else 0
        tmp = vec[b]
        vec[b] = vec[bp]
        vec[bp] = tmp


@njit(cache=True)
def _circ_stencil(w, out, stencil, r):
    """out = stencil (*) w, circular, support -r..r (stencil index m+r)."""
    n = w.shape[0]
    for j in range(n):
        acc = 0.0
        for m in range(-r, r + 1):
            jm = j - m
            if jm < 0:
                jm += n
            elif jm >= n:
                jm -= n
            acc += stencil[m + r] * w[jm]
        out[j] = acc


@njit(cache=True)
def window_walk(w, stencil, r, counts, bonds):
    """Strang windows entirely in compiled code: half-rotation (localized
    circulant stencil), the window's swap batch, half-rotation."""
    n = w.shape[0]
    tmp = np.empty(n)
    pos = 0
    for iw in range(counts.shape[0]):
        _circ_stencil(w, tmp, stencil, r)
        k = counts[iw]
        for i in range(pos, pos + k):
            b = bonds[i]
            bp = b + 1 if b + 1 < n else 0
            t = tmp[b]
            tmp[b] = tmp[bp]
            tmp[bp] = t
        pos += k
        _circ_stencil(tmp, w, stencil, r)
