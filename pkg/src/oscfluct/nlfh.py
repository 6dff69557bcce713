"""Mode-coupling calculator: thermodynamic map, flux Jacobian, normal modes,
Hessians, coupling matrices and the universality-class lookup.

The single-site measure is re-parametrized as mu_{tau,b} with density
proportional to exp(-b V_beta(x) + tau x); (tau, b) are solved from the
density constraints E[eta] = v, E[zeta] = e.  At beta = 0 the measure is
N(tau/b, 1/b) and the map has the closed form b = (2e - v^2)^{-1},
tau = v (2e - v^2)^{-1}.

The bond currents of volume and energy read off the generator:
j^v = theta*alpha (xi_j + xi_{j+1}), j^e = theta*alpha xi_j xi_{j+1}, so the
average fluxes are theta*alpha (2 m, m^2) with m(v, e) = E[xi] = tau/b.
Derivatives of m in (v, e) are computed exactly through the inverse-function
theorem with moment-cumulant identities (no finite differences of root
finds, whose noise would swamp the 1e-6 structure checks).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize

from .errors import AmbiguousClassificationError, DegenerateModesError
from .gibbs import GibbsParams, moment
from .potential import PotentialSpec, eval_scaled

__all__ = [
    "UniClass",
    "ThermoPoint",
    "ModeCouplingReport",
    "thermo_map",
    "mode_coupling",
    "classify",
    "classification_table",
]


class UniClass(Enum):
    KPZ = "KPZ"
    MOD_KPZ = "mod-KPZ"
    DIFF = "diffusive"
    LEVY_32 = "3/2-Levy"
    LEVY_53 = "5/3-Levy"
    GOLD_LEVY = "Gold-Levy"
    KPZ_FP = "KPZ fixed point"  # appears in crossover diagrams only


@dataclass(frozen=True)
class ThermoPoint:
    v: float
    e: float
    tau: float
    b: float
    beta: float

    def measure(self) -> GibbsParams:
        if self.beta == 0.0:
            raise ValueError("beta=0 point has no finite-beta measure object")
        return GibbsParams(beta=self.beta, b=self.b, lam=self.tau)


@dataclass(frozen=True)
class ModeCouplingReport:
    flux: np.ndarray          # (2,)
    J: np.ndarray             # (2, 2)
    v_plus: float             # sound velocity (nonzero eigenvalue)
    v_minus: float            # heat velocity (identically zero)
    R: np.ndarray
    Rinv: np.ndarray
    modes: tuple[tuple[float, float], tuple[float, float]]  # rows of R
    H1: np.ndarray
    H2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    class_pair: tuple[UniClass, UniClass] | None


def _beta0_closed_form(v: float, e: float) -> tuple[float, float]:
    d = 2.0 * e - v * v
    if d <= 0:
        raise ValueError(f"need 2e - v^2 > 0, got {d}")
    return v / d, 1.0 / d


def thermo_map(v: float, e: float, spec: PotentialSpec, beta: float) -> ThermoPoint:
    """Solve E[eta] = v, E[zeta] = e for (tau, b).

    beta = 0 uses the Gaussian closed form; otherwise a 2-d root find with
    quadrature moments, warm-started from the closed form.
    """
    tau0, b0 = _beta0_closed_form(v, e)
    if beta == 0.0:
        return ThermoPoint(v, e, tau0, b0, 0.0)

    def target(x):
        tau, b = x
        if b <= 0:
            return [1e6, 1e6]
        gp = GibbsParams(beta=beta, b=b, lam=tau)
        return [
            moment(gp, spec, lambda y: y) - v,
            moment(gp, spec, lambda y: eval_scaled(spec, beta, 0, y)) - e,
        ]

    sol = optimize.root(target, x0=[tau0, b0], method="hybr", tol=1e-12)
    if not sol.success or np.max(np.abs(sol.fun)) > 1e-8:
        raise DegenerateModesError(
            f"thermodynamic map did not converge at (v={v}, e={e}, beta={beta}); "
            f"last iterate {sol.x}, residual {sol.fun}"
        )
    tau, b = map(float, sol.x)
    return ThermoPoint(v, e, tau, b, beta)


def _joint_cumulants(point: ThermoPoint, spec: PotentialSpec):
    """Central moments of (x, V_beta(x)) up to third order, by quadrature."""
    gp = point.measure()
    beta = point.beta

    def V(y):
        return eval_scaled(spec, beta, 0, y)

    ex = moment(gp, spec, lambda y: y)
    ev = moment(gp, spec, V)
    cm = {}
    for name, f in {
        "xx": lambda y: (y - ex) ** 2,
        "xV": lambda y: (y - ex) * (V(y) - ev),
        "VV": lambda y: (V(y) - ev) ** 2,
        "xxx": lambda y: (y - ex) ** 3,
        "xxV": lambda y: (y - ex) ** 2 * (V(y) - ev),
        "xVV": lambda y: (y - ex) * (V(y) - ev) ** 2,
        "VVV": lambda y: (V(y) - ev) ** 3,
    }.items():
        cm[name] = moment(gp, spec, f)
    return cm


def _m_derivatives(point: ThermoPoint, spec: PotentialSpec):
    """m = tau/b and its first/second derivatives in (v, e).

    The map F: (tau, b) -> (v, e) has exact derivative formulas: the score of
    the density is (x - E x) in tau and -(V - E V) in b, so every derivative
    of a moment appends one central slot.  The inverse-map Hessian follows
    from differentiating F(G(y)) = y twice.
    """
    tau, b = point.tau, point.b
    m = tau / b
    if point.beta == 0.0:
        # m(v, e) = v identically: E[xi] = E[eta] for the Gaussian family
        return m, np.array([1.0, 0.0]), np.zeros((2, 2))

    c = _joint_cumulants(point, spec)
    # Jacobian of F, columns (d/dtau, d/db)
    JF = np.array([[c["xx"], -c["xV"]], [c["xV"], -c["VV"]]])
    # Hessians of v(tau,b) and e(tau,b)
    Hv = np.array([[c["xxx"], -c["xxV"]], [-c["xxV"], c["xVV"]]])
    He = np.array([[c["xxV"], -c["xVV"]], [-c["xVV"], c["VVV"]]])
    det = np.linalg.det(JF)
    if abs(det) < 1e-14:
        raise DegenerateModesError("susceptibility matrix is singular")
    A = np.linalg.inv(JF)  # Jacobian of the inverse map (v,e) -> (tau,b)

    Jm_x = np.array([1.0 / b, -tau / b**2])        # dm/d(tau,b)
    Hm_x = np.array([[0.0, -1.0 / b**2], [-1.0 / b**2, 2.0 * tau / b**3]])
    grad = Jm_x @ A                                 # dm/d(v,e)
    # Hess_(v,e) m = A^T (Hm - grad_v Hv - grad_e He) A
    hess = A.T @ (Hm_x - grad[0] * Hv - grad[1] * He) @ A
    return m, grad, 0.5 * (hess + hess.T)


_ZERO_FRAC = 1e-6
_AMBIG_FRAC = 1e-3


def classify(G1: np.ndarray, G2: np.ndarray) -> tuple[UniClass, UniClass]:
    """Universality-class pair from the zero pattern of
    (G1_11, G1_22, G2_11, G2_22), reproducing the mode-coupling tables."""
    scale = max(float(np.max(np.abs(G1))), float(np.max(np.abs(G2))), 1e-300)
    flags = []
    for entry in (G1[0, 0], G1[1, 1], G2[0, 0], G2[1, 1]):
        a = abs(entry)
        if a < _ZERO_FRAC * scale:
            flags.append(0)
        elif a < _AMBIG_FRAC * scale:
            raise AmbiguousClassificationError(
                f"coupling entry {entry:.3e} sits between {_ZERO_FRAC:g} and "
                f"{_AMBIG_FRAC:g} of the matrix scale {scale:.3e}"
            )
        else:
            flags.append(1)
    key = tuple(flags)
    table = classification_table()
    if key not in table:
        raise AmbiguousClassificationError(
            f"pattern (G1_11, G1_22, G2_11, G2_22) = {key} is not covered by "
            "the two-conservation-law tables"
        )
    return table[key]


def classification_table() -> dict[tuple[int, int, int, int], tuple[UniClass, UniClass]]:
    """All patterns of (G1_11, G1_22, G2_11, G2_22) covered by the tables."""
    K, D, M = UniClass.KPZ, UniClass.DIFF, UniClass.MOD_KPZ
    L32, L53, GL = UniClass.LEVY_32, UniClass.LEVY_53, UniClass.GOLD_LEVY
    t: dict[tuple[int, int, int, int], tuple[UniClass, UniClass]] = {}
    # G1_11 != 0 and G2_22 != 0: both modes KPZ, other entries irrelevant
    for g122 in (0, 1):
        for g211 in (0, 1):
            t[(1, g122, g211, 1)] = (K, K)
    # G1_11 != 0, G2_22 = 0
    t[(1, 0, 1, 0)] = (K, L53)
    t[(1, 1, 1, 0)] = (K, L53)
    t[(1, 1, 0, 0)] = (M, D)
    t[(1, 0, 0, 0)] = (K, D)
    # G1_11 = 0, G2_22 = 0
    t[(0, 1, 1, 0)] = (GL, GL)
    t[(0, 1, 0, 0)] = (L32, D)
    t[(0, 0, 1, 0)] = (D, L32)
    t[(0, 0, 0, 0)] = (D, D)
    return t


def mode_coupling(
    point: ThermoPoint,
    spec: PotentialSpec,
    theta_alpha: float = 1.0,
    classify_modes: bool = True,
) -> ModeCouplingReport:
    """Flux Jacobian, normal modes and coupling matrices at a state point.

    theta_alpha multiplies every current (the derivation drops it mid-stream
    and reinstates it in examples; here it is carried explicitly: flux, J,
    velocities, Hessians and G all scale linearly with it).

    classify_modes=False skips the universality lookup; crossover scans near
    a class boundary would otherwise trip the grey-zone error by design.
    """
    m, grad, hess_m = _m_derivatives(point, spec)
    m_v, m_e = grad
    flux = theta_alpha * np.array([2.0 * m, m * m])
    J = 2.0 * theta_alpha * np.array([[m_v, m_e], [m * m_v, m * m_e]])
    v_plus = 2.0 * theta_alpha * (m_v + m * m_e)  # sound; the other is 0
    if abs(v_plus) < 1e-10 * max(1.0, abs(theta_alpha)):
        raise DegenerateModesError("sound and heat velocities coincide")

    # left eigenvectors of J: sound (m_v, m_e) scaled to (1, *),
    # heat (m, -1) exactly (the second flux is a function of the first)
    if abs(m_v) < 1e-12:
        raise DegenerateModesError("cannot normalize the sound mode: m_v ~ 0")
    R = np.array([[1.0, m_e / m_v], [m, -1.0]])
    Rinv = np.linalg.inv(R)

    H1 = 2.0 * theta_alpha * hess_m
    hess_m2 = 2.0 * (np.outer(grad, grad) + m * hess_m)
    H2 = theta_alpha * hess_m2

    M1 = Rinv.T @ H1 @ Rinv
    M2 = Rinv.T @ H2 @ Rinv
    G1 = 0.5 * (R[0, 0] * M1 + R[0, 1] * M2)
    G2 = 0.5 * (R[1, 0] * M1 + R[1, 1] * M2)

    return ModeCouplingReport(
        flux=flux,
        J=J,
        v_plus=float(v_plus),
        v_minus=0.0,
        R=R,
        Rinv=Rinv,
        modes=((R[0, 0], R[0, 1]), (R[1, 0], R[1, 1])),
        H1=H1,
        H2=H2,
        G1=G1,
        G2=G2,
        class_pair=classify(G1, G2) if classify_modes else None,
    )
