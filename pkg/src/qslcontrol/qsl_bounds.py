"""
Geometric speed-limit times for unitary targets.

``tau1 = S1(V, I) / delta_eps_bar`` and ``tau2 = (sqrt(d) / 2) S2(V, I) / hnorm_bar``,
where the ceilings bound the spectral width and the Hilbert-Schmidt norm of
the Hamiltonian over the whole evolution. Both depend on ``V`` only through
its distance to the identity.
"""

import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Tuple

import numpy as np

from .metrics import delta_epsilon, fubini_study, hs_speed, s1_distance, s2_distance, state_energy_dispersion
from .operator_core import as_unitary, expm_hermitian_batch


@dataclass(frozen=True)
class QslReport:
    s1: float
    s2: float
    tau1: float
    tau2: float

    @property
    def tau_unified(self) -> float:
        return max(self.tau1, self.tau2)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["tau_unified"] = self.tau_unified
        return out


def qsl_times(v, delta_eps_bar: float, hnorm_bar: float, d: int = None) -> QslReport:
    """Speed-limit times of the target ``v`` given ceilings on ``Delta epsilon`` and ``||H||``."""
    if not (delta_eps_bar > 0 and hnorm_bar > 0):
        raise ValueError("speed ceilings must be positive")
    v = as_unitary(v)
    d = v.shape[0] if d is None else d
    eye = np.eye(v.shape[0])
    s1 = s1_distance(v, eye)
    s2 = s2_distance(v, eye)
    return QslReport(s1, s2, s1 / delta_eps_bar, math.sqrt(d) / 2 * s2 / hnorm_bar)


def model_qsl(model, v) -> QslReport:
    """:func:`qsl_times` with the exact constant speeds of a phase-control model."""
    return qsl_times(v, model.delta_eps_bar, model.hnorm_bar, model.dim)


# =============================================================================
# Spin-J rotations
# =============================================================================

SERIES_CUTOFF = 1e-8


def _check_j(j: float) -> None:
    if j <= 0 or abs(2 * j - round(2 * j)) > 1e-12:
        raise ValueError(f"J must be a positive half-integer, got {j}")


def spinj_overlap(j: float, phi: float) -> float:
    """``|tr exp(-i J_n phi)| / (2J + 1)``, i.e. ``|sin((J + 1/2) phi) / ((2J + 1) sin(phi / 2))|``."""
    _check_j(j)
    # the modulus is 2 pi periodic; reduce so the series branch sits at zero
    phi = math.remainder(phi, 2 * math.pi)
    half = math.sin(phi / 2)
    if abs(half) < SERIES_CUTOFF:
        # removable singularity at phi = 0; second-order expansion of the Dirichlet kernel
        return abs(1.0 - j * (j + 1) * phi**2 / 6)
    return abs(math.sin((j + 0.5) * phi) / ((2 * j + 1) * half))


def spinj_distance(j: float, phi: float) -> float:
    """Trace distance ``S2`` between a spin-J rotation by ``phi`` and the identity."""
    c = min(1.0, max(0.0, spinj_overlap(j, phi)))
    return 2 * math.acos(c)


def spinj_hnorm(j: float, omega: float = 1.0) -> float:
    """``||H|| = omega sqrt(J(J+1)(2J+1)/3)`` for ``H = omega(cos a J_x + sin a J_y)``."""
    _check_j(j)
    return omega * math.sqrt(j * (j + 1) * (2 * j + 1) / 3)


def spinj_phi_perp(j: float) -> float:
    """Smallest rotation angle making the rotation orthogonal to the identity."""
    _check_j(j)
    return math.pi / (j + 0.5)


def spinj_tau2(j: float, phi: float, omega: float = 1.0) -> float:
    d = 2 * j + 1
    return math.sqrt(d) / 2 * spinj_distance(j, phi) / spinj_hnorm(j, omega)


def classical_limit_table(j_list: Iterable[float], omega: float = 1.0) -> List[Tuple[float, float]]:
    """``(J, tau2 at phi_perp(J))`` rows; the time column must decrease strictly with J."""
    js = list(j_list)
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ValueError("J list must be strictly ascending")
    rows = [(j, spinj_tau2(j, spinj_phi_perp(j), omega)) for j in js]
    taus = [t for _, t in rows]
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise AssertionError("speed-limit time is not strictly decreasing in J")
    return rows


def mandelstam_tamm_time(delta_e: float) -> float:
    """Orthogonalization time ``pi / (2 Delta E)`` for a time-independent Hamiltonian."""
    if delta_e <= 0:
        raise ValueError("energy spread must be positive")
    return math.pi / (2 * delta_e)


# =============================================================================
# Anandan-Aharonov budgets
# =============================================================================

@dataclass(frozen=True)
class AABudget:
    """Distance reached and the time-integrated speed that bounds it."""

    distance: float
    budget: float

    @property
    def holds(self) -> bool:
        return self.distance <= self.budget


def aa_budgets(hs: np.ndarray, dts, psi0=None) -> dict:
    """
    Distances and speed integrals for a piecewise-constant drive.

    During a constant step the energy spread of the state, the spectral
    width and the norm of ``H`` are all conserved, so the time integrals are
    exact sums over steps. Returns ``AABudget`` entries ``state`` (only with
    ``psi0``), ``s1`` and ``s2``.
    """
    hs = np.asarray(hs, dtype=complex)
    dts = np.broadcast_to(np.asarray(dts, dtype=float), (hs.shape[0],))
    d = hs.shape[1]
    steps = expm_hermitian_batch(hs, dts)
    u = np.eye(d, dtype=complex)
    psi = None if psi0 is None else np.asarray(psi0, dtype=complex)
    state_budget = 0.0
    for h, dt, s in zip(hs, dts, steps):
        if psi is not None:
            state_budget += 2 * state_energy_dispersion(h, psi) * dt
            psi = s @ psi
        u = s @ u
    eye = np.eye(d)
    out = {
        "s1": AABudget(s1_distance(u, eye), float(sum(delta_epsilon(h) * dt for h, dt in zip(hs, dts)))),
        "s2": AABudget(s2_distance(u, eye), float(sum(hs_speed(h, d) * dt for h, dt in zip(hs, dts)))),
    }
    if psi is not None:
        out["state"] = AABudget(fubini_study(psi0, psi), state_budget)
    return out
