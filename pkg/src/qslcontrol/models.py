"""
Phase-controlled model systems and piecewise-constant propagation.

All times are in units of ``1 / omega`` when ``omega = 1``. The two-level and
three-level models use ``H(alpha) = (omega / 2)(cos(alpha) G_A + sin(alpha) G_B)``;
the spin-J model uses ``H(alpha) = omega (cos(alpha) J_x + sin(alpha) J_y)``.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .lie_toolkit import appendix_a_basis, su3_control_generators
from .operator_core import (
    expm_hermitian,
    expm_hermitian_batch,
    pauli_matrices,
    spin_matrices,
)

MODEL_LABELS = ("su2", "su3", "spinJ")


@dataclass(frozen=True)
class PhaseControlModel:
    label: str
    g_a: np.ndarray = field(repr=False)
    g_b: np.ndarray = field(repr=False)
    omega: float = 1.0
    prefactor: float = 0.5
    j: Optional[float] = None
    spectrum: np.ndarray = field(init=False, repr=False, compare=False)
    constant_spectrum: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w0 = np.linalg.eigvalsh(self.hamiltonian(0.0))
        probes = (0.37, 1.9, -2.6)
        same = all(np.allclose(np.linalg.eigvalsh(self.hamiltonian(a)), w0, atol=1e-12) for a in probes)
        object.__setattr__(self, "spectrum", w0)
        object.__setattr__(self, "constant_spectrum", bool(same))

    @property
    def dim(self) -> int:
        return self.g_a.shape[0]

    @property
    def amplitude(self) -> float:
        """Overall factor multiplying ``cos(alpha) G_A + sin(alpha) G_B``."""
        return self.prefactor * self.omega

    @property
    def delta_eps_bar(self) -> float:
        """Exact (alpha independent) spectral width of ``H``."""
        return float(self.spectrum[-1] - self.spectrum[0])

    @property
    def hnorm_bar(self) -> float:
        """Exact (alpha independent) Hilbert-Schmidt norm of ``H``."""
        return float(np.linalg.norm(self.hamiltonian(0.0)))

    def hamiltonian(self, alpha: float) -> np.ndarray:
        return self.amplitude * (np.cos(alpha) * self.g_a + np.sin(alpha) * self.g_b)

    def hamiltonians(self, alphas) -> np.ndarray:
        a = np.asarray(alphas, dtype=float)[:, None, None]
        return self.amplitude * (np.cos(a) * self.g_a + np.sin(a) * self.g_b)

    def dhamiltonians(self, alphas) -> np.ndarray:
        """``dH / d alpha`` at each alpha."""
        a = np.asarray(alphas, dtype=float)[:, None, None]
        return self.amplitude * (-np.sin(a) * self.g_a + np.cos(a) * self.g_b)

    def to_dict(self) -> dict:
        out = {"label": self.label, "omega": self.omega}
        if self.j is not None:
            out["J"] = self.j
        return out


def su2_model(omega: float = 1.0) -> PhaseControlModel:
    sx, sy, _ = pauli_matrices()
    return PhaseControlModel("su2", sx, sy, omega=omega)


def su3_model(omega: float = 1.0) -> PhaseControlModel:
    la, lb = su3_control_generators()
    return PhaseControlModel("su3", la, lb, omega=omega)


def spin_model(j: float, omega: float = 1.0) -> PhaseControlModel:
    jx, jy, _ = spin_matrices(j)
    return PhaseControlModel("spinJ", jx, jy, omega=omega, prefactor=1.0, j=j)


def model_from_dict(spec: dict) -> PhaseControlModel:
    label = spec.get("label")
    omega = float(spec.get("omega", 1.0))
    if label == "su2":
        return su2_model(omega)
    if label == "su3":
        return su3_model(omega)
    if label == "spinJ":
        if "J" not in spec:
            raise ValueError("spinJ model needs J")
        return spin_model(float(spec["J"]), omega)
    raise ValueError(f"unknown model label {label!r}")


def hamiltonian_at(model: PhaseControlModel, alpha: float) -> np.ndarray:
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return model.hamiltonian(alpha)


# =============================================================================
# Control fields and propagation
# =============================================================================

@dataclass
class ControlField:
    """Piecewise-constant phase ``alpha_k`` on ``n_steps`` equal steps of ``[0, total_time]``."""

    values: np.ndarray
    total_time: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size < 1:
            raise ValueError("control field needs at least one step")
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")

    @property
    def n_steps(self) -> int:
        return self.values.size

    @property
    def dt(self) -> float:
        return self.total_time / self.n_steps

    def to_dict(self) -> dict:
        return {"n_steps": self.n_steps, "total_time": self.total_time, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ControlField":
        f = cls(np.asarray(d["values"], dtype=float), float(d["total_time"]))
        if "n_steps" in d and int(d["n_steps"]) != f.n_steps:
            raise ValueError("n_steps does not match the number of values")
        return f


def step_unitaries(model: PhaseControlModel, field_: ControlField) -> np.ndarray:
    """Stack of ``exp(-i H(alpha_k) dt)``, one per step."""
    hs = model.hamiltonians(field_.values)
    return expm_hermitian_batch(hs, np.full(field_.n_steps, field_.dt))


def propagate(model: PhaseControlModel, field_: ControlField, trajectory: bool = False):
    """
    Time-ordered product ``U(T) = U_N ... U_2 U_1`` with step 1 applied first.

    With ``trajectory=True`` also return the list ``[U(t_1), ..., U(t_N)]``.
    """
    steps = step_unitaries(model, field_)
    u = np.eye(model.dim, dtype=complex)
    traj = []
    for s in steps:
        u = s @ u
        if trajectory:
            traj.append(u)
    return (u, traj) if trajectory else u


# =============================================================================
# Targets
# =============================================================================

@dataclass(frozen=True)
class TargetSpec:
    """
    A target unitary: ``Vn`` (rotation about unit axis ``n``) or ``VX``
    (three-level element ``X`` in ``A..H``); ``phi`` in ``[0, pi]``.
    """

    family: str
    phi: float
    axis: Union[Tuple[float, float, float], None] = None
    label: Optional[str] = None
    j: Optional[float] = None

    def describe(self) -> str:
        if self.family == "VX":
            return f"V{self.label}({self.phi:g})"
        return f"Vn(n={self.axis}, {self.phi:g})"


AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


def _check_phi(phi: float) -> None:
    if not (0.0 <= phi <= np.pi + 1e-12):
        raise ValueError(f"phi must lie in [0, pi], got {phi}")


def target(spec: TargetSpec) -> np.ndarray:
    """Matrix of a target: ``exp(-i sigma_n phi / 2)``, ``exp(-i J_n phi)`` or ``exp(-i lambda_X phi)``."""
    _check_phi(spec.phi)
    if spec.family == "Vn":
        n = np.asarray(spec.axis, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("rotation axis must be a unit vector")
        if spec.j is None:
            gen = sum(c * s for c, s in zip(n, pauli_matrices())) / 2
        else:
            gen = sum(c * s for c, s in zip(n, spin_matrices(spec.j)))
        return expm_hermitian(gen, spec.phi)
    if spec.family == "VX":
        basis = appendix_a_basis()
        if spec.label not in basis:
            raise ValueError(f"unknown three-level target label {spec.label!r}")
        return expm_hermitian(basis[spec.label], spec.phi)
    raise ValueError(f"unknown target family {spec.family!r}")


def target_for(model: PhaseControlModel, name: str, phi: float) -> np.ndarray:
    """Shorthand used by the CLI: ``name`` is an axis (x, y, z) or a label (A..H)."""
    if model.label == "su3":
        return target(TargetSpec("VX", phi, label=name))
    if name not in AXES:
        raise ValueError(f"unknown axis {name!r}")
    return target(TargetSpec("Vn", phi, axis=AXES[name], j=model.j))


def random_field(n_steps: int, total_time: float, rng: np.random.Generator) -> ControlField:
    return ControlField(rng.uniform(-np.pi, np.pi, n_steps), total_time)


def split_field(field_: ControlField, k: int) -> List[ControlField]:
    """Split after step ``k`` into two fields with the same step length."""
    dt = field_.dt
    return [ControlField(field_.values[:k], dt * k), ControlField(field_.values[k:], dt * (field_.n_steps - k))]


def constant_field(alpha: float, n_steps: int, total_time: float) -> ControlField:
    return ControlField(np.full(n_steps, float(alpha)), total_time)


def integrate_dense(model: PhaseControlModel, field_: ControlField) -> np.ndarray:
    """Reference propagator from an adaptive ODE solver, step by step; for regression tests."""
    from scipy.integrate import solve_ivp

    d = model.dim
    hs = model.hamiltonians(field_.values)
    u = np.eye(d, dtype=complex)
    for h in hs:
        sol = solve_ivp(
            lambda t, y, h=h: (-1j * h @ y.reshape(d, d)).ravel(),
            (0.0, field_.dt), u.ravel(), method="DOP853", rtol=1e-12, atol=1e-13,
        )
        u = sol.y[:, -1].reshape(d, d)
    return u
