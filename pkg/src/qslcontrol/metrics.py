"""
Distances between pure states and between unitaries, and the instantaneous
speeds that bound how fast those distances can grow.

The two unitary distances are

* ``s1_distance``: the worst case over input states of the Fubini-Study
  distance between ``U|psi>`` and ``V|psi>``. It reduces to the shortest arc
  on the unit circle covering all eigenphases of ``W = U^dagger V``.
* ``s2_distance``: ``2 arccos(|tr(U^dagger V)| / d)``.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .operator_core import (
    as_hermitian,
    as_unitary,
    eigenphases,
    hs_norm,
    spectral_width,
)

TWO_PI = 2 * np.pi
STATE_NORM_TOL = 1e-12


def _as_state(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).ravel()
    if abs(np.linalg.norm(v) - 1.0) > STATE_NORM_TOL:
        raise ValueError("state is not normalized")
    return v


def _clip_cos(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


# =============================================================================
# States
# =============================================================================

def fubini_study(psi1, psi2) -> float:
    """Fubini-Study distance ``2 arccos |<psi1|psi2>|``, in ``[0, pi]``."""
    a, b = _as_state(psi1), _as_state(psi2)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return float(2 * np.arccos(_clip_cos(abs(np.vdot(a, b)))))


def state_energy_dispersion(h, psi) -> float:
    """Standard deviation of ``H`` in the state ``psi``."""
    h = as_hermitian(h)
    v = _as_state(psi)
    if h.shape[0] != v.shape[0]:
        raise ValueError("dimension mismatch")
    hv = h @ v
    mean = np.vdot(v, hv).real
    second = np.vdot(hv, hv).real
    return float(np.sqrt(max(0.0, second - mean**2)))


# =============================================================================
# Covering arc
# =============================================================================

@dataclass(frozen=True)
class ArcResult:
    """
    Shortest closed arc containing a set of phases.

    ``extremal_indices`` are the positions (in the input list) of the phases
    at the two ends of the arc, i.e. on either side of the largest gap.
    """

    delta: float
    extremal_indices: Tuple[int, int]


def minimal_covering_arc(phases: Sequence[float]) -> ArcResult:
    """
    Length of the shortest arc of the unit circle containing every phase.

    The complement of the shortest covering arc is the largest gap between
    circularly consecutive phases, so ``delta = 2 pi - max_gap``.
    """
    p = np.asarray(phases, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("need at least one phase")
    order = np.argsort(p, kind="stable")
    s = p[order]
    gaps = np.empty_like(s)
    gaps[:-1] = np.diff(s)
    gaps[-1] = s[0] + TWO_PI - s[-1]
    k = int(np.argmax(gaps))
    # the arc starts right after the largest gap and ends right before it
    start = order[(k + 1) % s.size]
    end = order[k]
    delta = max(0.0, TWO_PI - float(gaps[k]))
    return ArcResult(delta=delta, extremal_indices=(int(start), int(end)))


# =============================================================================
# Unitaries
# =============================================================================

def _overlap(u, v) -> np.ndarray:
    u, v = as_unitary(u), as_unitary(v)
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    return u.conj().T @ v


def s1_distance(u, v) -> float:
    """Worst-case state distance ``min(delta, pi)`` where ``delta`` covers the eigenphases of ``U^dagger V``."""
    delta = minimal_covering_arc(eigenphases(_overlap(u, v))).delta
    return float(min(delta, np.pi))


def s2_distance(u, v) -> float:
    """Trace-overlap distance ``2 arccos(|tr(U^dagger V)| / d)``."""
    w = _overlap(u, v)
    return float(2 * np.arccos(_clip_cos(abs(np.trace(w)) / w.shape[0])))


def delta_epsilon(h) -> float:
    """Spectral width ``E_max - E_min``: the instantaneous speed for ``s1_distance``."""
    return spectral_width(h)


def hs_speed(h, d: int = None) -> float:
    """Instantaneous speed ``(2 / sqrt(d)) ||H||`` for ``s2_distance``."""
    h = as_hermitian(h)
    d = h.shape[0] if d is None else d
    return float(2 / np.sqrt(d) * hs_norm(h))


# =============================================================================
# Brute-force oracle
# =============================================================================

def _min_abs_expectation(w: np.ndarray, psi0: np.ndarray) -> float:
    """Local minimization of ``|<psi|W|psi>|^2`` over normalized states."""
    d = w.shape[0]

    def f(x):
        z = x[:d] + 1j * x[d:]
        n2 = np.vdot(z, z).real
        e = np.vdot(z, w @ z) / n2
        return abs(e) ** 2

    x0 = np.concatenate([psi0.real, psi0.imag])
    res = minimize(f, x0, method="BFGS", options={"gtol": 1e-14, "maxiter": 2000})
    return float(np.sqrt(max(res.fun, 0.0)))


def s1_bruteforce_oracle(u, v, n_samples: int, rng: np.random.Generator, n_polish: int = 3) -> float:
    """
    Estimate ``max_psi FS(U psi, V psi)`` directly by search over states.

    Samples Haar-random states, adds the equal superposition of every pair
    of eigenvectors of ``W = U^dagger V`` as candidates, then polishes the best
    few candidates with a local optimizer. Used as an independent check of
    :func:`s1_distance`.
    """
    if n_samples < 10_000:
        raise ValueError("oracle needs at least 1e4 samples")
    w = _overlap(u, v)
    d = w.shape[0]
    z = rng.standard_normal((n_samples, d)) + 1j * rng.standard_normal((n_samples, d))
    states = z / np.linalg.norm(z, axis=1, keepdims=True)

    _, vecs = np.linalg.eig(w)
    pairs = []
    for a in range(d):
        for b in range(a + 1, d):
            c = vecs[:, a] + vecs[:, b]
            pairs.append(c / np.linalg.norm(c))
    if pairs:
        states = np.vstack([states, np.array(pairs)])

    vals = np.abs(np.einsum("ni,ij,nj->n", states.conj(), w, states))
    best = np.argsort(vals)[:n_polish]
    m = float(vals[best[0]])
    for i in best:
        m = min(m, _min_abs_expectation(w, states[i]))
    return float(2 * np.arccos(_clip_cos(m)))
