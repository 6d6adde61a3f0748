"""
Dynamical Lie algebra of a set of control generators.

Elements are represented by Hermitian matrices ``X`` (the algebra element
being ``-iX``). Commutators are taken in the Hermitian form ``-i[X, Y]`` so
everything stays Hermitian. Basis elements are normalized to ``tr(X^2) = 1``.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .operator_core import (
    as_hermitian,
    gell_mann_matrices,
    hermitian_commutator,
    hs_inner,
    hs_norm,
)

DEFAULT_TOL = 1e-10


@dataclass
class DepthTaggedElement:
    """
    One orthonormal basis element of the algebra.

    ``element`` is the Gram-Schmidt orthonormalized matrix, ``raw`` the unit
    norm direction of the nested commutator that produced it, and ``eta``
    their overlap ``tr(element raw)``.
    """

    element: np.ndarray
    depth: int
    expression: str
    raw: np.ndarray
    eta: float = 1.0


@dataclass
class AlgebraReport:
    basis: List[DepthTaggedElement]
    hilbert_dim: int
    tol: float = DEFAULT_TOL
    structure_constants: Dict[Tuple[int, int, int], float] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def fully_controllable(self) -> bool:
        return self.dimension == self.hilbert_dim**2 - 1

    @property
    def depths(self) -> List[int]:
        return [b.depth for b in self.basis]

    def matrices(self) -> List[np.ndarray]:
        return [b.element for b in self.basis]

    def index(self, expression: str) -> int:
        for i, b in enumerate(self.basis):
            if b.expression == expression:
                return i
        raise KeyError(expression)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "fully_controllable": self.fully_controllable,
            "elements": [
                {
                    "depth": b.depth,
                    "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in b.element],
                    "provenance": b.expression,
                    "eta": float(b.eta),
                }
                for b in self.basis
            ],
            "structure_constants": [
                {"a": a, "b": b, "c": c, "f": f}
                for (a, b, c), f in sorted(self.structure_constants.items())
            ],
        }


def _basis_matrices(existing) -> List[np.ndarray]:
    return [e.element if isinstance(e, DepthTaggedElement) else e for e in existing]


def _residual(raw: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    r = raw.copy()
    # two passes of classical Gram-Schmidt keep the basis orthonormal to ~1e-15
    for _ in range(2):
        for b in basis:
            r = r - hs_inner(b, r) * b
    return r


def orthonormalize_with_overlap(raw, existing_basis, tol: float = DEFAULT_TOL) -> Tuple[np.ndarray, float]:
    """
    Gram-Schmidt ``raw`` against an orthonormal basis.

    Returns the renormalized orthogonal component ``chi`` and the overlap
    ``eta = tr(chi raw)``, which equals the norm of that component.

    Raises
    ------
    ValueError
        If ``raw`` is not unit norm or lies in the span of the basis.
    """
    raw = as_hermitian(raw)
    if abs(hs_norm(raw) - 1.0) > 1e-9:
        raise ValueError("raw element must have unit Hilbert-Schmidt norm")
    r = _residual(raw, _basis_matrices(existing_basis))
    n = hs_norm(r)
    if n <= tol:
        raise ValueError("element lies in the span of the existing basis")
    chi = r / n
    chi = (chi + chi.conj().T) / 2
    return chi, float(hs_inner(chi, raw).real)


def generate_algebra(
    generators: Sequence[np.ndarray],
    tol: float = DEFAULT_TOL,
    labels: Optional[Sequence[str]] = None,
) -> AlgebraReport:
    """
    Close a set of traceless Hermitian generators under commutation.

    Breadth first: the elements found at depth ``k`` are commuted with every
    element already in the basis, and a commutator is kept when its component
    orthogonal to the current span exceeds ``tol`` (after normalizing the
    commutator). The depth recorded for an element is the smallest number of
    nested commutators that produced a new direction.
    """
    if len(generators) == 0:
        raise ValueError("need at least one generator")
    gens = [as_hermitian(g, traceless=True) for g in generators]
    d = gens[0].shape[0]
    if any(g.shape != (d, d) for g in gens):
        raise ValueError("generators have mismatched dimensions")
    if labels is None:
        labels = [f"G{i}" for i in range(len(gens))]

    basis: List[DepthTaggedElement] = []

    def try_add(mat, depth, expr) -> bool:
        n = hs_norm(mat)
        if n <= tol:
            return False
        raw = mat / n
        r = _residual(raw, [b.element for b in basis])
        rn = hs_norm(r)
        if rn <= tol:
            return False
        chi = r / rn
        chi = (chi + chi.conj().T) / 2
        basis.append(DepthTaggedElement(chi, depth, expr, raw, float(hs_inner(chi, raw).real)))
        return True

    for g, lab in zip(gens, labels):
        try_add(g, 0, lab)

    frontier = list(range(len(basis)))
    depth = 0
    max_dim = d * d - 1
    while frontier and len(basis) < max_dim:
        depth += 1
        new = []
        n_before = len(basis)
        for i in range(n_before):
            for j in frontier:
                if i == j or (i in frontier and frontier.index(i) > frontier.index(j)):
                    continue
                a, b = basis[i], basis[j]
                c = hermitian_commutator(a.raw, b.raw)
                if try_add(c, depth, f"[{a.expression},{b.expression}]"):
                    new.append(len(basis) - 1)
                if len(basis) == max_dim:
                    break
        frontier = new

    report = AlgebraReport(basis=basis, hilbert_dim=d, tol=tol)
    report.structure_constants = structure_constants(report.matrices(), tol=1e-9)
    return report


# =============================================================================
# Structure constants
# =============================================================================

def structure_constant(basis, a: int, b: int, c: int, assert_proportional: bool = False, tol: float = 1e-9) -> float:
    """
    ``f_abc`` defined by ``[chi_a, chi_b] = i sum_c f_abc chi_c``.

    With ``assert_proportional`` the commutator must lie along ``chi_c``
    alone, in which case ``chi_c = (-i / f_abc) [chi_a, chi_b]``.
    """
    mats = _basis_matrices(basis)
    comm = mats[a] @ mats[b] - mats[b] @ mats[a]
    f = hs_inner(mats[c], comm).imag
    if assert_proportional:
        rest = comm - 1j * f * mats[c]
        if hs_norm(rest) > tol * max(1.0, hs_norm(comm)):
            raise ValueError(f"[chi_{a}, chi_{b}] is not proportional to chi_{c}")
    return float(f)


def structure_constants(basis, tol: float = 1e-9) -> Dict[Tuple[int, int, int], float]:
    """All structure constants with ``|f| > tol``."""
    mats = _basis_matrices(basis)
    n = len(mats)
    out = {}
    for a, b in product(range(n), repeat=2):
        if a == b:
            continue
        comm = mats[a] @ mats[b] - mats[b] @ mats[a]
        for c in range(n):
            f = hs_inner(mats[c], comm).imag
            if abs(f) > tol:
                out[(a, b, c)] = float(f)
    return out


def algebra_rank(elements: Sequence[np.ndarray], tol: float = DEFAULT_TOL) -> int:
    """Number of linearly independent elements (singular values above ``tol``)."""
    rows = []
    for e in elements:
        e = np.asarray(e, dtype=complex)
        rows.append(np.concatenate([e.real.ravel(), e.imag.ravel()]))
    s = np.linalg.svd(np.array(rows), compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


# =============================================================================
# The three-level model
# =============================================================================

def su3_control_generators() -> Tuple[np.ndarray, np.ndarray]:
    """``lambda_A = lambda_1`` and ``lambda_B = (lambda_2 + lambda_4) / sqrt(2)``."""
    lam = gell_mann_matrices()
    return lam[0], (lam[1] + lam[3]) / np.sqrt(2)


# nested commutators producing the depth-1..3 elements of the three-level model
APPENDIX_A_WORDS = {
    "C": ("A", "B"),
    "D": ("A", "C"),
    "E": ("B", "C"),
    "F": ("A", "D"),
    "G": ("A", "E"),
    "H": ("B", "E"),
}
APPENDIX_A_DEPTHS = {"A": 0, "B": 0, "C": 1, "D": 2, "E": 2, "F": 3, "G": 3, "H": 3}


def appendix_a_basis() -> Dict[str, np.ndarray]:
    """
    The elements ``lambda_A ... lambda_H`` of the three-level algebra.

    Each is the nested commutator listed in ``APPENDIX_A_WORDS``, evaluated
    numerically in the Hermitian form ``-i[X, Y]`` and rescaled to
    ``tr(lambda^2) = 2``. The sign of ``lambda_D`` is flipped so that
    ``lambda_D`` is proportional to ``+i[lambda_A, lambda_C]``, which makes its
    ``lambda_2`` component positive.
    """
    a, b = su3_control_generators()
    out = {"A": a, "B": b}
    for name, (x, y) in APPENDIX_A_WORDS.items():
        m = hermitian_commutator(out[x], out[y])
        out[name] = m * (np.sqrt(2) / hs_norm(m))
    out["D"] = -out["D"]
    if algebra_rank(list(out.values())) != 8:
        raise RuntimeError("the eight elements are not linearly independent")
    return out
