"""
Short-time structure of driven unitary evolution.

Writing ``U(s) = exp(-i A(s))`` with ``s = omega t`` and ``h = H / omega``, the
generator obeys

    dA/ds = sum_m (B_m / m!) (ad'_A)^m h,     ad'_A(X) = -i[A, X],

with Bernoulli numbers ``B_1 = -1/2``. Expanding ``A = sum_n A_n s^n`` and
``h = sum_n h_n s^n`` and matching powers gives every ``A_n`` as a rational
combination of nested commutators of the ``h_k``. That combination is built
symbolically here (:func:`expansion_terms`) and only then evaluated on
matrices.

Depth-1 directions of the algebra first appear at order ``s^3`` and depth-2
directions at ``s^5``; bounding those coefficients gives the short-time
estimates :func:`bound_sA`, :func:`bound_sC`, :func:`bound_sD`.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .lie_toolkit import AlgebraReport, generate_algebra, structure_constant, su3_control_generators
from .operator_core import as_hermitian, expm_hermitian, hs_inner, hs_norm, pauli_matrices

MAX_ORDER = 5

# a word is either an int k (the Taylor coefficient h_k) or a pair (x, y)
# standing for the Hermitian commutator -i[x, y]
Word = Union[int, Tuple["Word", "Word"]]
Expr = Dict[Word, Fraction]


# =============================================================================
# Symbolic expansion
# =============================================================================

@lru_cache(maxsize=None)
def bernoulli(m: int) -> Fraction:
    """Bernoulli number with the ``x / (e^x - 1)`` convention, so ``B_1 = -1/2``."""
    if m == 0:
        return Fraction(1)
    acc = sum(Fraction(math.comb(m + 1, k)) * bernoulli(k) for k in range(m))
    return -acc / (m + 1)


def _key(w: Word):
    return (0, w) if isinstance(w, int) else (1, _key(w[0]), _key(w[1]))


def _add(acc: Expr, w: Word, c: Fraction) -> None:
    v = acc.get(w, Fraction(0)) + c
    if v:
        acc[w] = v
    else:
        acc.pop(w, None)


def _hcomm(x: Expr, y: Expr) -> Expr:
    """Bilinear extension of ``-i[., .]`` with antisymmetry applied to each pair of words."""
    out: Expr = {}
    for wx, cx in x.items():
        for wy, cy in y.items():
            if wx == wy:
                continue
            if _key(wx) < _key(wy):
                _add(out, (wx, wy), cx * cy)
            else:
                _add(out, (wy, wx), -cx * cy)
    return out


def _scale(x: Expr, c: Fraction) -> Expr:
    return {w: v * c for w, v in x.items() if v * c}


@lru_cache(maxsize=None)
def _nested(m: int, r: int, order_cap: int) -> Tuple[Tuple[Word, Fraction], ...]:
    """Sum over ``a_1 + ... + a_m + k = r`` of ``ad'_{A_a1} ... ad'_{A_am} h_k``."""
    if m == 0:
        return ((r, Fraction(1)),)
    acc: Expr = {}
    for a in range(1, r + 1):
        inner = dict(_nested(m - 1, r - a, order_cap))
        if not inner:
            continue
        for w, c in _hcomm(dict(expansion_terms(a)), inner).items():
            _add(acc, w, c)
    return tuple(acc.items())


@lru_cache(maxsize=None)
def expansion_terms(n: int) -> Tuple[Tuple[Word, Fraction], ...]:
    """
    Symbolic ``A_n`` as ``((word, coefficient), ...)``.

    >>> dict(expansion_terms(2))
    {1: Fraction(1, 2)}
    """
    if n < 1:
        raise ValueError("expansion starts at order 1")
    acc: Expr = {}
    for m in range(n):
        b = bernoulli(m)
        if b == 0:
            continue
        coeff = b / math.factorial(m) / n
        for w, c in _nested(m, n - 1, n):
            _add(acc, w, coeff * c)
    return tuple(sorted(acc.items(), key=lambda t: _key(t[0])))


def format_word(w: Word) -> str:
    if isinstance(w, int):
        return f"h{w}"
    return f"-i[{format_word(w[0])},{format_word(w[1])}]"


def format_terms(n: int) -> str:
    return " + ".join(f"({c})*{format_word(w)}" for w, c in expansion_terms(n))


def _eval_word(w: Word, hs: Sequence[np.ndarray], cache: dict) -> np.ndarray:
    if w in cache:
        return cache[w]
    if isinstance(w, int):
        val = hs[w] if w < len(hs) else np.zeros_like(hs[0])
    else:
        x, y = _eval_word(w[0], hs, cache), _eval_word(w[1], hs, cache)
        val = -1j * (x @ y - y @ x)
    cache[w] = val
    return val


def evaluate_terms(n: int, hs: Sequence[np.ndarray]) -> np.ndarray:
    cache: dict = {}
    out = np.zeros_like(np.asarray(hs[0], dtype=complex))
    for w, c in expansion_terms(n):
        out = out + float(c) * _eval_word(w, hs, cache)
    return out


# =============================================================================
# Drives
# =============================================================================

def _series_exp_i(alpha_coeffs: Sequence[float], order: int) -> np.ndarray:
    """Taylor coefficients of ``exp(i alpha(s))`` for a polynomial ``alpha``."""
    f = np.zeros(order + 1, dtype=complex)
    for k, a in enumerate(alpha_coeffs[: order + 1]):
        f[k] = 1j * a
    g = np.zeros(order + 1, dtype=complex)
    g[0] = np.exp(f[0])
    for n in range(1, order + 1):
        g[n] = sum(k * f[k] * g[n - k] for k in range(1, n + 1)) / n
    return g


@dataclass
class TaylorDrive:
    """
    Dimensionless drive ``h(s)``.

    A ``general`` drive is the polynomial ``sum_n h_n s^n`` (coefficients
    past the last given one are zero). A
    ``phase_control`` drive is ``E (cos(alpha(s)) chi_A + sin(alpha(s)) chi_B)``
    with polynomial ``alpha``; its Taylor coefficients are generated on demand.
    """

    coefficients: List[np.ndarray]
    field_form: str = "general"
    amplitude: Optional[float] = None
    alpha_coeffs: Optional[np.ndarray] = None
    chi_a: Optional[np.ndarray] = field(default=None, repr=False)
    chi_b: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.coefficients = [as_hermitian(h, traceless=True, tol=1e-10) for h in self.coefficients]

    @property
    def degree(self) -> Optional[int]:
        """Polynomial degree of a general drive; ``None`` for a phase-control drive."""
        if self.field_form == "phase_control":
            return None
        return len(self.coefficients) - 1

    @property
    def dim(self) -> int:
        return self.coefficients[0].shape[0]

    def epsilons(self, order: int) -> Tuple[np.ndarray, np.ndarray]:
        """Taylor coefficients of ``E cos(alpha)`` and ``E sin(alpha)`` up to ``s^order``."""
        if self.field_form != "phase_control":
            raise ValueError("only phase-control drives have field coefficients")
        g = self.amplitude * _series_exp_i(self.alpha_coeffs, order)
        return g.real.copy(), g.imag.copy()

    def taylor(self, order: int) -> List[np.ndarray]:
        """``[h_0, ..., h_order]``."""
        if self.field_form == "phase_control":
            ea, eb = self.epsilons(order)
            return [ea[n] * self.chi_a + eb[n] * self.chi_b for n in range(order + 1)]
        # a general drive is an exact polynomial; higher coefficients vanish
        zero = np.zeros_like(self.coefficients[0])
        return [self.coefficients[n] if n < len(self.coefficients) else zero for n in range(order + 1)]

    def h_at(self, s: float) -> np.ndarray:
        if self.field_form == "phase_control":
            a = np.polynomial.polynomial.polyval(s, self.alpha_coeffs)
            return self.amplitude * (np.cos(a) * self.chi_a + np.sin(a) * self.chi_b)
        return sum(h * s**n for n, h in enumerate(self.coefficients))


def general_drive(coefficients: Sequence[np.ndarray]) -> TaylorDrive:
    return TaylorDrive(list(coefficients))


def phase_drive(chi_a, chi_b, amplitude: float, alpha_coeffs: Sequence[float]) -> TaylorDrive:
    """Phase-control drive; ``chi_a``, ``chi_b`` orthonormal, ``alpha(s) = sum_k alpha_coeffs[k] s^k``."""
    chi_a, chi_b = as_hermitian(chi_a, traceless=True), as_hermitian(chi_b, traceless=True)
    alpha = np.asarray(alpha_coeffs, dtype=float)
    if alpha.size == 0:
        alpha = np.zeros(1)
    h0 = amplitude * (np.cos(alpha[0]) * chi_a + np.sin(alpha[0]) * chi_b)
    return TaylorDrive([h0], "phase_control", float(amplitude), alpha, chi_a, chi_b)


# =============================================================================
# Generator expansion
# =============================================================================

@dataclass
class GeneratorExpansion:
    terms: List[np.ndarray]
    components: Optional[np.ndarray] = None

    def generator(self, s: float, order: Optional[int] = None) -> np.ndarray:
        n = len(self.terms) if order is None else order
        return sum(a * s ** (k + 1) for k, a in enumerate(self.terms[:n]))


def generator_expansion(
    drive: TaylorDrive,
    order: int = MAX_ORDER,
    basis: Optional[Sequence[np.ndarray]] = None,
) -> GeneratorExpansion:
    """
    ``A_1 ... A_order`` for ``U(s) = exp(-i sum_n A_n s^n)``.

    With an orthonormal ``basis`` the component table ``a[n-1, mu] =
    tr(chi_mu A_n)`` is filled in as well.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be between 1 and {MAX_ORDER}")
    hs = drive.taylor(order - 1)
    terms = []
    for n in range(1, order + 1):
        a = evaluate_terms(n, hs)
        terms.append((a + a.conj().T) / 2)
    comps = None
    if basis is not None:
        comps = np.array([[hs_inner(chi, a).real for chi in basis] for a in terms])
    return GeneratorExpansion(terms, comps)


def magnus6_propagate(h_at, s: float, n_steps: int) -> np.ndarray:
    """
    Sixth-order Magnus integrator (three Gauss points per step) for ``i dU/ds = h(s) U``.

    Few accurate steps keep round-off near machine precision, which matters
    when truncation residuals of order ``s^6`` are resolved at ``s = 0.01``.
    """
    d = h_at(0.0).shape[0]
    u = np.eye(d, dtype=complex)
    dt = s / n_steps
    r = math.sqrt(15) / 10
    nodes = (0.5 - r, 0.5, 0.5 + r)

    def comm(x, y):
        return x @ y - y @ x

    for k in range(n_steps):
        t0 = k * dt
        a1, a2, a3 = (-1j * h_at(t0 + c * dt) for c in nodes)
        b1 = dt * a2
        b2 = math.sqrt(15) * dt / 3 * (a3 - a1)
        b3 = 10 * dt / 3 * (a3 - 2 * a2 + a1)
        c1 = comm(b1, b2)
        c2 = -comm(b1, 2 * b3 + c1) / 60
        omega = b1 + b3 / 12 + comm(-20 * b1 - b3 + c1, b2 + c2) / 240
        gen = 1j * omega
        u = expm_hermitian((gen + gen.conj().T) / 2, 1.0) @ u
    return u


@dataclass
class OrderCheck:
    slope: float
    residuals: np.ndarray
    exact: bool


def order_accuracy_check(
    drive: TaylorDrive,
    order: int,
    s_grid: Sequence[float],
    n_steps: int = 40,
    exact_tol: float = 1e-13,
) -> OrderCheck:
    """
    Log-log slope of ``||U(s) - exp(-i sum_{n<=order} A_n s^n)||`` against ``s``.

    ``U(s)`` comes from sixth-order Magnus integration of ``drive.h_at`` with
    ``n_steps`` steps at the largest ``s``, scaled down in proportion (at
    least 4) for smaller ``s``. A truncation at order ``N`` should give a
    slope of ``N + 1``. If every residual is below ``exact_tol`` the
    truncation is reported as exact.
    """
    s = np.asarray(s_grid, dtype=float)
    if np.any(s <= 0) or np.any(s > 0.3):
        raise ValueError("s grid must lie in (0, 0.3]")
    exp_ = generator_expansion(drive, order)
    res = []
    for si in s:
        steps = max(4, math.ceil(n_steps * si / s.max()))
        u_exact = magnus6_propagate(drive.h_at, float(si), steps)
        u_trunc = expm_hermitian(exp_.generator(float(si)), 1.0)
        res.append(np.linalg.norm(u_exact - u_trunc))
    res = np.array(res)
    if np.all(res < exact_tol):
        return OrderCheck(float("nan"), res, True)
    slope = np.polyfit(np.log(s), np.log(res), 1)[0]
    return OrderCheck(float(slope), res, False)


# =============================================================================
# Closed-form bounds
# =============================================================================

def _positive(**kw) -> None:
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


def bound_sA(beta: float, amplitude: float) -> float:
    """Time to reach coefficient ``beta`` along a directly driven element: ``beta / E``."""
    _positive(beta=beta, amplitude=amplitude)
    return beta / amplitude


def bound_sC(beta: float, f_abc: float, amplitude: float) -> float:
    """Depth-1 element: ``sqrt(12 beta / (f_ABC E^2))``."""
    _positive(beta=beta, f_abc=f_abc, amplitude=amplitude)
    return math.sqrt(12 * beta / (f_abc * amplitude**2))


def bound_sD(beta: float, f_abc: float, f_acd: float, amplitude: float, eta: float = 1.0) -> float:
    """Depth-2 element: ``(18 beta / (f_ABC eta f_ACD E^3))^(1/3)``."""
    _positive(beta=beta, f_abc=f_abc, f_acd=f_acd, amplitude=amplitude, eta=eta)
    if eta > 1 + 1e-12:
        raise ValueError("eta must lie in (0, 1]")
    return (18 * beta / (f_abc * eta * f_acd * amplitude**3)) ** (1 / 3)


# =============================================================================
# Model specializations
# =============================================================================

@dataclass(frozen=True)
class ShortTimeConstants:
    """Drive amplitude and structure constants in the orthonormal basis of a phase-control model."""

    amplitude: float
    f_abc: float
    f_acd: Optional[float] = None
    eta_d: Optional[float] = None


def phase_control_constants(g_a, g_b, prefactor: float = 0.5, report: Optional[AlgebraReport] = None) -> ShortTimeConstants:
    """
    Constants for ``h = prefactor (cos(a) G_A + sin(a) G_B)``.

    ``E = prefactor ||G_A||``. ``f_ABC`` uses ``chi_C`` along ``-i[chi_A, chi_B]``;
    when the algebra has a depth-2 element from ``[chi_A, chi_C]``, ``f_ACD`` uses its
    raw direction and ``eta_D`` its overlap with the Gram-Schmidt element.
    """
    g_a, g_b = as_hermitian(g_a), as_hermitian(g_b)
    if abs(hs_norm(g_a) - hs_norm(g_b)) > 1e-12:
        raise ValueError("phase control needs generators of equal norm")
    if report is None:
        report = generate_algebra([g_a, g_b], labels=["A", "B"])
    amp = prefactor * hs_norm(g_a)
    ia, ib, ic = report.index("A"), report.index("B"), report.index("[A,B]")
    f_abc = structure_constant(report.basis, ia, ib, ic, assert_proportional=True)
    try:
        idx = report.index("[A,[A,B]]")
    except KeyError:
        return ShortTimeConstants(amp, f_abc)
    el = report.basis[idx]
    chi_a, chi_c = report.basis[ia].element, report.basis[ic].element
    f_acd = float(hs_inner(el.raw, chi_a @ chi_c - chi_c @ chi_a).imag)
    return ShortTimeConstants(amp, f_abc, f_acd, el.eta)


def target_beta(generator, phi: float) -> float:
    """Coefficient reached along the unit-norm target direction for ``exp(-i G phi)``: ``phi ||G||``."""
    return phi * hs_norm(generator)


class Su2Bounds(NamedTuple):
    t_x: float
    t_z: float


class Su3Bounds(NamedTuple):
    t_a: float
    t_c: float
    t_d: float


def _check_phi(phi: float) -> None:
    if not 0 < phi <= math.pi + 1e-12:
        raise ValueError("phi must lie in (0, pi]")


@lru_cache(maxsize=None)
def su2_constants() -> ShortTimeConstants:
    sx, sy, _ = pauli_matrices()
    return phase_control_constants(sx, sy)


@lru_cache(maxsize=None)
def su3_constants() -> ShortTimeConstants:
    la, lb = su3_control_generators()
    return phase_control_constants(la, lb)


def su2_mct_bounds(phi: float, omega: float = 1.0) -> Su2Bounds:
    """Short-time bounds for ``V_x(phi)`` and ``V_z(phi)`` in the two-level model, in time units."""
    _check_phi(phi)
    k = su2_constants()
    beta = target_beta(pauli_matrices()[0] / 2, phi)
    return Su2Bounds(bound_sA(beta, k.amplitude) / omega, bound_sC(beta, k.f_abc, k.amplitude) / omega)


def su3_mct_bounds(phi: float, report: Optional[AlgebraReport] = None, omega: float = 1.0) -> Su3Bounds:
    """Short-time bounds for ``V_A``, ``V_C``, ``V_D`` in the three-level model, in time units."""
    _check_phi(phi)
    if report is None:
        k = su3_constants()
    else:
        la, lb = su3_control_generators()
        k = phase_control_constants(la, lb, report=report)
    if k.f_acd is None or k.eta_d is None:
        raise ValueError("algebra report has no depth-2 element [A,[A,B]]")
    # every lambda_X is normalized to tr(lambda_X^2) = 2
    beta = target_beta(su3_control_generators()[0], phi)
    return Su3Bounds(
        bound_sA(beta, k.amplitude) / omega,
        bound_sC(beta, k.f_abc, k.amplitude) / omega,
        bound_sD(beta, k.f_abc, k.f_acd, k.amplitude, k.eta_d) / omega,
    )


def short_time_bound(model_label: str, target_name: str, phi: float, omega: float = 1.0) -> Optional[float]:
    """The short-time bound matching a named target, or ``None`` when none applies."""
    if phi <= 0:
        return 0.0
    if model_label == "su2":
        b = su2_mct_bounds(phi, omega=omega)
        return {"x": b.t_x, "y": b.t_x, "z": b.t_z}.get(target_name)
    if model_label == "su3":
        b = su3_mct_bounds(phi, omega=omega)
        return {"A": b.t_a, "B": b.t_a, "C": b.t_c, "D": b.t_d}.get(target_name)
    return None


# =============================================================================
# Depth-2 amplitude
# =============================================================================

F_BOUND = 20.0 / 3.0


def f_epsilon(eps_a: Sequence[float], eps_b: Sequence[float], s: float) -> float:
    """
    The bracket ``F`` controlling the depth-2 amplitude, with its explicit powers of ``s``::

        eA0 (1/2 eA1 s eB1 s - 1/3 eA0 eB2 s^2) - eB0 (1/2 eA1 s eA1 s - 1/3 eA0 eA2 s^2)
    """
    a0, a1, a2 = eps_a[0], eps_a[1], eps_a[2]
    b0, b1, b2 = eps_b[0], eps_b[1], eps_b[2]
    return (
        a0 * (0.5 * a1 * s * b1 * s - a0 * b2 * s**2 / 3)
        - b0 * (0.5 * a1 * s * a1 * s - a0 * a2 * s**2 / 3)
    )


def f_epsilon_bound_check(drive: TaylorDrive, s_grid: Sequence[float]) -> bool:
    """Whether ``|F| <= (20/3) E^3`` at every ``s`` of the grid for a phase-control drive."""
    if drive.field_form != "phase_control":
        raise ValueError("needs a phase-control drive")
    ea, eb = drive.epsilons(2)
    lim = F_BOUND * drive.amplitude**3
    return all(abs(f_epsilon(ea, eb, float(s))) <= lim for s in s_grid)
