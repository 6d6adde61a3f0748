"""
Quick invariant checks behind ``qslcontrol verify``.

Each check draws from its own generator spawned off the user seed and raises
``AssertionError`` with a short message on failure.
"""

import math
from typing import Callable, List, Tuple

import numpy as np

from .grape_mct import _value_and_grad_eigh, gradient, infidelity_of_field
from .lie_toolkit import generate_algebra, su3_control_generators
from .metrics import s1_bruteforce_oracle, s1_distance, s2_distance
from .models import ControlField, TargetSpec, target, propagate, random_field, split_field, su2_model, su3_model, target_for
from .operator_core import random_special_unitary, random_state
from .qsl_bounds import aa_budgets, classical_limit_table, model_qsl
from .short_time import phase_drive, order_accuracy_check, su2_mct_bounds


def check_su2_closed_form(rng):
    m = su2_model()
    for phi in (0.1, 0.5, 1.0, math.pi):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        q = model_qsl(m, target(TargetSpec("Vn", phi, axis=tuple(n))))
        assert abs(q.tau_unified - phi) <= 1e-12, f"tau({phi}) = {q.tau_unified}"


def check_metric_equivalence(rng):
    for _ in range(300):
        u, v = random_special_unitary(2, rng), random_special_unitary(2, rng)
        assert abs(s1_distance(u, v) - s2_distance(u, v)) <= 1e-10, "S1 != S2 in SU(2)"


def check_s1_oracle(rng):
    for _ in range(3):
        u, v = random_special_unitary(3, rng), random_special_unitary(3, rng)
        ref = s1_bruteforce_oracle(u, v, 10_000, rng)
        assert abs(s1_distance(u, v) - ref) <= 1e-3, "closed-form S1 disagrees with state search"


def check_su3_algebra(rng):
    rep = generate_algebra(list(su3_control_generators()))
    assert rep.dimension == 8 and rep.fully_controllable, "su(3) not generated"
    assert sorted(rep.depths) == [0, 0, 1, 2, 2, 3, 3, 3], f"depths {rep.depths}"


def check_propagation(rng):
    m = su3_model()
    f = random_field(12, 2.0, rng)
    u = propagate(m, f)
    assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-12), "propagator not unitary"
    a, b = split_field(f, 5)
    assert np.allclose(propagate(m, b) @ propagate(m, a), u, atol=1e-12), "composition fails"


def check_gradient(rng):
    m = su3_model()
    v = target_for(m, "C", 0.7)
    f = random_field(8, 3.0, rng)
    g = gradient(m, f, v)
    _, g_ref = _value_and_grad_eigh(m, v, f.values, f.total_time)[:2]
    assert np.allclose(g, g_ref, atol=1e-12), "fast and reference gradients differ"
    h = 1e-6
    for k in range(f.n_steps):
        e = np.zeros(f.n_steps)
        e[k] = h
        fd = (infidelity_of_field(m, ControlField(f.values + e, 3.0), v)
              - infidelity_of_field(m, ControlField(f.values - e, 3.0), v)) / (2 * h)
        assert abs(fd - g[k]) <= 1e-6 * max(1.0, abs(fd)), "gradient disagrees with finite differences"


def check_expansion(rng):
    la, lb = su3_control_generators()
    drive = phase_drive(la / math.sqrt(2), lb / math.sqrt(2), 1 / math.sqrt(2), rng.normal(size=4))
    s = np.geomspace(0.01, 0.2, 6)
    for n in (1, 2, 3):
        slope = order_accuracy_check(drive, n, s).slope
        assert slope >= n + 1 - 0.15, f"order {n} slope {slope:.2f}"


def check_classical(rng):
    rows = classical_limit_table(np.arange(0.5, 50.5, 0.5))
    assert rows[-1][1] / rows[0][1] < 0.1, "no classical-limit decrease"


def check_aa(rng):
    for m in (su2_model(), su3_model()):
        for _ in range(30):
            f = random_field(10, rng.uniform(0.1, 8.0), rng)
            b = aa_budgets(m.hamiltonians(f.values), f.dt, random_state(m.dim, rng))
            for key, val in b.items():
                assert val.distance <= val.budget + 1e-9, f"{key} distance exceeds its budget"


def check_su2_bounds(rng):
    for phi in (0.2, 1.0, math.pi):
        b = su2_mct_bounds(phi)
        assert abs(b.t_x - phi) <= 1e-12 and abs(b.t_z - math.sqrt(12 * phi)) <= 1e-12, "SU(2) bounds"


CHECKS: List[Tuple[str, Callable]] = [
    ("su2_closed_form", check_su2_closed_form),
    ("metric_equivalence", check_metric_equivalence),
    ("s1_oracle", check_s1_oracle),
    ("su3_algebra", check_su3_algebra),
    ("propagation", check_propagation),
    ("gradient", check_gradient),
    ("expansion_order", check_expansion),
    ("classical_limit", check_classical),
    ("aa_inequalities", check_aa),
    ("su2_bounds", check_su2_bounds),
]


def run_checks(seed: int = 0) -> List[Tuple[str, str]]:
    """Run every check; returns ``(name, message)`` for the failures."""
    failures = []
    streams = np.random.SeedSequence(seed).spawn(len(CHECKS))
    for (name, fn), ss in zip(CHECKS, streams):
        try:
            fn(np.random.default_rng(ss))
        except AssertionError as exc:
            failures.append((name, str(exc) or "assertion failed"))
    return failures
