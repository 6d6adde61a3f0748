"""
Quantum speed limits and minimum control times for phase-controlled qubits and qutrits.
"""

__version__ = "0.1.0"

from .operator_core import (  # noqa: E402
    gell_mann_matrices,
    pauli_matrices,
    spin_matrices,
)
from .metrics import minimal_covering_arc, s1_distance, s2_distance  # noqa: E402
from .lie_toolkit import AlgebraReport, generate_algebra, structure_constant  # noqa: E402
from .qsl_bounds import QslReport, model_qsl, qsl_times  # noqa: E402
from .models import (  # noqa: E402
    ControlField,
    PhaseControlModel,
    TargetSpec,
    propagate,
    spin_model,
    su2_model,
    su3_model,
    target,
    target_for,
)
from .short_time import (  # noqa: E402
    bound_sA,
    bound_sC,
    bound_sD,
    generator_expansion,
    order_accuracy_check,
    su2_mct_bounds,
    su3_mct_bounds,
)
from .grape_mct import SweepResult, mct_sweep, optimize, power_law_fit  # noqa: E402
