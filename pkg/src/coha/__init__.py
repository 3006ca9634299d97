"""Shuffle-algebra engine for cohomological Hall algebras of quivers.

Additive, multiplicative and elliptic kernels share one shuffle engine.
Exact rational arithmetic backs the first two; the elliptic carrier is a
formal product of theta factors compared by seeded sampling.
"""
import types as _types

from .errors import (
    CohaError,
    DenominatorVanishes,
    GradingError,
    KernelMismatch,
    NumericError,
    ParseError,
    PoleError,
    PrecisionError,
    QuiverError,
    SamplingError,
    ShapeMismatch,
    UnboundVariable,
)
from .quiver import DimPair, Quiver, builtin_quiver, colored_shuffles, jordan, load_quiver, shuffle_count, sl2, type_a
from .symbolic import HBAR, T1, T2, RationalExpr, VarSpace, equals_exact, lam, specialize, symmetrize, zf
from .textio import format_expression, parse_expression, parse_rational, parse_theta
from .theta import SamplePlan, ThetaExpr, ThetaParams, theta, theta_equal_probabilistic, theta_sum_form
from .shuffle import (
    ADDITIVE,
    ELLIPTIC,
    MULTIPLICATIVE,
    Kernel,
    ShuffleElement,
    build_fac,
    classical_commutator,
    classical_limit,
    element,
    shuffle_product,
    unit,
    verify_associativity,
)
from .currents import (
    DynamicalPoint,
    commutator,
    drinfeld_current,
    dynamical_current_eval,
    generator,
    taylor_identity_check,
)
from .weights import TypeAConfig, frv_fac, konno_division_check, weight_function_sl2

__version__ = "0.1.0"

__all__ = [n for n, v in list(globals().items()) if not n.startswith("_") and not isinstance(v, _types.ModuleType)]
