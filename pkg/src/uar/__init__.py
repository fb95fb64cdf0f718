"""First-order MPE with uniform-assignment reduction on parfactor models."""

from .core import (
    Atom,
    Const,
    Constraint,
    Domain,
    GroundAtom,
    Model,
    Parfactor,
    PotentialTable,
    Predicate,
    Subst,
    ValidationReport,
    Var,
    apply_substitution,
    count_groundings,
    project_constraint,
    validate_model,
)
from .errors import (
    BudgetExceeded,
    ConsistencyFailure,
    FixpointBudgetExceeded,
    NonNormalForm,
    ParseError,
    UnsupportedShape,
    ValidationError,
)
from .ground import (
    EngineConfig,
    GroundFactor,
    MpeResult,
    brute_force_mpe,
    enumerate_groundings,
    model_rvs,
    model_weight,
    ve_max_product,
)
from .modelfile import parse_model, serialize_model
from .pipeline import conditional_ua_solve, conditioned_model, solve
from .randgen import gen_random
from .reduction import (
    ReductionMap,
    SimplifyResult,
    arity_reduce,
    simplify,
    uar_parfactor,
)
from .shattering import check_completely_shattered, shatter
from .symbolic import (
    ANCHOR,
    AnchoredAtom,
    AnchoredFormula,
    SymbolicParfactor,
    align,
    anchor,
    detect_uniform_assignments,
    effect_scope,
    overlap_set,
    symbolic_fusion,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
