"""laxflows: compatible matrix products, dressing operators, and Lax flows.

The library constructs associative multiplications compatible with (sums of)
matrix algebras, evaluates their dressing operators and Lax pairs in closed
form, integrates the induced matrix ODEs and the deformed chiral model, and
verifies the identities and conservation laws along the way.
"""

from .chiral import (
    ChiralField,
    build_T1_T2,
    chiral_integrate,
    curvature_residual,
    initial_lines,
    line_invariant_drift,
)
from .dressing import (
    DEFAULT_ANNULUS,
    DressingEvaluation,
    dress,
    dressing_a1,
    dressing_a3,
    dressing_ak,
    dressing_pm,
    inverse_composition_residual,
    mu_ak,
    mu_condition_residual,
    mu_solver_pm,
    verify_homomorphism,
)
from .errors import (
    BadBlockShapeError,
    BadShapeError,
    BranchPointError,
    ConfigError,
    ContinuationFailedError,
    DegenerateParameterError,
    DimensionMismatchError,
    LambdaTooSmallError,
    LaxflowsError,
    NonFiniteError,
    PoleCollisionError,
    ReductionViolatedError,
    ResonantParametersError,
    SingularConstructionInputError,
    SingularMatrixError,
    WrongFamilyError,
)
from .flows import (
    ConservationReport,
    IntegratorConfig,
    Trajectory,
    conservation_report,
    grad_check,
    hamiltonian,
    lax_residual,
    named_integrals,
    random_skew,
    rhs,
    rhs_pm_explicit,
    richardson_ratio,
    rk4_integrate,
    skew_preservation,
    spectral_invariants,
    volterra_chain_rhs,
    volterra_equivalence,
    volterra_structure,
)
from .linalg import SplitMix64, frobenius, identity, inverse, random_matrix, trace_powers
from .operators import (
    BlockOperator,
    FlowState,
    MultiplierOperator,
    apply,
    compose,
    gauge_transform,
    identity_block_operator,
    identity_operator,
    op_residual,
    random_state,
    trace_pairing,
)
from .structures import (
    MStructureA1,
    MStructureA3,
    MStructureAk,
    PMStructure,
    RelationReport,
    a1_structure,
    a3_block_pair,
    a3_structure_block_pair,
    a3_structure_canonical,
    a3_structure_random,
    ak_structure,
    build_R,
    circ_product,
    circ_product_pm_closed,
    clock_shift_pair,
    derive_BC,
    involution_canonical,
    pencil_associativity_check,
    pencil_product,
    pm_structure,
    random_involution,
    skew_Ak,
    skew_a3_structure,
    skew_ak_structure,
    skew_block_diagonal,
    structure_residuals,
    verify_relations,
)

__version__ = "0.1.0"
