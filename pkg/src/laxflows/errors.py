"""Exception hierarchy for laxflows.

Numerical failures are signals, not bugs: a singular resolvent usually means
the spectral parameter sits on the singular locus of the chosen structure and
the caller should resample it.
"""


class LaxflowsError(Exception):
    """Base class for all laxflows errors."""


class DimensionMismatchError(LaxflowsError):
    """Operands have incompatible shapes or component counts."""


class BadShapeError(LaxflowsError):
    """A constructor received data of the wrong shape or length."""


class NonFiniteError(LaxflowsError):
    """A computation produced NaN/Inf entries or blew up."""


class SingularMatrixError(LaxflowsError):
    """LU pivot underflow: the matrix is numerically singular."""


class SingularConstructionInputError(LaxflowsError):
    """A seed block fails the invertibility precondition of a constructor."""


class BranchPointError(LaxflowsError):
    """The spectral parameter is at (or too close to) a branch point."""


class LambdaTooSmallError(LaxflowsError):
    """|lambda| is below the configured annulus; coefficients degenerate."""


class ContinuationFailedError(LaxflowsError):
    """Root continuation lost a branch (collision or Newton divergence)."""


class PoleCollisionError(LaxflowsError):
    """Two pole parameters coincide to tolerance; formulas degenerate."""


class DegenerateParameterError(LaxflowsError):
    """A recursion or resolvent hit a pole for the given parameter."""


class ResonantParametersError(LaxflowsError):
    """eps^i * lambda_1 == lambda_2 type resonance; operators undefined."""


class ReductionViolatedError(LaxflowsError):
    """The structure does not satisfy the constraints of the reduction."""


class BadBlockShapeError(LaxflowsError):
    """Block data is inconsistent (sizes differ or count too small)."""


class WrongFamilyError(LaxflowsError):
    """The operation is not defined for this structure family."""


class ConfigError(LaxflowsError):
    """A run configuration is malformed; message carries the field path."""
