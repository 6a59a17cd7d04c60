"""Linear operators on matrices and matrix tuples, in multiplier form.

Every operator here is stored extensionally as a list of (left, right) pairs
meaning ``x -> sum_j left_j @ x @ right_j``.  This keeps application at
O(terms * n^3), makes the trace-pairing adjoint a free syntactic swap, and is
exactly the shape in which all the structure operators arise.  Operators on
m-tuples are m x m tables of such maps.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadShapeError, DimensionMismatchError
from .linalg import SplitMix64, frobenius, identity

__all__ = [
    "BlockOperator",
    "FlowState",
    "MultiplierOperator",
    "apply",
    "compose",
    "conjugate_operator",
    "gauge_transform",
    "identity_operator",
    "identity_block_operator",
    "op_residual",
    "random_state",
    "state_product",
    "trace_pairing",
    "zero_operator",
]


# --------------------------------------------------------------------------
# states
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class FlowState:
    """An m-tuple of n x n complex matrices; the dynamical variable.

    Immutable by convention: arithmetic returns new states, the arrays are
    flagged read-only.  Single-matrix problems use m = 1.
    """

    parts: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.parts:
            raise BadShapeError("FlowState needs at least one component")
        n = self.parts[0].shape[0]
        parts = []
        for p in self.parts:
            p = np.asarray(p, dtype=complex)
            if p.ndim != 2 or p.shape != (n, n):
                raise BadShapeError(f"FlowState parts must all be {n}x{n}, got {p.shape}")
            p = p.copy() if p.flags.writeable else p
            p.flags.writeable = False
            parts.append(p)
        object.__setattr__(self, "parts", tuple(parts))

    @classmethod
    def of(cls, *parts: np.ndarray) -> "FlowState":
        return cls(tuple(np.asarray(p, dtype=complex) for p in parts))

    @property
    def m(self) -> int:
        return len(self.parts)

    @property
    def n(self) -> int:
        return self.parts[0].shape[0]

    def norm(self) -> float:
        return float(np.sqrt(sum(frobenius(p) ** 2 for p in self.parts)))

    def __add__(self, other: "FlowState") -> "FlowState":
        return FlowState.of(*(a + b for a, b in zip(self.parts, other.parts)))

    def __sub__(self, other: "FlowState") -> "FlowState":
        return FlowState.of(*(a - b for a, b in zip(self.parts, other.parts)))

    def __rmul__(self, scalar: complex) -> "FlowState":
        return FlowState.of(*(scalar * p for p in self.parts))

    def __iter__(self):
        return iter(self.parts)


def state_product(x: FlowState, y: FlowState) -> FlowState:
    """Componentwise matrix product (x_1 y_1, ..., x_m y_m)."""
    if x.m != y.m or x.n != y.n:
        raise DimensionMismatchError(f"state product: {x.m}x{x.n} vs {y.m}x{y.n}")
    return FlowState.of(*(a @ b for a, b in zip(x.parts, y.parts)))


def trace_pairing(x, y) -> complex:
    """sum_a tr(x_a y_a); accepts matrices or FlowStates."""
    if isinstance(x, np.ndarray):
        return complex(np.trace(x @ y))
    return complex(sum(np.trace(a @ b) for a, b in zip(x.parts, y.parts)))


def random_state(n: int, m: int, seed: int) -> FlowState:
    """Seeded FlowState; components drawn sequentially from one stream."""
    rng = SplitMix64(seed)
    return FlowState.of(*(rng.complex_matrix(n) for _ in range(m)))


# --------------------------------------------------------------------------
# single-component operators
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class MultiplierOperator:
    """x -> sum_j left_j @ x @ right_j on n x n matrices."""

    n: int
    terms: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        for left, right in self.terms:
            if left.shape != (self.n, self.n) or right.shape != (self.n, self.n):
                raise BadShapeError(
                    f"operator terms must be {self.n}x{self.n}, got {left.shape}, {right.shape}"
                )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=complex)
        for left, right in self.terms:
            out += left @ x @ right
        return out

    def adjoint(self) -> "MultiplierOperator":
        """Trace-pairing adjoint: swap each (left, right) pair."""
        return MultiplierOperator(self.n, tuple((r, l) for l, r in self.terms))

    def scale(self, scalar: complex) -> "MultiplierOperator":
        return MultiplierOperator(self.n, tuple((scalar * l, r) for l, r in self.terms))

    def __add__(self, other: "MultiplierOperator") -> "MultiplierOperator":
        if other.n != self.n:
            raise DimensionMismatchError(f"operator sizes differ: {self.n} vs {other.n}")
        return MultiplierOperator(self.n, self.terms + other.terms)


def identity_operator(n: int) -> MultiplierOperator:
    return MultiplierOperator(n, ((identity(n), identity(n)),))


def zero_operator(n: int) -> MultiplierOperator:
    return MultiplierOperator(n, ())


def gauge_transform(op: MultiplierOperator, t: np.ndarray) -> MultiplierOperator:
    """op + ad_t, i.e. x -> op(x) + t x - x t."""
    t = np.asarray(t, dtype=complex)
    if t.shape != (op.n, op.n):
        raise BadShapeError(f"gauge matrix must be {op.n}x{op.n}, got {t.shape}")
    extra = ((t, identity(op.n)), (-identity(op.n), t))
    return MultiplierOperator(op.n, op.terms + extra)


def conjugate_operator(op: MultiplierOperator, g: np.ndarray, g_inv: np.ndarray) -> MultiplierOperator:
    """x -> g @ op(x) @ g_inv (conjugation of the operator's output)."""
    return MultiplierOperator(op.n, tuple((g @ l, r @ g_inv) for l, r in op.terms))


# --------------------------------------------------------------------------
# block operators on m-tuples
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class BlockOperator:
    """m x m table of MultiplierOperators: (op(x))_a = sum_b blocks[a][b](x_b)."""

    m: int
    n: int
    blocks: tuple[tuple[MultiplierOperator, ...], ...]

    def __post_init__(self):
        if len(self.blocks) != self.m or any(len(row) != self.m for row in self.blocks):
            raise BadShapeError("block table must be m x m")
        for row in self.blocks:
            for blk in row:
                if blk.n != self.n:
                    raise DimensionMismatchError("all blocks must share the same n")

    def __call__(self, x: FlowState) -> FlowState:
        if x.m != self.m or x.n != self.n:
            raise DimensionMismatchError(
                f"operator is {self.m} x ({self.n}x{self.n}), state is {x.m} x ({x.n}x{x.n})"
            )
        parts = []
        for row in self.blocks:
            acc = np.zeros((self.n, self.n), dtype=complex)
            for blk, part in zip(row, x.parts):
                acc += blk(part)
            parts.append(acc)
        return FlowState.of(*parts)

    def adjoint(self) -> "BlockOperator":
        """Transpose the block table and adjoint each block."""
        table = tuple(
            tuple(self.blocks[b][a].adjoint() for b in range(self.m)) for a in range(self.m)
        )
        return BlockOperator(self.m, self.n, table)

    def scale(self, scalar: complex) -> "BlockOperator":
        return BlockOperator(
            self.m, self.n, tuple(tuple(blk.scale(scalar) for blk in row) for row in self.blocks)
        )

    def __add__(self, other: "BlockOperator") -> "BlockOperator":
        if self.m != other.m or self.n != other.n:
            raise DimensionMismatchError("block operator shapes differ")
        table = tuple(
            tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.blocks, other.blocks)
        )
        return BlockOperator(self.m, self.n, table)


def identity_block_operator(m: int, n: int) -> BlockOperator:
    table = tuple(
        tuple(identity_operator(n) if a == b else zero_operator(n) for b in range(m))
        for a in range(m)
    )
    return BlockOperator(m, n, table)


# --------------------------------------------------------------------------
# generic helpers
# --------------------------------------------------------------------------
def apply(op, x):
    """Apply either operator kind; FlowState in, FlowState out for blocks."""
    if isinstance(op, BlockOperator):
        if isinstance(x, np.ndarray):
            if op.m != 1:
                raise DimensionMismatchError("matrix input for an m > 1 block operator")
            return op(FlowState.of(x)).parts[0]
        return op(x)
    if isinstance(x, FlowState):
        if x.m != 1:
            raise DimensionMismatchError("FlowState with m > 1 fed to a single-component operator")
        return FlowState.of(op(x.parts[0]))
    return op(x)


def compose(op1, op2):
    """Operator composition acting as op1 after op2."""
    if isinstance(op1, MultiplierOperator) and isinstance(op2, MultiplierOperator):
        if op1.n != op2.n:
            raise DimensionMismatchError(f"compose: sizes {op1.n} vs {op2.n}")
        terms = tuple(
            (l1 @ l2, r2 @ r1) for l1, r1 in op1.terms for l2, r2 in op2.terms
        )
        return MultiplierOperator(op1.n, terms)
    op1, op2 = _as_block(op1), _as_block(op2)
    if op1.m != op2.m or op1.n != op2.n:
        raise DimensionMismatchError("compose: block shapes differ")
    m, n = op1.m, op1.n
    table = []
    for a in range(m):
        row = []
        for c in range(m):
            acc = zero_operator(n)
            for b in range(m):
                acc = acc + compose(op1.blocks[a][b], op2.blocks[b][c])
            row.append(acc)
        table.append(tuple(row))
    return BlockOperator(m, n, tuple(table))


def _as_block(op) -> BlockOperator:
    if isinstance(op, BlockOperator):
        return op
    return BlockOperator(1, op.n, ((op,),))


def op_residual(op1, op2, n_samples: int = 20, seed: int = 0) -> float:
    """max over seeded random x of ||op1(x) - op2(x)||_F / max(1, ||x||_F).

    Zero (to roundoff) means the two act identically as linear maps even if
    their multiplier decompositions differ term-by-term.  A MultiplierOperator
    and a 1 x 1 BlockOperator are comparable.
    """
    b1, b2 = _as_block(op1), _as_block(op2)
    if b1.m != b2.m or b1.n != b2.n:
        raise DimensionMismatchError("op_residual: operator shapes differ")
    rng = SplitMix64(seed)
    worst = 0.0
    for _ in range(n_samples):
        x = FlowState.of(*(rng.complex_matrix(b1.n) for _ in range(b1.m)))
        diff = (b1(x) - b2(x)).norm()
        worst = max(worst, diff / max(1.0, x.norm()))
    return worst
