"""Construction and verification of the compatible-product families.

Four families are supported, each defined by a small set of constant matrices
subject to algebraic relations:

* ``MStructureA1``  -- one arbitrary matrix c, product x o y = x c y;
* ``MStructureA3``  -- a pair of involutions A, B (A^2 = B^2 = 1);
* ``MStructureAk``  -- a triple (A, B, C) with eps = exp(2 pi i / k) clock
  relations, conveniently resolved through a clock/shift pair (A, T);
* ``PMStructure``   -- data (k, B, T, lambda_a, t_a) defining a compatible
  product on an m-fold direct sum of matrix algebras.

Every family yields an operator R in multiplier form; the induced product is
x o y = R(x) y + x R(y) - R(x y), and the pencil x y + lam * (x o y) stays
associative for every lam.  ``pencil_associativity_check`` probes exactly
that on random triples.
"""

import cmath
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BadBlockShapeError,
    BadShapeError,
    DegenerateParameterError,
    DimensionMismatchError,
    PoleCollisionError,
    SingularConstructionInputError,
    SingularMatrixError,
)
from .linalg import (
    frobenius,
    identity,
    inverse,
    matrix_powers,
    random_matrix,
    root_of_unity,
)
from .operators import (
    BlockOperator,
    FlowState,
    MultiplierOperator,
    apply,
    random_state,
    state_product,
    zero_operator,
)

__all__ = [
    "MStructureA1",
    "MStructureA3",
    "MStructureAk",
    "PMStructure",
    "RelationReport",
    "SkewAkData",
    "a1_structure",
    "a3_block_pair",
    "a3_structure_block_pair",
    "a3_structure_canonical",
    "a3_structure_random",
    "ak_structure",
    "build_R",
    "circ_product",
    "circ_product_pm_closed",
    "clock_shift_pair",
    "derive_BC",
    "involution_canonical",
    "pencil_associativity_check",
    "pencil_product",
    "perturb_structure",
    "pm_structure",
    "random_involution",
    "skew_Ak",
    "skew_a3_structure",
    "skew_ak_structure",
    "skew_block_diagonal",
    "structure_residuals",
    "verify_relations",
]

_REL_TOL = 1e-10
_GAP_RTOL = 1e-6


# --------------------------------------------------------------------------
# structure data
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class MStructureA1:
    """Product x o y = x c y for an arbitrary matrix c."""

    n: int
    c: np.ndarray


@dataclass(frozen=True)
class MStructureA3:
    """Pair of involutions: A^2 = B^2 = 1."""

    n: int
    A: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class MStructureAk:
    """Clock triple (A, B, C) with eps = exp(2 pi i / k).

    T, when present, is the clock matrix resolving the relations via
    B = (eps T - 1)(T - 1)^-1 A and C = T (T - 1)^-1; it is required by the
    dressing formulas but not by the flow itself.
    """

    k: int
    n: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    T: np.ndarray | None = None

    @property
    def eps(self) -> complex:
        return root_of_unity(self.k)


@dataclass(frozen=True)
class PMStructure:
    """Direct-sum family: B^k = 1, B T = eps T B, poles lambda_a, weights t_a."""

    k: int
    m: int
    n: int
    B: np.ndarray
    T: np.ndarray
    lambdas: tuple[complex, ...]
    weights: tuple[complex, ...]

    @property
    def eps(self) -> complex:
        return root_of_unity(self.k)


Structure = MStructureA1 | MStructureA3 | MStructureAk | PMStructure


def perturb_structure(structure, field: str, scale: float, seed: int = 0):
    """Copy of a structure with one matrix field perturbed by scale * random.

    Deliberately breaks the algebraic relations; used by the verification CLI
    as a sensitivity probe.
    """
    old = getattr(structure, field)
    if not isinstance(old, np.ndarray):
        raise BadShapeError(f"field {field!r} is not a matrix")
    return replace(structure, **{field: old + scale * random_matrix(old.shape[0], seed)})


# --------------------------------------------------------------------------
# A1 / A3 constructors
# --------------------------------------------------------------------------
def a1_structure(n: int, seed: int = 0, c: np.ndarray | None = None) -> MStructureA1:
    if c is None:
        c = random_matrix(n, seed)
    c = np.asarray(c, dtype=complex)
    if c.shape != (n, n):
        raise BadShapeError(f"c must be {n}x{n}, got {c.shape}")
    return MStructureA1(n=n, c=c)


def involution_canonical(n: int, p: int, alphas) -> np.ndarray:
    """Canonical involution [[1_p, T], [0, -1_(n-p)]] with T_ij = delta_ij alpha_i.

    Squares to the identity exactly for any alphas; p indexes the equivalence
    class, the alphas are its continuous parameters.
    """
    if not 0 <= p <= n:
        raise BadShapeError(f"p must lie in [0, {n}], got {p}")
    alphas = tuple(alphas)
    r = min(p, n - p)
    if len(alphas) != r:
        raise BadShapeError(f"need min(p, n-p) = {r} alphas, got {len(alphas)}")
    A = np.zeros((n, n), dtype=complex)
    A[:p, :p] = np.eye(p)
    A[p:, p:] = -np.eye(n - p)
    for i, alpha in enumerate(alphas):
        A[i, p + i] = alpha
    return A


def random_involution(n: int, seed: int, p: int | None = None) -> np.ndarray:
    """S J S^-1 with J = diag(+1 x p, -1 x (n-p)) and seeded near-identity S.

    S stays close to the identity so the involution has O(1) entries; the
    flows built on it then conserve their invariants at tight tolerances.
    """
    p = n // 2 if p is None else p
    S = identity(n) + 0.35 * random_matrix(n, seed)
    J = np.diag([1.0 + 0j] * p + [-1.0 + 0j] * (n - p))
    return S @ J @ inverse(S)


def a3_block_pair(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Involution pair A = diag(1, -1), B = [[P, 1+P], [1-P, -P]] on n = 2d.

    B^2 = 1 holds identically for any d x d matrix P.
    """
    P = np.asarray(P, dtype=complex)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise BadShapeError(f"P must be square, got {P.shape}")
    d = P.shape[0]
    Id = np.eye(d, dtype=complex)
    Z = np.zeros((d, d), dtype=complex)
    A = np.block([[Id, Z], [Z, -Id]])
    B = np.block([[P, Id + P], [Id - P, -P]])
    return A, B


def a3_structure_block_pair(P: np.ndarray) -> MStructureA3:
    A, B = a3_block_pair(P)
    return MStructureA3(n=A.shape[0], A=A, B=B)


def a3_structure_canonical(n: int, p: int, alphas, seed: int = 0) -> MStructureA3:
    """A from the canonical involution form, B an independent random involution."""
    A = involution_canonical(n, p, alphas)
    B = random_involution(n, seed)
    return MStructureA3(n=n, A=A, B=B)


def a3_structure_random(n: int, seed: int) -> MStructureA3:
    A = random_involution(n, seed)
    B = random_involution(n, seed + 1)
    return MStructureA3(n=n, A=A, B=B)


def skew_a3_structure(n: int, p: int, alphas) -> MStructureA3:
    """Reduction data B = A^T with A a canonical involution; preserves x^T = -x."""
    A = involution_canonical(n, p, alphas)
    return MStructureA3(n=n, A=A, B=A.T.copy())


# --------------------------------------------------------------------------
# clock/shift machinery
# --------------------------------------------------------------------------
def clock_shift_pair(
    k: int, d: int, D: np.ndarray, check: str = "unit"
) -> tuple[np.ndarray, np.ndarray]:
    """Shift A (block-cyclic permutation) and clock T = blockdiag(eps^j D).

    A T = eps T A holds by construction and A^k is exactly the identity.
    ``check='unit'`` enforces that D^k - 1 is invertible (needed when the pair
    feeds the clock-triple resolution); ``check='none'`` skips it.
    """
    D = np.asarray(D, dtype=complex)
    if D.shape != (d, d):
        raise BadShapeError(f"D must be {d}x{d}, got {D.shape}")
    if k < 1:
        raise BadShapeError(f"k must be >= 1, got {k}")
    if check == "unit":
        Dk = np.linalg.matrix_power(D, k)
        try:
            inverse(Dk - np.eye(d))
        except SingularMatrixError as exc:
            raise SingularConstructionInputError(f"D^k - 1 is singular: {exc}") from exc
    elif check != "none":
        raise BadShapeError(f"unknown check mode {check!r}")
    eps = root_of_unity(k)
    n = k * d
    A = np.zeros((n, n), dtype=complex)
    T = np.zeros((n, n), dtype=complex)
    for j in range(k):
        A[j * d:(j + 1) * d, ((j + 1) % k) * d:(((j + 1) % k) + 1) * d] = np.eye(d)
        T[j * d:(j + 1) * d, j * d:(j + 1) * d] = eps**j * D
    return A, T


def derive_BC(T: np.ndarray, A: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Resolve the clock relations: B = (eps T - 1)(T - 1)^-1 A, C = T (T - 1)^-1."""
    T = np.asarray(T, dtype=complex)
    A = np.asarray(A, dtype=complex)
    n = T.shape[0]
    eps = root_of_unity(k)
    if frobenius(A @ T - eps * T @ A) > 1e-10 * max(1.0, frobenius(A) * frobenius(T)):
        raise BadShapeError("A T = eps T A fails; not a clock/shift pair")
    In = identity(n)
    Tm1_inv = inverse(T - In)  # raises SingularMatrixError: resample D
    B = (eps * T - In) @ Tm1_inv @ A
    C = T @ Tm1_inv
    return B, C


@dataclass(frozen=True)
class RelationReport:
    """Per-identity Frobenius residuals of the clock-triple relations."""

    k: int
    entries: tuple[tuple[str, float], ...]

    @property
    def max_residual(self) -> float:
        return max(r for _, r in self.entries)

    def table(self) -> str:
        width = max(len(name) for name, _ in self.entries)
        lines = [f"{name:<{width}}  {res:.3e}" for name, res in self.entries]
        lines.append(f"{'max':<{width}}  {self.max_residual:.3e}")
        return "\n".join(lines)


def verify_relations(A: np.ndarray, B: np.ndarray, C: np.ndarray, k: int) -> RelationReport:
    """Residuals of the defining identities of a clock triple.

    Checked: A^k = B^k = 1; the two-term resolution of B^i A^j for
    i + j != 0 mod k; and B^i A^(k-i) = 1 + (eps^i - 1) C.
    """
    n = A.shape[0]
    In = identity(n)
    eps = root_of_unity(k)
    Ap = matrix_powers(A, 2 * k + 1)
    Bp = matrix_powers(B, 2 * k + 1)
    entries = [
        ("A^k - 1", frobenius(Ap[k] - In)),
        ("B^k - 1", frobenius(Bp[k] - In)),
    ]
    for i in range(1, k):
        for j in range(1, k):
            if (i + j) % k == 0:
                continue
            c1 = (eps**(-j) - 1) / (eps**(-i - j) - 1)
            c2 = (eps**i - 1) / (eps**(i + j) - 1)
            res = frobenius(Bp[i] @ Ap[j] - c1 * Ap[i + j] - c2 * Bp[i + j])
            entries.append((f"B^{i} A^{j} resolution", res))
    for i in range(1, k):
        res = frobenius(Bp[i] @ Ap[k - i] - In - (eps**i - 1) * C)
        entries.append((f"B^{i} A^{k - i} = 1 + (eps^{i} - 1) C", res))
    return RelationReport(k=k, entries=tuple(entries))


def ak_structure(
    k: int,
    d: int,
    seed: int = 0,
    D: np.ndarray | None = None,
    scale: float = 0.5,
) -> MStructureAk:
    """Clock triple of size n = k d from a seeded (or given) block D.

    The seed block is scaled down by default so the clock resolvents stay
    well-conditioned and the relation residuals sit at roundoff.
    """
    if k < 2:
        raise BadShapeError(f"k must be >= 2, got {k}")
    if D is None:
        D = scale * random_matrix(d, seed) if d > 1 else np.array([[2.0 + 0j]])
    A, T = clock_shift_pair(k, d, np.asarray(D, dtype=complex))
    B, C = derive_BC(T, A, k)
    return MStructureAk(k=k, n=k * d, A=A, B=B, C=C, T=T)


# --------------------------------------------------------------------------
# skew-symmetric reduction of the clock family
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class SkewAkData:
    """Cyclic bidiagonal matrix A for the skew reduction, with diagnostics.

    ``cycle_residual`` reports |f^k(z1) - z1| for the Moebius recursion
    f(z) = 1 / (1 + eps - eps z); closure is observed numerically, not
    assumed.  ``constraint_residual`` is the Frobenius residual of
    (A^t A - eps^-1) A (A^t A - 1) = eps (A^t A - 1) A (A^t A - eps^-1),
    and ``b_residual`` is ||B^k - 1|| for B = (A^t)^-1.
    """

    k: int
    A: np.ndarray
    z_values: tuple[complex, ...]
    constraint_residual: float
    b_residual: float
    cycle_residual: float


def skew_Ak(k: int, z1: complex) -> SkewAkData:
    """A = sqrt(z1) e_(k,1) + sum_i sqrt(z_i) e_(i-1,i) with z_(j+1) = f(z_j).

    Principal square roots; the branch of the corner entry is flipped when
    needed so the cyclic product of the entries is +1 and hence A^k = 1.
    """
    if k < 2:
        raise BadShapeError(f"k must be >= 2, got {k}")
    eps = root_of_unity(k)
    zs = [complex(z1)]
    for _ in range(k - 1):
        den = 1 + eps - eps * zs[-1]
        if abs(den) < 1e-12:
            raise DegenerateParameterError(f"Moebius recursion hit a pole at z = {zs[-1]}")
        zs.append(1 / den)
    den = 1 + eps - eps * zs[-1]
    if abs(den) < 1e-12:
        raise DegenerateParameterError(f"Moebius recursion hit a pole at z = {zs[-1]}")
    cycle_residual = abs(1 / den - zs[0])
    if any(abs(z) < 1e-12 for z in zs):
        raise DegenerateParameterError("zero z_i makes A singular")
    roots = [cmath.sqrt(z) for z in zs]
    prod = np.prod(roots)
    if abs(prod + 1) < abs(prod - 1):  # pick the branch with cyclic product +1
        roots[0] = -roots[0]
    A = np.zeros((k, k), dtype=complex)
    A[k - 1, 0] = roots[0]
    for i in range(2, k + 1):
        A[i - 2, i - 1] = roots[i - 1]
    Ik = identity(k)
    AtA = A.T @ A
    lhs = (AtA - Ik / eps) @ A @ (AtA - Ik)
    rhs = eps * (AtA - Ik) @ A @ (AtA - Ik / eps)
    B = inverse(A.T)
    return SkewAkData(
        k=k,
        A=A,
        z_values=tuple(zs),
        constraint_residual=frobenius(lhs - rhs),
        b_residual=frobenius(np.linalg.matrix_power(B, k) - Ik),
        cycle_residual=cycle_residual,
    )


def skew_ak_structure(k: int, z1: complex | None = None, A: np.ndarray | None = None) -> MStructureAk:
    """Clock triple for the skew reduction: B = (A^t)^-1, C = eps/(1-eps)(A^t A - 1).

    T is recovered from C via T = (C - 1)^-1 C when that yields a genuine
    clock partner (A T = eps T A); otherwise T is left unset and dressing is
    unavailable for the structure.
    """
    if (z1 is None) == (A is None):
        raise BadShapeError("provide exactly one of z1 or A")
    if A is None:
        A = skew_Ak(k, z1).A
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    eps = root_of_unity(k)
    In = identity(n)
    B = inverse(A.T)
    C = eps / (1 - eps) * (A.T @ A - In)
    T = None
    try:
        T_candidate = inverse(C - In) @ C
        if frobenius(A @ T_candidate - eps * T_candidate @ A) < 1e-9 * max(
            1.0, frobenius(A) * frobenius(T_candidate)
        ):
            T = T_candidate
    except SingularMatrixError:
        pass
    return MStructureAk(k=k, n=n, A=A, B=B, C=C, T=T)


def skew_block_diagonal(k: int, specs) -> np.ndarray:
    """Block-diagonal composite of skew blocks.

    ``specs`` is a sequence of (size, value); size >= 2 builds a cyclic block
    from z1 = value, size 1 places the scalar value itself.  The composite is
    validated by the caller through ``skew_ak_structure``.
    """
    blocks = []
    for size, value in specs:
        if size == 1:
            blocks.append(np.array([[complex(value)]]))
        elif size >= 2:
            blocks.append(skew_Ak(size, value).A)
        else:
            raise BadBlockShapeError(f"block size must be >= 1, got {size}")
    if not blocks:
        raise BadBlockShapeError("need at least one block")
    n = sum(b.shape[0] for b in blocks)
    A = np.zeros((n, n), dtype=complex)
    at = 0
    for b in blocks:
        s = b.shape[0]
        A[at:at + s, at:at + s] = b
        at += s
    return A


# --------------------------------------------------------------------------
# PM structures
# --------------------------------------------------------------------------
def pm_structure(
    k: int,
    m: int,
    lambdas,
    weights,
    d: int | None = None,
    seed: int = 0,
    B: np.ndarray | None = None,
    T: np.ndarray | None = None,
    scale: float = 0.5,
) -> PMStructure:
    """Direct-sum structure; (B, T) default to a seeded clock/shift pair.

    Genericity of the poles is enforced: lambda_a^k pairwise distinct with
    relative gap >= 1e-6, and T^k - lambda_a^k invertible for every a.
    """
    lambdas = tuple(complex(v) for v in lambdas)
    weights = tuple(complex(v) for v in weights)
    if len(lambdas) != m or len(weights) != m:
        raise BadShapeError(f"need {m} lambdas and weights, got {len(lambdas)}, {len(weights)}")
    if (B is None) != (T is None):
        raise BadShapeError("give both B and T or neither")
    if B is None:
        if d is None:
            raise BadShapeError("need block size d when B, T are seeded")
        D = scale * random_matrix(d, seed)
        # shift matrix plays the role of B; its clock partner is T
        B, T = clock_shift_pair(k, d, D, check="none")
    B = np.asarray(B, dtype=complex)
    T = np.asarray(T, dtype=complex)
    n = B.shape[0]
    eps = root_of_unity(k)
    if frobenius(np.linalg.matrix_power(B, k) - identity(n)) > _REL_TOL * max(1.0, frobenius(B) ** k):
        raise BadShapeError("B^k = 1 fails")
    if frobenius(B @ T - eps * T @ B) > _REL_TOL * max(1.0, frobenius(B) * frobenius(T)):
        raise BadShapeError("B T = eps T B fails")
    lk = [l**k for l in lambdas]
    gap_scale = max(max(abs(v) for v in lk), 1.0)
    for a in range(m):
        for b in range(a + 1, m):
            if abs(lk[a] - lk[b]) < _GAP_RTOL * gap_scale:
                raise PoleCollisionError(f"lambda_{a}^k and lambda_{b}^k coincide to tolerance")
    Tk = np.linalg.matrix_power(T, k)
    for a, val in enumerate(lk):
        try:
            inverse(Tk - val * identity(n))
        except SingularMatrixError as exc:
            raise SingularConstructionInputError(
                f"T^k - lambda_{a}^k is singular: {exc}"
            ) from exc
    return PMStructure(k=k, m=m, n=n, B=B, T=T, lambdas=lambdas, weights=weights)


def _pm_pieces(s: PMStructure):
    """Powers of B and the resolvents used by the product/operator formulas."""
    eps = s.eps
    In = identity(s.n)
    B_inv = inverse(s.B)
    Bp = matrix_powers(s.B, s.k)
    Bm = matrix_powers(B_inv, s.k)
    resolvent = {}
    for i in range(s.k):
        for b in range(s.m):
            resolvent[i, b] = inverse(eps**(-i) * s.T - s.lambdas[b] * In)
    diag_res = [inverse(s.T - lam * In) for lam in s.lambdas]
    return eps, In, Bp, Bm, resolvent, diag_res


# --------------------------------------------------------------------------
# operator R and the induced product
# --------------------------------------------------------------------------
def build_R(structure: Structure):
    """The multiplier operator R whose deformation x o y = R(x)y + xR(y) - R(xy)."""
    if isinstance(structure, MStructureA1):
        return MultiplierOperator(structure.n, ((structure.c, identity(structure.n)),))
    if isinstance(structure, MStructureA3):
        A, B = structure.A, structure.B
        return MultiplierOperator(structure.n, ((A, B), (B @ A, identity(structure.n))))
    if isinstance(structure, MStructureAk):
        k, n = structure.k, structure.n
        eps = structure.eps
        Ap = matrix_powers(structure.A, k + 1)
        Bp = matrix_powers(structure.B, k)
        terms = [(Ap[k - i] / (eps**i - 1), Bp[i]) for i in range(1, k)]
        terms.append((structure.C, identity(n)))
        return MultiplierOperator(n, tuple(terms))
    if isinstance(structure, PMStructure):
        return _build_R_pm(structure)
    raise DimensionMismatchError(f"unknown structure kind {type(structure)!r}")


def _build_R_pm(s: PMStructure) -> BlockOperator:
    eps, In, Bp, Bm, resolvent, diag_res = _pm_pieces(s)
    k, m = s.k, s.m
    table = [[zero_operator(s.n) for _ in range(m)] for _ in range(m)]
    for a in range(m):
        scalar = 0j
        for b in range(m):
            terms = []
            for i in range(k):
                if i == 0 and b == a:
                    continue
                g = s.weights[b] / (eps**i * s.lambdas[b] - s.lambdas[a])
                left = g * (s.T - s.lambdas[a] * In) @ resolvent[i, b] @ Bm[i]
                terms.append((left, Bp[i]))
                scalar += eps**i * s.weights[b] / (eps**i * s.lambdas[b] - s.lambdas[a])
            if terms:
                table[a][b] = table[a][b] + MultiplierOperator(s.n, tuple(terms))
        diag = s.weights[a] * diag_res[a] - scalar * In
        table[a][a] = table[a][a] + MultiplierOperator(s.n, ((diag, In),))
    return BlockOperator(m, s.n, tuple(tuple(row) for row in table))


def circ_from_operator(r_op, x, y):
    """x o y = R(x) y + x R(y) - R(x y) for a prebuilt R."""
    if isinstance(x, np.ndarray):
        return apply(r_op, x) @ y + x @ apply(r_op, y) - apply(r_op, x @ y)
    rx, ry, rxy = r_op(x), r_op(y), r_op(state_product(x, y))
    return FlowState.of(
        *(rx.parts[a] @ y.parts[a] + x.parts[a] @ ry.parts[a] - rxy.parts[a] for a in range(x.m))
    )


def circ_product(structure: Structure, x, y):
    """The induced compatible product x o y."""
    return circ_from_operator(build_R(structure), x, y)


def circ_product_pm_closed(s: PMStructure, x: FlowState, y: FlowState) -> FlowState:
    """Closed form of the direct-sum product (independent of the R route)."""
    eps, In, Bp, Bm, resolvent, diag_res = _pm_pieces(s)
    k, m = s.k, s.m
    out = []
    for a in range(m):
        acc = s.weights[a] * x.parts[a] @ diag_res[a] @ y.parts[a]
        for b in range(m):
            for i in range(k):
                if i == 0 and b == a:
                    continue
                g = s.weights[b] / (eps**i * s.lambdas[b] - s.lambdas[a])
                F = (s.T - s.lambdas[a] * In) @ resolvent[i, b]
                acc += g * (
                    F @ Bm[i] @ x.parts[b] @ Bp[i] @ y.parts[a]
                    + x.parts[a] @ F @ Bm[i] @ y.parts[b] @ Bp[i]
                    - F @ Bm[i] @ x.parts[b] @ y.parts[b] @ Bp[i]
                )
                acc -= eps**i * g * x.parts[a] @ y.parts[a]
        out.append(acc)
    return FlowState.of(*out)


def pencil_product(structure: Structure, lam: complex, x, y):
    """x bullet y = x y + lam * (x o y)."""
    r_op = build_R(structure)
    if isinstance(x, np.ndarray):
        return x @ y + lam * circ_from_operator(r_op, x, y)
    return state_product(x, y) + lam * circ_from_operator(r_op, x, y)


def _random_probe(structure: Structure, seed: int):
    if isinstance(structure, PMStructure):
        return random_state(structure.n, structure.m, seed)
    return random_matrix(structure.n, seed)


def _probe_norm(x) -> float:
    return frobenius(x) if isinstance(x, np.ndarray) else x.norm()


def pencil_associativity_check(
    structure: Structure,
    lambda_samples,
    n_triples: int = 10,
    seed: int = 0,
) -> float:
    """max relative associativity defect of the pencil over samples and triples.

    For each lam and random triple (X, Y, Z) computes
    ||(X*Y)*Z - X*(Y*Z)||_F / max(1, ||X|| ||Y|| ||Z||) with * the pencil
    product; exact associativity means this is pure roundoff.
    """
    r_op = build_R(structure)

    def bullet(lam, x, y):
        if isinstance(x, np.ndarray):
            return x @ y + lam * circ_from_operator(r_op, x, y)
        return state_product(x, y) + lam * circ_from_operator(r_op, x, y)

    worst = 0.0
    probe_seed = seed
    for lam in lambda_samples:
        for _ in range(n_triples):
            x = _random_probe(structure, probe_seed)
            y = _random_probe(structure, probe_seed + 1)
            z = _random_probe(structure, probe_seed + 2)
            probe_seed += 3
            defect = bullet(lam, bullet(lam, x, y), z) - bullet(lam, x, bullet(lam, y, z))
            scale = max(1.0, _probe_norm(x) * _probe_norm(y) * _probe_norm(z))
            worst = max(worst, _probe_norm(defect) / scale)
    return worst


# --------------------------------------------------------------------------
# structure invariant residuals (reported, not raised)
# --------------------------------------------------------------------------
def structure_residuals(structure: Structure) -> dict[str, float]:
    """Residuals of the defining algebraic relations, keyed by identity name."""
    In = identity(structure.n)
    if isinstance(structure, MStructureA1):
        return {}
    if isinstance(structure, MStructureA3):
        return {
            "A^2 - 1": frobenius(structure.A @ structure.A - In),
            "B^2 - 1": frobenius(structure.B @ structure.B - In),
        }
    if isinstance(structure, MStructureAk):
        report = verify_relations(structure.A, structure.B, structure.C, structure.k)
        out = dict(report.entries)
        if structure.T is not None:
            out["A T - eps T A"] = frobenius(
                structure.A @ structure.T - structure.eps * structure.T @ structure.A
            )
        return out
    if isinstance(structure, PMStructure):
        return {
            "B^k - 1": frobenius(np.linalg.matrix_power(structure.B, structure.k) - In),
            "B T - eps T B": frobenius(
                structure.B @ structure.T - structure.eps * structure.T @ structure.B
            ),
        }
    raise DimensionMismatchError(f"unknown structure kind {type(structure)!r}")
