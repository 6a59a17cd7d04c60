"""Closed-form dressing operators S_lam, their inverses, and Lax operators.

At a fixed spectral parameter lam inside a working annulus, each family
admits an invertible operator S with the intertwining property

    S(X) S(Y) = S(X Y + lam * X o Y),

so S turns the deformed product into the plain one.  The Lax operator is
L = (S^-1)^* and the partner is A = S / lam; ``verify_homomorphism`` and the
inverse-composition residual are the correctness gates for everything here.

Branch conventions: principal roots, continuous in lam with S -> identity as
lam -> 0.  The root functions mu are pinned to the branch through their
values at lam = 0 and followed by Newton continuation.
"""

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchPointError,
    ContinuationFailedError,
    LambdaTooSmallError,
    PoleCollisionError,
    WrongFamilyError,
)
from .linalg import frobenius, identity, inverse, matrix_powers, random_matrix
from .operators import (
    BlockOperator,
    MultiplierOperator,
    apply,
    compose,
    identity_block_operator,
    identity_operator,
    op_residual,
    random_state,
    state_product,
)
from .structures import (
    MStructureA1,
    MStructureA3,
    MStructureAk,
    PMStructure,
    build_R,
    circ_from_operator,
)

__all__ = [
    "DEFAULT_ANNULUS",
    "DressingEvaluation",
    "dress",
    "dressing_a1",
    "dressing_a3",
    "dressing_ak",
    "dressing_pm",
    "inverse_composition_residual",
    "mu_ak",
    "mu_condition_residual",
    "mu_solver_pm",
    "verify_homomorphism",
]

DEFAULT_ANNULUS = (0.05, 0.4)


@dataclass(frozen=True)
class DressingEvaluation:
    """S, S^-1, L = (S^-1)^*, and A = S/lam at one spectral parameter.

    A_op is None when evaluated exactly at lam = 0 (where S is the identity
    and the Lax partner is undefined).
    """

    lam: complex
    S: MultiplierOperator | BlockOperator
    S_inv: MultiplierOperator | BlockOperator
    L_op: MultiplierOperator | BlockOperator
    A_op: MultiplierOperator | BlockOperator | None
    mu: complex | tuple[complex, ...] | None = None


# --------------------------------------------------------------------------
# dressings of the single-component families
# --------------------------------------------------------------------------
def dressing_a1(c: np.ndarray, lam: complex) -> DressingEvaluation:
    """S(x) = (1 + lam c) x, inverse by the resolvent, L(x) = x (1 + lam c)^-1."""
    n = c.shape[0]
    In = identity(n)
    res = inverse(In + lam * c)
    S = MultiplierOperator(n, ((In + lam * c, In),))
    S_inv = MultiplierOperator(n, ((res, In),))
    L_op = S_inv.adjoint()
    A_op = S.scale(1 / lam) if lam != 0 else None
    return DressingEvaluation(lam=lam, S=S, S_inv=S_inv, L_op=L_op, A_op=A_op)


def dressing_a3(A: np.ndarray, B: np.ndarray, lam: complex) -> DressingEvaluation:
    """Explicit involution-pair dressing with q = sqrt(1 - 4 lam^2).

    Principal branch, q(0) = 1; lam = +-1/2 are branch points.
    """
    disc = 1 - 4 * lam * lam
    if abs(disc) < 1e-8:
        raise BranchPointError(f"lambda = {lam} sits at a branch point of sqrt(1 - 4 lam^2)")
    q = cmath.sqrt(disc)
    n = A.shape[0]
    In = identity(n)
    K = A @ B + B @ A
    G = inverse(In + lam * K) / q
    S = MultiplierOperator(
        n,
        (
            ((1 - q) / 2 * B, B),
            ((1 + q) / 2 * In, In),
            (lam * A, B),
            (lam * B @ A, In),
        ),
    )
    S_inv = MultiplierOperator(
        n,
        (
            ((q - 1) / 2 * G @ B, B),
            ((1 + q) / 2 * G, In),
            (lam * G @ A @ B, In),
            (-lam * G @ A, B),
        ),
    )
    L_op = S_inv.adjoint()
    A_op = S.scale(1 / lam) if lam != 0 else None
    return DressingEvaluation(lam=lam, S=S, S_inv=S_inv, L_op=L_op, A_op=A_op)


def _check_annulus(lam: complex, annulus) -> None:
    lo, hi = annulus
    if abs(lam) < lo:
        raise LambdaTooSmallError(f"|lambda| = {abs(lam):.3g} below annulus minimum {lo}")
    if abs(lam) > hi:
        raise BranchPointError(f"|lambda| = {abs(lam):.3g} above annulus maximum {hi}")


def mu_ak(k: int, lam: complex) -> complex:
    """mu = ((2 + (k+1) lam) / (2 - (k-1) lam))^(1/k), principal branch, mu(0) = 1."""
    den = 2 - (k - 1) * lam
    if abs(den) < 1e-8:
        raise BranchPointError(f"lambda = {lam} at the pole 2/(k-1) of mu")
    ratio = (2 + (k + 1) * lam) / den
    if abs(ratio) < 1e-12:
        raise BranchPointError(f"lambda = {lam} at the zero -2/(k+1) of mu")
    return cmath.exp(cmath.log(ratio) / k)


def dressing_ak(
    structure: MStructureAk, lam: complex, annulus=DEFAULT_ANNULUS
) -> DressingEvaluation:
    """Clock-family dressing: S = sum_i P_i x B^i, S^-1 = sum_i Q_i x B^i.

    P_i = lam/(eps^i mu - 1) (mu T - 1)(T - 1)^-1 A^(k-i) and
    Q_i = (mu^k-1)^2 / (lam k^2 mu^(k-1) (mu - eps^i))
          (eps^(k-i) T - 1)(eps^(k-i) mu T - 1)^-1 A^(k-i),
    with L(x) = sum_i B^i x Q_i, which is precisely adjoint(S^-1).
    """
    if structure.T is None:
        raise WrongFamilyError("structure carries no clock matrix T; dressing unavailable")
    _check_annulus(lam, annulus)
    k, n, T = structure.k, structure.n, structure.T
    eps = structure.eps
    mu = mu_ak(k, lam)
    In = identity(n)
    Ap = matrix_powers(structure.A, k + 1)
    Bp = matrix_powers(structure.B, k)
    Tm1_inv = inverse(T - In)
    s_terms, sinv_terms = [], []
    for i in range(k):
        if abs(eps**i * mu - 1) < 1e-8:
            raise BranchPointError(f"eps^{i} mu = 1 at lambda = {lam}")
        if abs(mu - eps**i) < 1e-8:
            raise BranchPointError(f"mu = eps^{i} at lambda = {lam}")
        P_i = lam / (eps**i * mu - 1) * (mu * T - In) @ Tm1_inv @ Ap[k - i]
        Q_i = (
            (mu**k - 1) ** 2
            / (lam * k**2 * mu ** (k - 1) * (mu - eps**i))
            * (eps ** (k - i) * T - In)
            @ inverse(eps ** (k - i) * mu * T - In)
            @ Ap[k - i]
        )
        s_terms.append((P_i, Bp[i]))
        sinv_terms.append((Q_i, Bp[i]))
    S = MultiplierOperator(n, tuple(s_terms))
    S_inv = MultiplierOperator(n, tuple(sinv_terms))
    L_op = S_inv.adjoint()  # = sum_i B^i x Q_i
    return DressingEvaluation(lam=lam, S=S, S_inv=S_inv, L_op=L_op, A_op=S.scale(1 / lam), mu=mu)


# --------------------------------------------------------------------------
# direct-sum family: root branches and block dressing
# --------------------------------------------------------------------------
def _mu_taylor(s: PMStructure, lam: complex) -> list[complex]:
    """Second-order expansion of each branch around lam = 0."""
    out = []
    for a in range(s.m):
        la, ta = s.lambdas[a], s.weights[a]
        c2 = (s.k - 1) / 2 * ta / la + s.k * sum(
            s.weights[g] * s.lambdas[g] ** (s.k - 1) / (s.lambdas[g] ** s.k - la**s.k)
            for g in range(s.m)
            if g != a
        )
        out.append(la - ta * lam - ta * c2 * lam * lam)
    return out


def _mu_newton(s: PMStructure, lam: complex, seed_value: complex, tol: float, max_iter: int):
    k = s.k
    lams = np.asarray(s.lambdas)
    ts = np.asarray(s.weights)
    target = 1 / (k * lam)
    # the condition is a difference of terms of size |target|; the reachable
    # residual scales with it
    tol = tol * max(1.0, abs(target))

    def g(mu):
        return complex(np.sum(ts * lams ** (k - 1) / (lams**k - mu**k)) - target)

    mu = seed_value
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        val = g(mu)
        if abs(val) < tol:
            return mu, abs(val)
        dg = complex(np.sum(ts * lams ** (k - 1) * k * mu ** (k - 1) / (lams**k - mu**k) ** 2))
        if abs(dg) < 1e-300:
            return None, abs(val)
        step = val / dg
        mu = mu - step
        if not (np.isfinite(mu.real) and np.isfinite(mu.imag)):
            return None, float("inf")
        # a sub-ulp step means the root is resolved to the last representable
        # bit even if |g| floors at |dg| * ulp (steep condition at small lam)
        if abs(step) <= 8 * eps * max(1.0, abs(mu)):
            return mu, abs(g(mu))
    val = g(mu)
    return (mu, abs(val)) if abs(val) < tol else (None, abs(val))


def mu_solver_pm(
    s: PMStructure,
    lam: complex,
    newton_tol: float = 1e-13,
    max_iter: int = 50,
) -> tuple[complex, ...]:
    """All m roots of sum_g t_g lam_g^(k-1) / (lam_g^k - mu^k) = 1/(k lam).

    Root a lives on the branch with mu_a(0) = lambda_a; seeding uses the
    second-order expansion and falls back to stepwise continuation in lam
    (halving the step on Newton failure).  Raises ContinuationFailedError if
    a branch is lost or two roots collide.
    """
    if lam == 0:
        raise LambdaTooSmallError("mu branches are defined by continuation from lam = 0")

    def solve_all(lam_val, seeds):
        roots = []
        for seed_value in seeds:
            mu, _ = _mu_newton(s, lam_val, seed_value, newton_tol, max_iter)
            if mu is None:
                return None
            roots.append(mu)
        return roots

    roots = solve_all(lam, _mu_taylor(s, lam))
    steps = 2
    while roots is None and steps <= 64:
        path = [lam * (j + 1) / steps for j in range(steps)]
        seeds = _mu_taylor(s, path[0])
        roots = None
        for lam_j in path:
            roots = solve_all(lam_j, seeds)
            if roots is None:
                break
            seeds = roots
        steps *= 2
    if roots is None:
        raise ContinuationFailedError(f"Newton continuation failed at lambda = {lam}")
    scale = max(max(abs(r) for r in roots) ** s.k, 1.0)
    for a in range(s.m):
        for b in range(a + 1, s.m):
            if abs(roots[a] ** s.k - roots[b] ** s.k) < 1e-8 * scale:
                raise ContinuationFailedError(
                    f"mu branches {a} and {b} collided at lambda = {lam}"
                )
    return tuple(roots)


def mu_condition_residual(s: PMStructure, lam: complex, mus) -> float:
    """max_a |sum_g t_g lam_g^(k-1)/(lam_g^k - mu_a^k) - 1/(k lam)|."""
    lams = np.asarray(s.lambdas)
    ts = np.asarray(s.weights)
    worst = 0.0
    for mu in mus:
        val = np.sum(ts * lams ** (s.k - 1) / (lams**s.k - mu**s.k)) - 1 / (s.k * lam)
        worst = max(worst, abs(complex(val)))
    return worst


def dressing_pm(
    s: PMStructure,
    lam: complex,
    newton_tol: float = 1e-13,
) -> DressingEvaluation:
    """Block dressing of the direct-sum family.

    S has blocks built from the resolvents (eps^-i T - lambda_b)^-1 and the
    root branches mu_a.  The Lax operator block (a <- b) is

        sum_i  prod_s (lam_b^k - mu_s^k)(lam_s^k - mu_a^k)
               -----------------------------------------------------------
               k^2 lam_b^(k-1) mu_a^(k-1) (lam_b - eps^i mu_a)
                 prod_(s != b)(lam_b^k - lam_s^k) prod_(s != a)(mu_s^k - mu_a^k)

               * B^i x_b (T - lam_b) / (t_b lam (eps^-i T - mu_a)) B^-i,

    and S^-1 = adjoint(L).  Correctness is gated by the homomorphism and
    inverse-composition residuals, including the m = 1 degenerations.
    """
    mus = mu_solver_pm(s, lam, newton_tol=newton_tol)
    k, m, n = s.k, s.m, s.n
    eps = s.eps
    In = identity(n)
    B_inv = inverse(s.B)
    Bp = matrix_powers(s.B, k)
    Bm = matrix_powers(B_inv, k)
    lk = np.array([l**k for l in s.lambdas])
    mk = np.array([mu**k for mu in mus])

    s_table = []
    l_table = []
    for a in range(m):
        s_row, l_row = [], []
        for b in range(m):
            s_terms, l_terms = [], []
            num = complex(np.prod(lk[b] - mk) * np.prod(lk - mk[a]))
            den = complex(
                k**2
                * s.lambdas[b] ** (k - 1)
                * mus[a] ** (k - 1)
                * np.prod([lk[b] - lk[q] for q in range(m) if q != b] or [1.0])
                * np.prod([mk[q] - mk[a] for q in range(m) if q != a] or [1.0])
            )
            if abs(den) < 1e-300:
                raise PoleCollisionError("degenerate pole products in the Lax block")
            for i in range(k):
                gap_s = eps**i * s.lambdas[b] - mus[a]
                gap_l = s.lambdas[b] - eps**i * mus[a]
                if abs(gap_s) < 1e-10 or abs(gap_l) < 1e-10:
                    raise PoleCollisionError(
                        f"pole gap below tolerance at lambda = {lam} (i = {i}, blocks {a},{b})"
                    )
                s_left = lam * s.weights[b] / gap_s * (s.T - mus[a] * In) @ inverse(
                    eps ** (-i) * s.T - s.lambdas[b] * In
                ) @ Bm[i]
                s_terms.append((s_left, Bp[i]))
                l_right = (
                    (s.T - s.lambdas[b] * In)
                    @ inverse(eps ** (-i) * s.T - mus[a] * In)
                    @ Bm[i]
                    / (s.weights[b] * lam)
                )
                l_terms.append((num / (den * gap_l) * Bp[i], l_right))
            s_row.append(MultiplierOperator(n, tuple(s_terms)))
            l_row.append(MultiplierOperator(n, tuple(l_terms)))
        s_table.append(tuple(s_row))
        l_table.append(tuple(l_row))
    S = BlockOperator(m, n, tuple(s_table))
    L_op = BlockOperator(m, n, tuple(l_table))
    S_inv = L_op.adjoint()
    return DressingEvaluation(
        lam=lam, S=S, S_inv=S_inv, L_op=L_op, A_op=S.scale(1 / lam), mu=mus
    )


def dress(structure, lam: complex, annulus=DEFAULT_ANNULUS) -> DressingEvaluation:
    """Family dispatch for the dressing evaluation."""
    if isinstance(structure, MStructureA1):
        return dressing_a1(structure.c, lam)
    if isinstance(structure, MStructureA3):
        return dressing_a3(structure.A, structure.B, lam)
    if isinstance(structure, MStructureAk):
        return dressing_ak(structure, lam, annulus=annulus)
    if isinstance(structure, PMStructure):
        return dressing_pm(structure, lam)
    raise WrongFamilyError(f"no dressing for {type(structure)!r}")


# --------------------------------------------------------------------------
# correctness gates
# --------------------------------------------------------------------------
def verify_homomorphism(
    ev: DressingEvaluation, structure, n_pairs: int = 10, seed: int = 0
) -> float:
    """max relative residual of S(X) S(Y) = S(X Y + lam X o Y) on random pairs."""
    r_op = build_R(structure)
    multi = isinstance(structure, PMStructure)
    worst = 0.0
    for j in range(n_pairs):
        if multi:
            x = random_state(structure.n, structure.m, seed + 2 * j)
            y = random_state(structure.n, structure.m, seed + 2 * j + 1)
            lhs = state_product(ev.S(x), ev.S(y))
            rhs = ev.S(state_product(x, y) + ev.lam * circ_from_operator(r_op, x, y))
            res = (lhs - rhs).norm() / max(1.0, x.norm() * y.norm())
        else:
            x = random_matrix(structure.n, seed + 2 * j)
            y = random_matrix(structure.n, seed + 2 * j + 1)
            lhs = apply(ev.S, x) @ apply(ev.S, y)
            rhs = apply(ev.S, x @ y + ev.lam * circ_from_operator(r_op, x, y))
            res = frobenius(lhs - rhs) / max(1.0, frobenius(x) * frobenius(y))
        worst = max(worst, res)
    return worst


def inverse_composition_residual(
    ev: DressingEvaluation, n_samples: int = 10, seed: int = 0
) -> float:
    """op_residual of S^-1 o S against the identity operator."""
    if isinstance(ev.S, BlockOperator):
        ident = identity_block_operator(ev.S.m, ev.S.n)
    else:
        ident = identity_operator(ev.S.n)
    return op_residual(compose(ev.S_inv, ev.S), ident, n_samples=n_samples, seed=seed)
