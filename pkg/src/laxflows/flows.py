"""Matrix ODE flows, their conserved quantities, and verification probes.

The flow attached to a structure is x_t = sign * [R(x) + R*(x), x],
componentwise for tuples.  sign = +1 is the orientation consistent with the
Lax pair L = (S^-1)^*(x), A = S(x)/lam (``lax_residual`` pins this down);
sign = -1 gives the time-reversed classical writing x_t = [x, R + R*], which
for the one-matrix family reads x_t = x^2 c - c x^2.  Both orientations
conserve every invariant here.

Conserved quantities come in three kinds: the low-order named integrals of
the first two families, the Hamiltonian H = trace(x R(x)), and the spectral
family tr(L(lam)^j) sampled over lam.
"""

from dataclasses import dataclass

import numpy as np

from .dressing import DressingEvaluation, dress
from .errors import (
    BadBlockShapeError,
    BadShapeError,
    NonFiniteError,
    ReductionViolatedError,
    WrongFamilyError,
)
from .linalg import SplitMix64, frobenius, identity, inverse, trace_powers
from .operators import FlowState, apply, trace_pairing
from .structures import (
    MStructureA1,
    MStructureA3,
    MStructureAk,
    PMStructure,
    a1_structure,
    build_R,
)

__all__ = [
    "ConservationReport",
    "IntegratorConfig",
    "Trajectory",
    "VolterraReport",
    "as_state",
    "conservation_report",
    "cyclic_c",
    "cyclic_embedding",
    "grad_check",
    "hamiltonian",
    "lax_residual",
    "named_integrals",
    "random_skew",
    "rhs",
    "rhs_operator",
    "rhs_pm_explicit",
    "richardson_ratio",
    "rk4_integrate",
    "skew_constraint_residual",
    "skew_preservation",
    "spectral_invariants",
    "volterra_chain_rhs",
    "volterra_equivalence",
    "volterra_structure",
]


def as_state(x) -> FlowState:
    return x if isinstance(x, FlowState) else FlowState.of(x)


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------
def rhs_operator(structure):
    """Precompute M = R + R*; the flow is x_t = sign [M(x), x] componentwise."""
    r_op = build_R(structure)
    m_op = r_op + r_op.adjoint()

    def f(x: FlowState, sign: int = 1) -> FlowState:
        mx = apply(m_op, x)
        return FlowState.of(
            *(
                sign * (ma @ xa - xa @ ma)
                for ma, xa in zip(mx.parts, x.parts)
            )
        )

    return f


def rhs(structure, x, sign: int = 1) -> FlowState:
    """sign * [R(x) + R*(x), x]; accepts a matrix or a FlowState."""
    return rhs_operator(structure)(as_state(x), sign)


def rhs_pm_explicit(structure: PMStructure, x: FlowState) -> FlowState:
    """The direct-sum system written out componentwise (sign = +1 orientation).

    The bracket aggregate is assembled term by term from the resolvent sums
    rather than through operator objects; scalar multiples of x_a drop out of
    the bracket and are omitted.  Agrees with rhs(..., sign=+1) to roundoff.
    """
    s = structure
    k, m, n = s.k, s.m, s.n
    eps = s.eps
    In = identity(n)
    B_inv = inverse(s.B)
    Bp = [np.linalg.matrix_power(s.B, i) for i in range(k)]
    Bm = [np.linalg.matrix_power(B_inv, i) for i in range(k)]
    out = []
    for a in range(m):
        res_a = s.weights[a] * inverse(s.T - s.lambdas[a] * In)
        agg = res_a @ x.parts[a] + x.parts[a] @ res_a
        for b in range(m):
            for i in range(k):
                if i == 0 and b == a:
                    continue
                F = (
                    s.weights[b]
                    / (eps**i * s.lambdas[b] - s.lambdas[a])
                    * (s.T - s.lambdas[a] * In)
                    @ inverse(eps ** (-i) * s.T - s.lambdas[b] * In)
                )
                agg += F @ Bm[i] @ x.parts[b] @ Bp[i]
                # adjoint half: the pairing swaps (a, b) in the coefficient
                Fs = (
                    s.weights[a]
                    / (eps**i * s.lambdas[a] - s.lambdas[b])
                    * (s.T - s.lambdas[b] * In)
                    @ inverse(eps ** (-i) * s.T - s.lambdas[a] * In)
                )
                agg += Bp[i] @ x.parts[b] @ Fs @ Bm[i]
        out.append(agg @ x.parts[a] - x.parts[a] @ agg)
    return FlowState.of(*out)


# --------------------------------------------------------------------------
# time integration
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    steps: int
    sign: int = 1
    record_every: int = 1
    max_norm: float = 1e8
    max_time: float = 10.0

    def __post_init__(self):
        if self.dt <= 0 or self.steps < 1:
            raise BadShapeError("dt must be positive and steps >= 1")
        if self.sign not in (+1, -1):
            raise BadShapeError(f"sign must be +1 or -1, got {self.sign}")
        if self.record_every < 1:
            raise BadShapeError("record_every must be >= 1")
        if self.dt * self.steps > self.max_time:
            raise BadShapeError(
                f"horizon dt*steps = {self.dt * self.steps:.3g} exceeds max_time = {self.max_time}"
            )


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple[FlowState, ...]

    @property
    def final(self) -> FlowState:
        return self.states[-1]


def _rk4(f, y0: FlowState, config: IntegratorConfig) -> Trajectory:
    dt = config.dt
    times = [0.0]
    states = [y0]
    y = y0
    for step in range(1, config.steps + 1):
        k1 = f(y)
        k2 = f(y + (dt / 2) * k1)
        k3 = f(y + (dt / 2) * k2)
        k4 = f(y + dt * k3)
        y = y + (dt / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = y.norm()
        if not np.isfinite(norm) or norm > config.max_norm:
            err = NonFiniteError(f"blow-up at t = {step * dt:.4g} (norm {norm:.3g})")
            err.partial = Trajectory(np.array(times), tuple(states))
            raise err
        if step % config.record_every == 0 or step == config.steps:
            times.append(step * dt)
            states.append(y)
    return Trajectory(np.array(times), tuple(states))


def rk4_integrate(structure, x0, config: IntegratorConfig) -> Trajectory:
    """Classical fixed-step RK4 for the structure flow; deterministic."""
    f = rhs_operator(structure)
    sign = config.sign
    return _rk4(lambda y: f(y, sign), as_state(x0), config)


def richardson_ratio(structure, x0, dt: float, steps: int, sign: int = 1) -> float:
    """||x_h(T) - x_(h/2)(T)|| / ||x_(h/2)(T) - x_(h/4)(T)||, approx 16 for RK4."""
    ends = []
    for refine in (1, 2, 4):
        cfg = IntegratorConfig(dt=dt / refine, steps=steps * refine, sign=sign,
                               record_every=steps * refine)
        ends.append(rk4_integrate(structure, x0, cfg).final)
    e1 = (ends[0] - ends[1]).norm()
    e2 = (ends[1] - ends[2]).norm()
    return e1 / e2


# --------------------------------------------------------------------------
# conserved quantities
# --------------------------------------------------------------------------
def hamiltonian(structure, x) -> complex:
    """H = sum_a trace(x_a R_a(x)); conserved along both orientations."""
    x = as_state(x)
    return trace_pairing(x, apply(build_R(structure), x))


def grad_check(structure, x, n_dirs: int = 20, step: float = 1e-6, seed: int = 0) -> float:
    """Compare R(x) + R*(x) against central differences of H on sampled entries.

    H is quadratic in x, so central differencing is exact up to roundoff; the
    residual is reported as a max over sampled matrix entries.
    """
    x = as_state(x)
    r_op = build_R(structure)
    m_op = r_op + r_op.adjoint()
    grad = apply(m_op, x)
    rng = SplitMix64(seed)
    n, m = x.n, x.m
    worst = 0.0
    for _ in range(n_dirs):
        p = rng.next_u64() % m
        i = rng.next_u64() % n
        j = rng.next_u64() % n
        bump = np.zeros((n, n), dtype=complex)
        bump[i, j] = step
        plus = [q.copy() for q in x.parts]
        minus = [q.copy() for q in x.parts]
        plus[p] += bump
        minus[p] -= bump
        hp = hamiltonian(structure, FlowState.of(*plus))
        hm = hamiltonian(structure, FlowState.of(*minus))
        fd = (hp - hm) / (2 * step)
        worst = max(worst, abs(fd - grad.parts[p][j, i]))
    return worst


def named_integrals(structure, x) -> dict[str, complex]:
    """Low-order polynomial integrals of the first two families."""
    x = as_state(x)
    if isinstance(structure, MStructureA1):
        xm = x.parts[0]
        c = structure.c
        tp = trace_powers(xm, 4)
        out = {f"H_{j},0": tp[j - 1] for j in range(1, 5)}
        out["H_1,1"] = complex(np.trace(xm @ c))
        out["H_2,1"] = complex(np.trace(xm @ xm @ c))
        out["H_2,2"] = complex(np.trace(2 * c @ c @ xm @ xm + c @ xm @ c @ xm))
        return out
    if isinstance(structure, MStructureA3):
        xm = x.parts[0]
        A, B = structure.A, structure.B
        AB, BA = A @ B, B @ A
        out = {
            "H_1,1": complex(np.trace(xm @ (AB + BA))),
            "H_1,2": complex(np.trace(xm @ (AB @ AB + BA @ BA))),
            "H_2,1": complex(np.trace(BA @ xm @ xm + A @ xm @ B @ xm)),
            "H_2,2": complex(
                np.trace(
                    2 * BA @ BA @ xm @ xm
                    + 2 * A @ BA @ xm @ B @ xm
                    + 2 * B @ AB @ xm @ A @ xm
                    + AB @ xm @ AB @ xm
                    + BA @ xm @ BA @ xm
                )
            ),
        }
        return out
    raise WrongFamilyError(
        "named integrals exist for the one-matrix and involution-pair families only"
    )


def _spectral_from_eval(ev: DressingEvaluation, x: FlowState, jmax: int) -> list[complex]:
    lx = apply(ev.L_op, x)
    if isinstance(lx, FlowState):
        per_part = [trace_powers(p, jmax) for p in lx.parts]
        return [sum(t[j] for t in per_part) for j in range(jmax)]
    return trace_powers(lx, jmax)


def spectral_invariants(structure, x, lambda_samples, jmax: int = 3) -> dict[str, complex]:
    """tr(L(lam)^j) for each sample and j <= jmax (summed over components)."""
    x = as_state(x)
    out = {}
    for lam in lambda_samples:
        ev = dress(structure, lam)
        vals = _spectral_from_eval(ev, x, jmax)
        for j in range(1, jmax + 1):
            out[f"trL^{j}[lam={lam}]"] = vals[j - 1]
    return out


def lax_residual(structure, x, lam: complex) -> float:
    """|| L(rhs(x, +1)) - [A(x), L(x)] || / max(1, ||x||^2).

    L is linear in x at fixed lam, so dL/dt = L(x_t) exactly; the residual
    being zero pins the sign = +1 orientation of the flow.
    """
    x = as_state(x)
    ev = dress(structure, lam)
    lhs = apply(ev.L_op, rhs(structure, x, sign=+1))
    ax = apply(ev.A_op, x)
    lx = apply(ev.L_op, x)
    if isinstance(lx, FlowState):
        bracket = FlowState.of(*(a @ b - b @ a for a, b in zip(ax.parts, lx.parts)))
        diff = (lhs - bracket).norm()
    else:
        bracket = ax @ lx - lx @ ax
        diff = frobenius(lhs - bracket)
    scale = x.norm() if isinstance(x, FlowState) else frobenius(x)
    return diff / max(1.0, scale**2)


@dataclass(frozen=True)
class ConservationReport:
    """Time series of invariant values along a trajectory, with drift stats.

    drift_i = max_t |v_i(t) - v_i(0)| / max(1, |v_i(0)|).
    """

    labels: tuple[str, ...]
    times: np.ndarray
    values: np.ndarray  # complex, shape (len(labels), len(times))
    drifts: np.ndarray  # float, per label

    @property
    def max_drift(self) -> float:
        return float(self.drifts.max())

    def drift_table(self) -> dict[str, float]:
        return {label: float(d) for label, d in zip(self.labels, self.drifts)}


def conservation_report(
    structure,
    x0,
    config: IntegratorConfig,
    lambda_samples=(),
    jmax: int = 3,
    include_named: bool = True,
) -> ConservationReport:
    """Integrate the flow and track every invariant at the recorded times."""
    x0 = as_state(x0)
    traj = rk4_integrate(structure, x0, config)
    evals = [dress(structure, lam) for lam in lambda_samples]

    def all_values(x: FlowState) -> dict[str, complex]:
        vals: dict[str, complex] = {}
        if include_named and isinstance(structure, (MStructureA1, MStructureA3)):
            vals.update(named_integrals(structure, x))
        vals["H"] = hamiltonian(structure, x)
        tp = [trace_powers(p, 3) for p in x.parts]
        for j in range(1, 4):
            vals[f"tr(x^{j})"] = sum(t[j - 1] for t in tp)
        for lam, ev in zip(lambda_samples, evals):
            sv = _spectral_from_eval(ev, x, jmax)
            for j in range(1, jmax + 1):
                vals[f"trL^{j}[lam={lam}]"] = sv[j - 1]
        return vals

    first = all_values(traj.states[0])
    labels = tuple(first.keys())
    series = np.empty((len(labels), len(traj.states)), dtype=complex)
    series[:, 0] = [first[l] for l in labels]
    for col, state in enumerate(traj.states[1:], start=1):
        vals = all_values(state)
        series[:, col] = [vals[l] for l in labels]
    ref = series[:, :1]
    drifts = (np.abs(series - ref) / np.maximum(1.0, np.abs(ref))).max(axis=1)
    return ConservationReport(labels=labels, times=traj.times, values=series, drifts=drifts)


# --------------------------------------------------------------------------
# cyclic block reduction (non-abelian Volterra chain)
# --------------------------------------------------------------------------
def cyclic_embedding(u_blocks) -> np.ndarray:
    """x with u_k on the k-th cyclic superdiagonal block slot."""
    N = len(u_blocks)
    if N < 3:
        raise BadBlockShapeError(f"need at least 3 blocks, got {N}")
    bs = u_blocks[0].shape[0]
    for u in u_blocks:
        if u.shape != (bs, bs):
            raise BadBlockShapeError("blocks must be square and uniformly sized")
    n = N * bs
    x = np.zeros((n, n), dtype=complex)
    for idx in range(N):
        row, col = idx, (idx + 1) % N
        x[row * bs:(row + 1) * bs, col * bs:(col + 1) * bs] = u_blocks[idx]
    return x


def cyclic_c(J_blocks) -> np.ndarray:
    """c with J_k on the k-th cyclic subdiagonal block slot."""
    N = len(J_blocks)
    if N < 3:
        raise BadBlockShapeError(f"need at least 3 blocks, got {N}")
    bs = J_blocks[0].shape[0]
    for J in J_blocks:
        if J.shape != (bs, bs):
            raise BadBlockShapeError("blocks must be square and uniformly sized")
    n = N * bs
    c = np.zeros((n, n), dtype=complex)
    for idx in range(N):  # J_k sits at block (k+1 mod N, k), 1-based k = idx+1
        row, col = (idx + 1) % N, idx
        c[row * bs:(row + 1) * bs, col * bs:(col + 1) * bs] = J_blocks[idx]
    return c


def volterra_structure(J_blocks) -> MStructureA1:
    c = cyclic_c(J_blocks)
    return a1_structure(c.shape[0], c=c)


def _split_blocks(mat: np.ndarray, N: int, bs: int, offset: int) -> list[np.ndarray]:
    out = []
    for idx in range(N):
        row, col = (idx + offset) % N, (idx + 1 if offset == 0 else idx) % N
        out.append(mat[row * bs:(row + 1) * bs, col * bs:(col + 1) * bs])
    return out


def volterra_chain_rhs(u_blocks, J_blocks, sign: int = -1) -> list[np.ndarray]:
    """Chain derivatives; sign = -1 gives u_k' = u_k u_(k+1) J_(k+1) - J_(k-1) u_(k-1) u_k.

    That orientation matches the sign = -1 matrix flow of the cyclic
    embedding; sign = +1 matches the Lax-consistent orientation.
    """
    N = len(u_blocks)
    if N < 3 or len(J_blocks) != N:
        raise BadBlockShapeError("need N >= 3 and matching block counts")
    out = []
    for idx in range(N):
        up1 = u_blocks[(idx + 1) % N]
        um1 = u_blocks[(idx - 1) % N]
        Jp1 = J_blocks[(idx + 1) % N]
        Jm1 = J_blocks[(idx - 1) % N]
        printed = u_blocks[idx] @ up1 @ Jp1 - Jm1 @ um1 @ u_blocks[idx]
        out.append(-sign * printed)
    return out


@dataclass(frozen=True)
class VolterraReport:
    max_block_deviation: float
    max_off_pattern: float


def volterra_equivalence(
    structure: MStructureA1, u0_blocks, config: IntegratorConfig
) -> VolterraReport:
    """Integrate the full cyclic matrix flow and the chain; compare them.

    The structure's c must carry the cyclic subdiagonal block pattern of the
    chain couplings.  Reports the largest block deviation over the recorded
    trajectory and the largest off-pattern entry of the full flow (the cyclic
    ansatz is exactly invariant, so both should sit at integration accuracy).
    """
    N = len(u0_blocks)
    bs = u0_blocks[0].shape[0]
    if structure.n != N * bs:
        raise BadBlockShapeError(f"structure size {structure.n} != N*bs = {N * bs}")
    J_blocks = _split_blocks(structure.c, N, bs, offset=1)
    if frobenius(cyclic_c(J_blocks) - structure.c) > 1e-12 * max(1.0, frobenius(structure.c)):
        raise BadBlockShapeError("structure.c does not have the cyclic block pattern")

    full = rk4_integrate(structure, cyclic_embedding(u0_blocks), config)

    def chain_f(y: FlowState) -> FlowState:
        return FlowState.of(*volterra_chain_rhs(list(y.parts), J_blocks, sign=config.sign))

    chain = _rk4(chain_f, FlowState.of(*u0_blocks), config)

    pattern = cyclic_embedding([np.ones((bs, bs))] * N) > 0
    worst_block = 0.0
    worst_off = 0.0
    for full_state, chain_state in zip(full.states, chain.states):
        xm = full_state.parts[0]
        blocks = _split_blocks(xm, N, bs, offset=0)
        worst_block = max(
            worst_block,
            max(frobenius(b - u) for b, u in zip(blocks, chain_state.parts)),
        )
        worst_off = max(worst_off, float(np.abs(np.where(pattern, 0.0, xm)).max()))
    return VolterraReport(max_block_deviation=worst_block, max_off_pattern=worst_off)


# --------------------------------------------------------------------------
# skew-symmetric reduction
# --------------------------------------------------------------------------
def random_skew(n: int, seed: int) -> np.ndarray:
    m = SplitMix64(seed).complex_matrix(n)
    return m - m.T


def skew_constraint_residual(structure) -> float:
    """How far the structure is from the skew-reduction compatibility data."""
    In = identity(structure.n)
    if isinstance(structure, MStructureA3):
        return max(
            frobenius(structure.B - structure.A.T),
            frobenius(structure.A @ structure.A - In),
        )
    if isinstance(structure, MStructureAk):
        A = structure.A
        eps = structure.eps
        AtA = A.T @ A
        lhs = (AtA - In / eps) @ A @ (AtA - In)
        rhs_ = eps * (AtA - In) @ A @ (AtA - In / eps)
        return max(
            frobenius(structure.B - inverse(A.T)),
            frobenius(structure.C - eps / (1 - eps) * (AtA - In)),
            frobenius(lhs - rhs_),
        )
    raise WrongFamilyError("skew reduction applies to the involution-pair and clock families")


def skew_preservation(structure, x0: np.ndarray, config: IntegratorConfig) -> float:
    """Integrate from skew x0 and report max ||x(t) + x(t)^T|| over the run."""
    x0 = np.asarray(x0, dtype=complex)
    if frobenius(x0 + x0.T) > 1e-10 * max(1.0, frobenius(x0)):
        raise ReductionViolatedError("x0 is not skew-symmetric")
    res = skew_constraint_residual(structure)
    if res > 1e-9:
        raise ReductionViolatedError(f"structure violates the reduction data: residual {res:.3e}")
    traj = rk4_integrate(structure, x0, config)
    return max(frobenius(s.parts[0] + s.parts[0].T) for s in traj.states)
