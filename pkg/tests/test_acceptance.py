"""Acceptance suite: one test per criterion, printing a pass/fail line each.

Every tolerance below is fixed here, not tuned at runtime.  Scales are desk
scale: n <= 6 for single-component families, n <= 4 for the direct-sum and
chiral runs.
"""

import json
import time

import numpy as np

from laxflows.chiral import (
    build_T1_T2,
    chiral_integrate,
    curvature_residual,
    initial_lines,
    line_invariant_drift,
)
from laxflows.cli import main as cli_main
from laxflows.dressing import (
    dress,
    dressing_a1,
    dressing_pm,
    inverse_composition_residual,
    mu_condition_residual,
    verify_homomorphism,
)
from laxflows.flows import (
    IntegratorConfig,
    conservation_report,
    grad_check,
    lax_residual,
    random_skew,
    rhs,
    rk4_integrate,
    richardson_ratio,
    skew_preservation,
    volterra_equivalence,
    volterra_structure,
)
from laxflows.linalg import frobenius, identity, inverse, random_matrix
from laxflows.operators import FlowState, op_residual, random_state
from laxflows.structures import (
    PMStructure,
    a1_structure,
    a3_structure_block_pair,
    a3_structure_canonical,
    a3_structure_random,
    ak_structure,
    build_R,
    pencil_associativity_check,
    pm_structure,
    skew_a3_structure,
    skew_ak_structure,
    verify_relations,
)

LAMBDAS_SINGLE = (0.06, 0.1, 0.18, 0.05 + 0.05j, -0.08)
LAMBDAS_PM = (0.05, 0.06, 0.08, 0.05 + 0.02j, 0.1)


def _families():
    return [
        ("a1 n=5", a1_structure(5, seed=2), LAMBDAS_SINGLE),
        ("a3 random", a3_structure_random(4, 1), LAMBDAS_SINGLE),
        ("a3 canonical", a3_structure_canonical(4, 2, (1.0, 0.5), seed=0), LAMBDAS_SINGLE),
        ("a3 block-pair", a3_structure_block_pair(0.5 * random_matrix(2, 5)), LAMBDAS_SINGLE),
        ("clock k=2", ak_structure(2, 2, seed=4), LAMBDAS_SINGLE),
        ("clock k=3", ak_structure(3, 1, seed=0), LAMBDAS_SINGLE),
        ("clock k=4", ak_structure(4, 1, seed=1), LAMBDAS_SINGLE),
        ("direct-sum k=2 m=2", pm_structure(2, 2, [1.0, 2.0], [0.3, 0.5], d=2, seed=3), LAMBDAS_PM),
    ]


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {name} ({detail})")
    assert ok, f"criterion {num} failed: {detail}"


def test_criterion_1_pencil_associativity():
    start = time.time()
    lams = (0.1, 0.3, -0.2, 0.07 + 0.2j, -0.15j)
    worst = 0.0
    for name, structure, _ in _families():
        res = pencil_associativity_check(structure, lams, n_triples=10, seed=11)
        worst = max(worst, res)
    elapsed = time.time() - start
    ok = worst < 1e-9 and elapsed < 30.0
    _report(1, "pencil associativity over all families",
            ok, f"max residual {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_relations_suite():
    worst = 0.0
    for k in (2, 3, 4, 6):
        for d in (1, 2):
            s = ak_structure(k, d, seed=k + d)
            worst = max(worst, verify_relations(s.A, s.B, s.C, k).max_residual)
    _report(2, "clock relations for k in {2,3,4,6}, d in {1,2}",
            worst < 1e-10, f"max residual {worst:.2e}")


def test_criterion_3_dressing_homomorphism():
    worst_h = worst_c = worst_mu = 0.0
    for name, structure, lams in _families():
        for lam in lams:
            ev = dress(structure, lam)
            worst_h = max(worst_h, verify_homomorphism(ev, structure, 8, 0))
            worst_c = max(worst_c, inverse_composition_residual(ev, 8, 0))
            if ev.mu is not None and isinstance(ev.mu, tuple):
                worst_mu = max(worst_mu, mu_condition_residual(structure, lam, ev.mu))
    ok = worst_h < 1e-8 and worst_c < 1e-8 and worst_mu < 1e-12
    _report(3, "dressing homomorphism / inverse composition / root condition",
            ok, f"hom {worst_h:.2e}, comp {worst_c:.2e}, mu {worst_mu:.2e}")


def test_criterion_4_lax_verification():
    worst = 0.0
    for name, structure, lams in _families():
        if isinstance(structure, PMStructure):
            x = random_state(structure.n, structure.m, 7)
        else:
            x = random_matrix(structure.n, 7)
        for lam in lams[:3]:
            worst = max(worst, lax_residual(structure, x, lam))

    # the reversed orientation reproduces the classical writings
    s1 = a1_structure(4, seed=9)
    x1 = random_matrix(4, 3)
    printed_a1 = x1 @ x1 @ s1.c - s1.c @ x1 @ x1
    res_a1 = frobenius(rhs(s1, x1, sign=-1).parts[0] - printed_a1)
    s3 = a3_structure_block_pair(0.5 * random_matrix(2, 5))
    x3 = random_matrix(4, 4)
    agg = s3.B @ x3 @ s3.A + s3.A @ x3 @ s3.B + x3 @ s3.B @ s3.A + s3.B @ s3.A @ x3
    res_a3 = frobenius(rhs(s3, x3, sign=-1).parts[0] - (x3 @ agg - agg @ x3))

    # reversal oracle: the two orientations are time mirrors
    cfg = IntegratorConfig(dt=1e-3, steps=300, record_every=300)
    fwd = rk4_integrate(s1, x1, cfg)
    back = rk4_integrate(
        s1, fwd.final, IntegratorConfig(dt=1e-3, steps=300, sign=-1, record_every=300)
    )
    res_rev = (back.final - FlowState.of(x1)).norm()

    ok = worst < 1e-8 and res_a1 < 1e-12 and res_a3 < 1e-12 and res_rev < 1e-8
    _report(4, "Lax residual at sign=+1; sign=-1 matches classical flows",
            ok, f"lax {worst:.2e}, writings {max(res_a1, res_a3):.2e}, reversal {res_rev:.2e}")


def _conservation_cases():
    return [
        ("a1 n=3", a1_structure(3, seed=2), random_matrix(3, 0), (0.1, 0.2, 0.3)),
        ("a3 block-pair", a3_structure_block_pair(0.5 * random_matrix(2, 5)),
         0.5 * random_matrix(4, 1), (0.1, 0.15, 0.2)),
        ("clock k=3", ak_structure(3, 1, seed=0), 0.75 * random_matrix(3, 4), (0.1, 0.15, 0.2)),
        ("direct-sum", pm_structure(2, 2, [1.0, 2.0], [0.3, 0.5], d=2, seed=3),
         0.75 * random_state(4, 2, 1), (0.05, 0.06, 0.08)),
    ]


def test_criterion_5_conservation():
    cfg = IntegratorConfig(dt=1e-3, steps=1000, record_every=50)
    worst = 0.0
    details = []
    for name, structure, x0, lams in _conservation_cases():
        rep = conservation_report(structure, x0, cfg, lambda_samples=lams, jmax=3)
        drift = rep.max_drift
        details.append(f"{name} {drift:.1e}")
        worst = max(worst, drift)
    _report(5, "named and spectral invariants conserved over unit time",
            worst < 1e-8, "; ".join(details))


def test_criterion_6_hamiltonian():
    cfg = IntegratorConfig(dt=1e-3, steps=1000, record_every=100)
    worst_grad = worst_h = 0.0
    for name, structure, x0, lams in _conservation_cases():
        worst_grad = max(worst_grad, grad_check(structure, x0))
        rep = conservation_report(structure, x0, cfg, lambda_samples=(), jmax=1)
        worst_h = max(worst_h, rep.drift_table()["H"])
    ok = worst_grad < 1e-5 and worst_h < 1e-8
    _report(6, "gradient of H matches R + R*; H conserved",
            ok, f"grad {worst_grad:.2e}, H drift {worst_h:.2e}")


def test_criterion_7_reductions():
    cfg = IntegratorConfig(dt=1e-3, steps=1000, record_every=50)
    drifts = []
    for p, alphas in ((2, (1.0, 1.0)), (1, (1.0,))):
        s = skew_a3_structure(4, p, alphas)
        drifts.append(skew_preservation(s, 0.5 * random_skew(4, 7), cfg))
    sk = skew_ak_structure(2, z1=1.4**2)
    drifts.append(skew_preservation(sk, 0.5 * random_skew(2, 8), cfg))
    sk3 = skew_ak_structure(3, z1=0.3)
    drifts.append(skew_preservation(sk3, 0.5 * random_skew(3, 9), cfg))
    worst_skew = max(drifts)

    u0 = [random_matrix(1, 10 + i) for i in range(3)]
    J = [random_matrix(1, 20 + i) for i in range(3)]
    vcfg = IntegratorConfig(dt=1e-3, steps=500, record_every=25, sign=-1)
    vrep = volterra_equivalence(volterra_structure(J), u0, vcfg)

    ok = worst_skew < 1e-8 and vrep.max_block_deviation < 1e-8 and vrep.max_off_pattern < 1e-10
    _report(7, "skew-symmetric and cyclic-chain reductions",
            ok,
            f"skew {worst_skew:.2e}, chain {vrep.max_block_deviation:.2e}, "
            f"off-pattern {vrep.max_off_pattern:.2e}")


def test_criterion_8_degenerations():
    lam1, t1 = 0.8 + 0j, 0.4 + 0j
    s = pm_structure(1, 1, [lam1], [t1], d=3, seed=2)
    c = t1 * inverse(s.T - lam1 * identity(3))
    expected_R = build_R(a1_structure(3, c=c))
    res_R = op_residual(build_R(s), expected_R, 10, 0)
    lam = 0.07
    ev_pm = dressing_pm(s, lam)
    ev_a1 = dressing_a1(c, lam)
    res_S = op_residual(ev_pm.S, ev_a1.S, 10, 0)
    res_L = op_residual(ev_pm.L_op, ev_a1.L_op, 10, 0)

    s_k2 = pm_structure(2, 1, [1.0], [0.3], d=2, seed=4)
    ev = dressing_pm(s_k2, 0.05)
    res_hom = verify_homomorphism(ev, s_k2, 10, 0)

    ok = max(res_R, res_S, res_L) < 1e-9 and res_hom < 1e-8
    _report(8, "single-pole degenerations collapse to the one-matrix family",
            ok, f"R {res_R:.2e}, S {res_S:.2e}, L {res_L:.2e}, single-pole hom {res_hom:.2e}")


def test_criterion_9_chiral():
    pm = pm_structure(2, 2, [1.0, 2.0], [0.3, 0.5], d=2, seed=3)
    T1, T2 = build_T1_T2(pm)
    lam_fd = 1e-4
    ev_p = dressing_pm(pm, lam_fd)
    ev_m = dressing_pm(pm, -lam_fd)
    fd_T1 = (ev_p.S.blocks[1][0] + ev_m.S.blocks[1][0].scale(-1)).scale(1 / (2 * lam_fd))
    fd_T2 = (ev_p.S.blocks[0][1] + ev_m.S.blocks[0][1].scale(-1)).scale(1 / (2 * lam_fd))
    res_decom = max(op_residual(fd_T1, T1, 5, 0), op_residual(fd_T2, T2, 5, 0))

    drifts, curvatures, frozen = [], [], []
    for factor in (1, 2):
        h = 0.01 / factor
        npts = 20 * factor + 1
        u0, v0 = initial_lines(4, npts, npts, h, h, seed=0, amplitude=0.2)
        field = chiral_integrate(T1, T2, u0, v0, h, h)
        drifts.append(line_invariant_drift(field, 3))
        curvatures.append(curvature_residual(field, pm, 0.05))
        control = chiral_integrate(T1, T2, u0, v0, h, h, freeze_v=True)
        frozen.append(curvature_residual(control, pm, 0.05))

    orders = [
        float(np.log2(drifts[0][f"tr(u^{j})"] / drifts[1][f"tr(u^{j})"])) for j in (2, 3)
    ]
    curv_ratio = curvatures[0] / curvatures[1]
    control_ratio = frozen[0] / frozen[1]

    ok = (
        res_decom < 1e-6
        and all(1.7 <= o <= 2.3 for o in orders)
        and 3.0 <= curv_ratio <= 5.0
        and control_ratio < 2.0
    )
    _report(9, "chiral deformation operators, scheme order, flatness",
            ok,
            f"decom {res_decom:.2e}, orders {orders[0]:.2f}/{orders[1]:.2f}, "
            f"curvature ratio {curv_ratio:.2f}, control ratio {control_ratio:.2f}")


def test_criterion_10_determinism_and_convergence(tmp_path):
    cfg_path = str(
        (tmp_path / "cfg.json")
    )
    with open(cfg_path, "w") as fh:
        json.dump(
            {
                "structure": {"family": "a1", "n": 3, "seed": 2},
                "integrator": {"dt": 0.001, "steps": 400, "record_every": 40},
                "lambda_samples": [0.1, 0.2],
                "x0_seed": 0,
            },
            fh,
        )
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert cli_main(["integrate", "--config", cfg_path, "--out", str(out)]) == 0
        outs.append((out / "summary.json").read_bytes())
    identical = outs[0] == outs[1]

    ratio_rk4 = richardson_ratio(a1_structure(3, seed=2), random_matrix(3, 0), 0.02, 25)

    pm = pm_structure(2, 2, [1.0, 2.0], [0.3, 0.5], d=2, seed=3)
    T1, T2 = build_T1_T2(pm)
    vals = []
    for factor in (1, 2):
        h = 0.01 / factor
        npts = 20 * factor + 1
        u0, v0 = initial_lines(4, npts, npts, h, h, seed=0, amplitude=0.2)
        field = chiral_integrate(T1, T2, u0, v0, h, h)
        vals.append(curvature_residual(field, pm, 0.05))
    ratio_chiral = vals[0] / vals[1]

    ok = identical and 12.0 <= ratio_rk4 <= 20.0 and 3.0 <= ratio_chiral <= 5.0
    _report(10, "byte-identical summaries; RK4 and chiral refinement ratios",
            ok,
            f"identical={identical}, rk4 {ratio_rk4:.1f}, chiral {ratio_chiral:.2f}")
