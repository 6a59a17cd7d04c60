"""Config-driven command line: verification suites, flow runs, sweeps, chiral.

Exit codes: 0 all checks pass, 1 at least one check failed, 2 malformed
config, 3 numerical singularity (singular resolvent, branch point, lost root
branch, blow-up).  Summary JSON and CSV files are the machine contract;
figures are rendered next to them unless ``plots`` is false.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import chiral as chiral_mod
from . import report as report_mod
from .config import (
    apply_overrides,
    build_structure,
    load_config,
    validate_config,
)
from .dressing import (
    dress,
    dressing_pm,
    inverse_composition_residual,
    mu_condition_residual,
    verify_homomorphism,
)
from .errors import (
    BranchPointError,
    ConfigError,
    ContinuationFailedError,
    DegenerateParameterError,
    LambdaTooSmallError,
    LaxflowsError,
    NonFiniteError,
    PoleCollisionError,
    ResonantParametersError,
    SingularMatrixError,
)
from .flows import (
    IntegratorConfig,
    conservation_report,
    cyclic_embedding,
    grad_check,
    lax_residual,
    random_skew,
    rhs,
    rhs_pm_explicit,
    rk4_integrate,
    skew_constraint_residual,
    skew_preservation,
    volterra_equivalence,
    volterra_structure,
)
from .linalg import frobenius, random_matrix
from .operators import (
    FlowState,
    apply,
    gauge_transform,
    identity_operator,
    op_residual,
    random_state,
    trace_pairing,
)
from .structures import (
    MStructureAk,
    PMStructure,
    build_R,
    circ_from_operator,
    pencil_associativity_check,
    structure_residuals,
)

_SINGULARITY_ERRORS = (
    SingularMatrixError,
    BranchPointError,
    PoleCollisionError,
    ContinuationFailedError,
    DegenerateParameterError,
    LambdaTooSmallError,
    NonFiniteError,
    ResonantParametersError,
)


def _check(name: str, value: float, tolerance: float) -> dict:
    return {
        "name": name,
        "value": float(value),
        "tolerance": float(tolerance),
        "pass": bool(value <= tolerance),
    }


def _band_check(name: str, value: float, low: float, high: float) -> dict:
    return {
        "name": name,
        "value": float(value),
        "low": float(low),
        "tolerance": None if high == float("inf") else float(high),
        "pass": bool(low <= value <= high),
    }


def _probe(structure, seed: int):
    if isinstance(structure, PMStructure):
        return random_state(structure.n, structure.m, seed)
    return random_matrix(structure.n, seed)


def _probe_norm(x) -> float:
    return x.norm() if isinstance(x, FlowState) else frobenius(x)


def _bilinearity_residual(structure, seed: int) -> float:
    r_op = build_R(structure)
    x = _probe(structure, seed)
    y = _probe(structure, seed + 1)
    z = _probe(structure, seed + 2)
    a, b = 0.7 - 0.2j, -0.4 + 1.1j
    left = circ_from_operator(r_op, x, a * y + b * z)
    right = a * circ_from_operator(r_op, x, y) + b * circ_from_operator(r_op, x, z)
    diff = left - right
    num = _probe_norm(diff)
    return num / max(1.0, _probe_norm(x) * (_probe_norm(y) + _probe_norm(z)))


def _adjoint_pairing_residual(structure, n_samples: int, seed: int) -> float:
    r_op = build_R(structure)
    adj = r_op.adjoint()
    worst = 0.0
    for j in range(n_samples):
        x = _probe(structure, seed + 2 * j)
        y = _probe(structure, seed + 2 * j + 1)
        lhs = trace_pairing(apply(r_op, x), y)
        rhs_ = trace_pairing(x, apply(adj, y))
        worst = max(worst, abs(lhs - rhs_) / max(1.0, _probe_norm(x) * _probe_norm(y)))
    return worst


def _gauge_invariance_residual(structure, seed: int) -> float:
    """Products induced by R and by R + ad_t agree identically."""
    r_op = build_R(structure)
    gauged = gauge_transform(r_op, random_matrix(structure.n, seed + 17))
    x = _probe(structure, seed)
    y = _probe(structure, seed + 1)
    diff = circ_from_operator(r_op, x, y) - circ_from_operator(gauged, x, y)
    return _probe_norm(diff) / max(1.0, _probe_norm(x) * _probe_norm(y))


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------
def run_verify(cfg: dict, outdir: Path) -> int:
    cfg = validate_config(cfg, "verify")
    structure = build_structure(cfg["structure"])
    tol = cfg["tolerances"]
    seed = cfg["seed"]
    n_samples = cfg["n_samples"]
    lambda_samples = cfg["lambda_samples"]
    checks = []

    rel_tol = tol["relations"] if isinstance(structure, MStructureAk) else tol["structure"]
    for name, value in structure_residuals(structure).items():
        checks.append(_check(f"structure: {name}", value, rel_tol))
    if cfg["structure"].get("variant") == "skew":
        checks.append(_check("skew constraint", skew_constraint_residual(structure), 1e-9))

    checks.append(
        _check(
            "pencil associativity",
            pencil_associativity_check(structure, lambda_samples, n_triples=n_samples, seed=seed),
            tol["associativity"],
        )
    )
    checks.append(_check("product bilinearity", _bilinearity_residual(structure, seed), tol["bilinearity"]))
    checks.append(
        _check(
            "adjoint trace pairing",
            _adjoint_pairing_residual(structure, n_samples, seed),
            tol["adjoint_pairing"],
        )
    )
    if not isinstance(structure, PMStructure):
        checks.append(
            _check("gauge invariance of product", _gauge_invariance_residual(structure, seed), tol["gauge"])
        )

    for lam in lambda_samples:
        ev = dress(structure, lam)
        tag = f"lam={lam}"
        checks.append(
            _check(f"homomorphism [{tag}]", verify_homomorphism(ev, structure, n_samples, seed), tol["homomorphism"])
        )
        checks.append(
            _check(
                f"inverse composition [{tag}]",
                inverse_composition_residual(ev, n_samples, seed),
                tol["composition"],
            )
        )
        checks.append(
            _check(
                f"L = adjoint(S^-1) [{tag}]",
                op_residual(ev.L_op, ev.S_inv.adjoint(), n_samples=5, seed=seed),
                tol["l_adjoint"],
            )
        )
        if isinstance(structure, PMStructure):
            checks.append(
                _check(f"mu condition [{tag}]", mu_condition_residual(structure, lam, ev.mu), tol["mu_condition"])
            )

    checks.append(
        _check("hamiltonian gradient", grad_check(structure, _probe_as_state(structure, seed)), tol["gradient"])
    )

    return _finish(cfg, outdir, "verify", checks)


def _probe_as_state(structure, seed: int) -> FlowState:
    x = _probe(structure, seed)
    return x if isinstance(x, FlowState) else FlowState.of(x)


# --------------------------------------------------------------------------
# integrate
# --------------------------------------------------------------------------
def _integrator(cfg: dict) -> IntegratorConfig:
    spec = cfg["integrator"]
    return IntegratorConfig(
        dt=float(spec["dt"]),
        steps=int(spec["steps"]),
        sign=int(spec.get("sign", 1)),
        record_every=int(spec.get("record_every", 10)),
    )


def run_integrate(cfg: dict, outdir: Path) -> int:
    cfg = validate_config(cfg, "integrate")
    tol = cfg["tolerances"]
    icfg = _integrator(cfg)
    mode = cfg["mode"]
    checks = []
    extra: dict = {}

    if mode == "volterra":
        vol = cfg["volterra"]
        n_blocks, bs = vol["blocks"], vol["block_size"]
        u0 = [random_matrix(bs, vol["u_seed"] + i) for i in range(n_blocks)]
        J = [random_matrix(bs, vol["j_seed"] + i) for i in range(n_blocks)]
        structure = volterra_structure(J)
        vreport = volterra_equivalence(structure, u0, icfg)
        checks.append(_check("full vs chain deviation", vreport.max_block_deviation, tol["volterra"]))
        checks.append(_check("off-pattern entries", vreport.max_off_pattern, tol["off_pattern"]))
        x0 = FlowState.of(cyclic_embedding(u0))
        extra["volterra"] = {
            "max_block_deviation": vreport.max_block_deviation,
            "max_off_pattern": vreport.max_off_pattern,
        }
    else:
        structure = build_structure(cfg["structure"])
        if mode == "skew":
            x0m = cfg["x0_scale"] * random_skew(structure.n, cfg["x0_seed"])
            drift = skew_preservation(structure, x0m, icfg)
            checks.append(_check("skew-symmetry drift", drift, tol["skew"]))
            x0 = FlowState.of(x0m)
            extra["skew_drift"] = drift
        else:
            x0 = cfg["x0_scale"] * _probe_as_state(structure, cfg["x0_seed"])

    lambda_samples = cfg["lambda_samples"]
    can_dress = not (isinstance(structure, MStructureAk) and structure.T is None)
    report = conservation_report(
        structure, x0, icfg,
        lambda_samples=lambda_samples if can_dress else (),
        jmax=cfg["jmax"],
    )
    for label, drift in report.drift_table().items():
        checks.append(_check(f"drift: {label}", drift, tol["conservation"]))

    if can_dress:
        for lam in lambda_samples:
            checks.append(_check(f"lax residual [lam={lam}]", lax_residual(structure, x0, lam), tol["lax"]))

    checks.append(_check("hamiltonian gradient", grad_check(structure, x0), tol["gradient"]))

    if isinstance(structure, PMStructure):
        explicit = rhs_pm_explicit(structure, x0)
        generic = rhs(structure, x0, sign=+1)
        res = (explicit - generic).norm() / max(1.0, x0.norm() ** 2)
        checks.append(_check("componentwise system vs operator rhs", res, 1e-10))

    if cfg["reversal_check"]:
        fwd = rk4_integrate(structure, x0, icfg)
        back_cfg = IntegratorConfig(
            dt=icfg.dt, steps=icfg.steps, sign=-icfg.sign, record_every=icfg.steps
        )
        back = rk4_integrate(structure, fwd.final, back_cfg)
        res = (back.final - x0).norm() / max(1.0, x0.norm())
        checks.append(_check("reversal closure", res, tol["reversal"]))

    report_mod.write_conservation_csv(outdir / "timeseries.csv", report)
    if cfg["plots"]:
        report_mod.conservation_figure(report, outdir / "drift.png")
    extra["drifts"] = report.drift_table()
    return _finish(cfg, outdir, "integrate", checks, extra)


# --------------------------------------------------------------------------
# chiral
# --------------------------------------------------------------------------
def run_chiral(cfg: dict, outdir: Path) -> int:
    cfg = validate_config(cfg, "chiral")
    tol = cfg["tolerances"]
    structure = build_structure(cfg["structure"])
    if not isinstance(structure, PMStructure) or structure.m != 2:
        raise ConfigError("chiral.structure: needs the direct-sum family with m = 2")
    checks = []

    if cfg["identity_deformation"]:
        T1 = identity_operator(structure.n)
        T2 = identity_operator(structure.n)
    else:
        T1, T2 = chiral_mod.build_T1_T2(structure)
        lam_fd = 1e-4
        ev_p = dressing_pm(structure, lam_fd)
        ev_m = dressing_pm(structure, -lam_fd)
        fd_T1 = (ev_p.S.blocks[1][0] + ev_m.S.blocks[1][0].scale(-1)).scale(1 / (2 * lam_fd))
        fd_T2 = (ev_p.S.blocks[0][1] + ev_m.S.blocks[0][1].scale(-1)).scale(1 / (2 * lam_fd))
        checks.append(_check("T1 matches dressing coefficient", op_residual(fd_T1, T1, 5, 0), tol["decom"]))
        checks.append(_check("T2 matches dressing coefficient", op_residual(fd_T2, T2, 5, 0), tol["decom"]))

    grid = cfg["grid"]
    n_t0, n_tau0 = int(grid["n_t"]), int(grid["n_tau"])
    h_t0, h_tau0 = float(grid["h_t"]), float(grid["h_tau"])
    levels = []
    for level in range(cfg["refinements"] + 1):
        f = 2**level
        levels.append(
            dict(
                n_t=(n_t0 - 1) * f + 1,
                n_tau=(n_tau0 - 1) * f + 1,
                h_t=h_t0 / f,
                h_tau=h_tau0 / f,
            )
        )

    drift_series: dict[str, list[float]] = {}
    curvature_series: dict[str, list[float]] = {}
    base_field = None
    for level in levels:
        u0, v0 = chiral_mod.initial_lines(
            structure.n, level["n_t"], level["n_tau"], level["h_t"], level["h_tau"],
            seed=cfg["seed"], amplitude=cfg["amplitude"],
        )
        field = chiral_mod.chiral_integrate(T1, T2, u0, v0, level["h_t"], level["h_tau"])
        if base_field is None:
            base_field = field
        drifts = chiral_mod.line_invariant_drift(field, jmax=cfg["jmax"])
        for label, value in drifts.items():
            drift_series.setdefault(label, []).append(value)
        if not cfg["identity_deformation"]:
            for lam in cfg["lambda_samples"]:
                value = chiral_mod.curvature_residual(field, structure, lam)
                curvature_series.setdefault(f"curvature[lam={lam}]", []).append(value)

    lo, hi = tol["invariant_order_low"], tol["invariant_order_high"]
    orders = {}
    for label, series in drift_series.items():
        # skip drifts at the roundoff floor: tr(u) and tr(v) are exactly
        # conserved (commutator increments are trace-free), so their "order"
        # is noise
        if len(series) < 2 or series[-1] < 1e-13:
            continue
        order = float(np.log2(series[-2] / series[-1]))
        orders[label] = order
        if label.startswith("tr(u"):
            checks.append(_band_check(f"order of {label}", order, lo, hi))
        else:
            # the tau-march corrector superconverges for some traces; only
            # demand at least the formal order
            checks.append(_band_check(f"order of {label}", order, lo, float("inf")))
    for label, series in curvature_series.items():
        if len(series) >= 2:
            ratio = series[-2] / series[-1]
            checks.append(
                _band_check(f"refinement ratio of {label}", ratio,
                            tol["curvature_ratio_low"], tol["curvature_ratio_high"])
            )

    # negative control: frozen v breaks the coupling; residual must not converge
    control_ratio = None
    if not cfg["identity_deformation"] and len(levels) >= 2:
        lam0 = cfg["lambda_samples"][0]
        control_vals = []
        for level in levels[:2]:
            u0, v0 = chiral_mod.initial_lines(
                structure.n, level["n_t"], level["n_tau"], level["h_t"], level["h_tau"],
                seed=cfg["seed"], amplitude=cfg["amplitude"],
            )
            frozen = chiral_mod.chiral_integrate(
                T1, T2, u0, v0, level["h_t"], level["h_tau"], freeze_v=True
            )
            control_vals.append(chiral_mod.curvature_residual(frozen, structure, lam0))
        control_ratio = control_vals[0] / control_vals[1]
        checks.append(
            _band_check("negative control stays non-convergent", control_ratio, 0.0, 2.0)
        )

    hs = [lvl["h_t"] for lvl in levels]
    columns = ["level", "h_t", "h_tau"] + list(drift_series) + list(curvature_series)
    rows = []
    for idx, lvl in enumerate(levels):
        row = [idx, lvl["h_t"], lvl["h_tau"]]
        row += [drift_series[label][idx] for label in drift_series]
        row += [curvature_series[label][idx] for label in curvature_series]
        rows.append(row)
    report_mod.write_refinement_csv(outdir / "refinement.csv", columns, rows)
    line_cols, line_rows = chiral_mod.invariant_line_series(base_field, jmax=cfg["jmax"])
    report_mod.write_refinement_csv(outdir / "line_invariants.csv", line_cols, line_rows)
    if cfg["dump_grid"] and base_field is not None:
        chiral_mod.write_grid_binary(base_field, outdir / "grid.bin")
    if cfg["plots"]:
        series = dict(drift_series)
        series.update(curvature_series)
        report_mod.refinement_figure(hs, series, outdir / "refinement.png")

    extra = {"orders": orders, "drift_series": drift_series, "curvature_series": curvature_series}
    if control_ratio is not None:
        extra["negative_control_ratio"] = control_ratio
    return _finish(cfg, outdir, "chiral", checks, extra)


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------
def run_sweep(cfg: dict, outdir: Path) -> int:
    cfg = validate_config(cfg, "sweep")
    dispatch = {"verify": run_verify, "integrate": run_integrate, "chiral": run_chiral}
    results = []
    worst = 0
    for run in cfg["runs"]:
        sub = outdir / run["name"]
        sub.mkdir(parents=True, exist_ok=True)
        try:
            code = dispatch[run["command"]](run["config"], sub)
        except ConfigError as exc:
            code = 2
            results.append({"name": run["name"], "command": run["command"], "exit_code": code,
                            "error": str(exc)})
            worst = max(worst, code)
            continue
        except _SINGULARITY_ERRORS as exc:
            code = 3
            results.append({"name": run["name"], "command": run["command"], "exit_code": code,
                            "error": str(exc)})
            worst = max(worst, code)
            continue
        results.append({"name": run["name"], "command": run["command"], "exit_code": code})
        worst = max(worst, code)
    results.sort(key=lambda r: r["name"])
    report_mod.write_summary(outdir / "summary.json", {"command": "sweep", "runs": results})
    return worst


def _finish(cfg: dict, outdir: Path, command: str, checks: list[dict], extra: dict | None = None) -> int:
    all_pass = all(c["pass"] for c in checks)
    payload = {
        "command": command,
        "all_pass": all_pass,
        "checks": checks,
        "config": {k: v for k, v in cfg.items() if k != "plots"},
    }
    if extra:
        payload.update(extra)
    report_mod.write_summary(outdir / "summary.json", payload)
    if cfg.get("plots", True) and checks:
        report_mod.residual_figure(
            [c for c in checks if "low" not in c], outdir / "checks.png"
        )
    return 0 if all_pass else 1


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------
def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="laxflows",
        description="Verification and integration runs for compatible matrix products.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("verify", "run the algebraic/dressing invariant suite"),
        ("integrate", "integrate a flow and track its invariants"),
        ("sweep", "run a list of configured runs"),
        ("chiral", "integrate the deformed chiral model and check convergence"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="KEY=VALUE", help="dotted-path config override")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
    args = parser.parse_args(argv)

    dispatch = {
        "verify": run_verify,
        "integrate": run_integrate,
        "sweep": run_sweep,
        "chiral": run_chiral,
    }
    try:
        cfg = apply_overrides(load_config(args.config), args.overrides)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return dispatch[args.command](cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _SINGULARITY_ERRORS as exc:
        print(f"numerical singularity: {exc}", file=sys.stderr)
        return 3
    except LaxflowsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
