"""Run configuration: JSON schema, strict validation, structure building.

Configs are JSON objects; complex scalars are written as [re, im] pairs and
matrices as nested lists of such pairs (plain numbers are accepted and read
as reals).  Unknown fields are rejected with the offending dotted path so a
typo cannot silently change a run.
"""

import json

import numpy as np

from .errors import ConfigError
from .linalg import random_matrix
from .structures import (
    a1_structure,
    a3_structure_block_pair,
    a3_structure_canonical,
    a3_structure_random,
    ak_structure,
    perturb_structure,
    pm_structure,
    skew_a3_structure,
    skew_ak_structure,
)

__all__ = [
    "DEFAULT_TOLERANCES",
    "apply_overrides",
    "build_structure",
    "load_config",
    "parse_complex",
    "parse_complex_list",
    "parse_matrix",
    "validate_config",
]

DEFAULT_TOLERANCES = {
    "structure": 1e-10,
    "relations": 1e-10,
    "associativity": 1e-9,
    "bilinearity": 1e-12,
    "adjoint_pairing": 1e-11,
    "gauge": 1e-11,
    "homomorphism": 1e-8,
    "composition": 1e-8,
    "l_adjoint": 1e-10,
    "mu_condition": 1e-12,
    "gradient": 1e-5,
    "conservation": 1e-8,
    "lax": 1e-8,
    "reversal": 1e-8,
    "skew": 1e-8,
    "volterra": 1e-8,
    "off_pattern": 1e-10,
    "decom": 1e-6,
    "invariant_order_low": 1.7,
    "invariant_order_high": 2.3,
    "curvature_ratio_low": 3.0,
    "curvature_ratio_high": 5.0,
    "richardson_low": 12.0,
    "richardson_high": 20.0,
}


def parse_complex(value, path: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{path}: expected a number or [re, im] pair, got {value!r}")


def parse_complex_list(value, path: str) -> tuple[complex, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty list")
    return tuple(parse_complex(v, f"{path}[{i}]") for i, v in enumerate(value))


def parse_matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a matrix as nested lists")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise ConfigError(f"{path}[{i}]: expected a list")
        rows.append([parse_complex(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError(f"{path}: ragged rows")
    return np.array(rows, dtype=complex)


def _check_keys(section: dict, allowed: set[str], required: set[str], path: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}: unknown field")
    missing = required - set(section)
    if missing:
        raise ConfigError(f"{path}.{sorted(missing)[0]}: required field missing")


# --------------------------------------------------------------------------
# structure specs
# --------------------------------------------------------------------------
def build_structure(spec: dict, path: str = "structure"):
    _check_keys(
        spec,
        allowed={
            "family", "variant", "n", "d", "k", "m", "seed", "p", "alphas",
            "c", "P", "z1", "lambdas", "weights", "perturb",
        },
        required={"family"},
        path=path,
    )
    family = spec["family"]
    perturb = spec.get("perturb")
    if family == "a1":
        _require(spec, {"n"}, path)
        c = parse_matrix(spec["c"], f"{path}.c") if "c" in spec else None
        structure = a1_structure(int(spec["n"]), seed=int(spec.get("seed", 0)), c=c)
    elif family == "a3":
        variant = spec.get("variant", "random")
        if variant == "random":
            _require(spec, {"n"}, path)
            structure = a3_structure_random(int(spec["n"]), int(spec.get("seed", 0)))
        elif variant == "canonical":
            _require(spec, {"n", "p", "alphas"}, path)
            structure = a3_structure_canonical(
                int(spec["n"]), int(spec["p"]),
                [parse_complex(a, f"{path}.alphas") for a in spec["alphas"]],
                seed=int(spec.get("seed", 0)),
            )
        elif variant == "block_pair":
            if "P" in spec:
                P = parse_matrix(spec["P"], f"{path}.P")
            else:
                _require(spec, {"d"}, path)
                P = random_matrix(int(spec["d"]), int(spec.get("seed", 0)))
            structure = a3_structure_block_pair(P)
        elif variant == "skew":
            _require(spec, {"n", "p", "alphas"}, path)
            structure = skew_a3_structure(
                int(spec["n"]), int(spec["p"]),
                [parse_complex(a, f"{path}.alphas") for a in spec["alphas"]],
            )
        else:
            raise ConfigError(f"{path}.variant: unknown variant {variant!r}")
    elif family == "ak":
        _require(spec, {"k"}, path)
        variant = spec.get("variant", "clock")
        if variant == "clock":
            _require(spec, {"d"}, path)
            structure = ak_structure(int(spec["k"]), int(spec["d"]), seed=int(spec.get("seed", 0)))
        elif variant == "skew":
            _require(spec, {"z1"}, path)
            structure = skew_ak_structure(int(spec["k"]), z1=parse_complex(spec["z1"], f"{path}.z1"))
        else:
            raise ConfigError(f"{path}.variant: unknown variant {variant!r}")
    elif family == "pm":
        _require(spec, {"k", "m", "d", "lambdas", "weights"}, path)
        structure = pm_structure(
            int(spec["k"]),
            int(spec["m"]),
            parse_complex_list(spec["lambdas"], f"{path}.lambdas"),
            parse_complex_list(spec["weights"], f"{path}.weights"),
            d=int(spec["d"]),
            seed=int(spec.get("seed", 0)),
        )
    else:
        raise ConfigError(f"{path}.family: unknown family {family!r}")

    if perturb is not None:
        _check_keys(perturb, allowed={"field", "scale", "seed"}, required={"field", "scale"},
                    path=f"{path}.perturb")
        structure = perturb_structure(
            structure, perturb["field"], float(perturb["scale"]), int(perturb.get("seed", 0))
        )
    return structure


def _require(spec: dict, fields: set[str], path: str) -> None:
    for f in fields:
        if f not in spec:
            raise ConfigError(f"{path}.{f}: required field missing")


# --------------------------------------------------------------------------
# command configs
# --------------------------------------------------------------------------
_INTEGRATOR_KEYS = {"dt", "steps", "sign", "record_every"}
_GRID_KEYS = {"n_t", "n_tau", "h_t", "h_tau"}

_SCHEMAS = {
    "verify": dict(
        allowed={"structure", "lambda_samples", "n_samples", "seed", "tolerances", "plots"},
        required={"structure", "lambda_samples"},
    ),
    "integrate": dict(
        allowed={
            "structure", "mode", "integrator", "lambda_samples", "jmax", "x0_seed",
            "x0_scale", "volterra", "reversal_check", "tolerances", "plots", "seed",
        },
        required={"integrator"},
    ),
    "chiral": dict(
        allowed={
            "structure", "grid", "amplitude", "seed", "refinements", "lambda_samples",
            "jmax", "identity_deformation", "dump_grid", "tolerances", "plots",
        },
        required={"structure", "grid", "lambda_samples"},
    ),
    "sweep": dict(allowed={"runs", "plots"}, required={"runs"}),
}


def validate_config(cfg: dict, command: str) -> dict:
    """Structural validation; returns the config with defaults filled in."""
    if command not in _SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = _SCHEMAS[command]
    _check_keys(cfg, schema["allowed"], schema["required"], path=command)

    out = dict(cfg)
    tol = dict(DEFAULT_TOLERANCES)
    user_tol = cfg.get("tolerances", {})
    if not isinstance(user_tol, dict):
        raise ConfigError(f"{command}.tolerances: expected an object")
    for key, val in user_tol.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"{command}.tolerances.{key}: unknown tolerance")
        tol[key] = float(val)
    out["tolerances"] = tol
    out["plots"] = bool(cfg.get("plots", True))

    if command == "verify":
        out["lambda_samples"] = parse_complex_list(cfg["lambda_samples"], "verify.lambda_samples")
        out["n_samples"] = int(cfg.get("n_samples", 10))
        out["seed"] = int(cfg.get("seed", 0))
    elif command == "integrate":
        _check_keys(cfg["integrator"], _INTEGRATOR_KEYS, {"dt", "steps"}, "integrate.integrator")
        out["mode"] = cfg.get("mode", "flow")
        if out["mode"] not in ("flow", "skew", "volterra"):
            raise ConfigError(f"integrate.mode: unknown mode {out['mode']!r}")
        if out["mode"] != "volterra" and "structure" not in cfg:
            raise ConfigError("integrate.structure: required field missing")
        if out["mode"] == "volterra":
            vol = cfg.get("volterra", {})
            _check_keys(vol, {"blocks", "block_size", "u_seed", "j_seed"}, set(),
                        "integrate.volterra")
            out["volterra"] = {
                "blocks": int(vol.get("blocks", 3)),
                "block_size": int(vol.get("block_size", 1)),
                "u_seed": int(vol.get("u_seed", 1)),
                "j_seed": int(vol.get("j_seed", 2)),
            }
        out["lambda_samples"] = (
            parse_complex_list(cfg["lambda_samples"], "integrate.lambda_samples")
            if "lambda_samples" in cfg
            else ()
        )
        out["jmax"] = int(cfg.get("jmax", 3))
        out["x0_seed"] = int(cfg.get("x0_seed", 0))
        out["x0_scale"] = float(cfg.get("x0_scale", 1.0))
        out["reversal_check"] = bool(cfg.get("reversal_check", True))
    elif command == "chiral":
        _check_keys(cfg["grid"], _GRID_KEYS, _GRID_KEYS, "chiral.grid")
        out["amplitude"] = float(cfg.get("amplitude", 0.2))
        out["seed"] = int(cfg.get("seed", 0))
        out["refinements"] = int(cfg.get("refinements", 2))
        out["lambda_samples"] = parse_complex_list(cfg["lambda_samples"], "chiral.lambda_samples")
        out["jmax"] = int(cfg.get("jmax", 3))
        out["identity_deformation"] = bool(cfg.get("identity_deformation", False))
        out["dump_grid"] = bool(cfg.get("dump_grid", False))
    elif command == "sweep":
        runs = cfg["runs"]
        if not isinstance(runs, list) or not runs:
            raise ConfigError("sweep.runs: expected a non-empty list")
        for i, run in enumerate(runs):
            _check_keys(run, {"name", "command", "config"}, {"name", "command", "config"},
                        f"sweep.runs[{i}]")
            if run["command"] not in ("verify", "integrate", "chiral"):
                raise ConfigError(f"sweep.runs[{i}].command: unknown command {run['command']!r}")
    return out


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def apply_overrides(cfg: dict, assignments: list[str]) -> dict:
    """Apply --set key.path=value overrides; values parse as JSON, else strings."""
    out = json.loads(json.dumps(cfg))  # deep copy of plain JSON data
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return out
