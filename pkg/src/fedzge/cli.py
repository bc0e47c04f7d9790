"""Experiment runner CLI.

Config files are INI-style key=value sections mirroring the module layout
([data], [models], [federation], [losses], [zo], [run]); command-line flags
override file values. Every run writes metrics.csv, summary.json, ledger.csv,
and resolved-config.json into its output directory, and all randomness flows
from the configured seeds, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import comms
from .errors import ConfigError, FedzgeError
from .federation import (
    ABLATION_FLAGS,
    METHODS,
    ExperimentConfig,
    ExperimentResult,
    FederationConfig,
    run_experiment,
)
from .losses import LossWeights
from .zo import MODES, ZOConfig

SWEEP_AXES = ("q", "alpha", "epsilon_sf", "method", "ablation")


def _parse_int(raw: str) -> int:
    return int(raw)


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_str(raw: str) -> str:
    return raw.strip()


def _parse_int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(v) for v in raw.split(",") if v.strip())


def _parse_str_list(raw: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in raw.split(",") if v.strip())


# (section, key) -> (parser, human-readable type name)
_SCHEMA = {
    ("data", "num_classes"): (_parse_int, "int"),
    ("data", "dim"): (_parse_int, "int"),
    ("data", "train_per_class"): (_parse_int, "int"),
    ("data", "test_per_class"): (_parse_int, "int"),
    ("data", "aux_per_class"): (_parse_int, "int"),
    ("data", "spread"): (_parse_float, "float"),
    ("data", "alpha"): (_parse_float, "float"),
    ("models", "client_hidden"): (_parse_int_list, "int list"),
    ("models", "global_hidden"): (_parse_int_list, "int list"),
    ("models", "activation"): (_parse_str, "string"),
    ("models", "heterogeneous"): (_parse_bool, "bool"),
    ("models", "noise_dim"): (_parse_int, "int"),
    ("models", "generator_hidden"): (_parse_int_list, "int list"),
    ("federation", "num_clients"): (_parse_int, "int"),
    ("federation", "sampling_fraction"): (_parse_float, "float"),
    ("federation", "rounds"): (_parse_int, "int"),
    ("federation", "local_epochs"): (_parse_int, "int"),
    ("federation", "local_distill_epochs"): (_parse_int, "int"),
    ("federation", "global_distill_epochs"): (_parse_int, "int"),
    ("federation", "lr_local"): (_parse_float, "float"),
    ("federation", "lr_global"): (_parse_float, "float"),
    ("federation", "lr_generator"): (_parse_float, "float"),
    ("federation", "batch"): (_parse_int, "int"),
    ("federation", "local_batch_size"): (_parse_int, "int"),
    ("federation", "method"): (_parse_str, "string"),
    ("losses", "beta_adv"): (_parse_float, "float"),
    ("losses", "beta_div"): (_parse_float, "float"),
    ("losses", "beta_info"): (_parse_float, "float"),
    ("losses", "temperature"): (_parse_float, "float"),
    ("losses", "tau_sq_correction"): (_parse_bool, "bool"),
    ("zo", "q"): (_parse_int, "int"),
    ("zo", "smoothing"): (_parse_float, "float"),
    ("zo", "mode"): (_parse_str, "string"),
    ("run", "seeds"): (_parse_int_list, "int list"),
    ("run", "out_dir"): (_parse_str, "string"),
    ("run", "ablation"): (_parse_str_list, "string list"),
}

_EXP_KEYS = {
    ("data", "num_classes"): "num_classes",
    ("data", "dim"): "dim",
    ("data", "train_per_class"): "train_per_class",
    ("data", "test_per_class"): "test_per_class",
    ("data", "aux_per_class"): "aux_per_class",
    ("data", "spread"): "spread",
    ("data", "alpha"): "alpha",
    ("models", "client_hidden"): "client_hidden",
    ("models", "global_hidden"): "global_hidden",
    ("models", "activation"): "activation",
    ("models", "heterogeneous"): "heterogeneous",
    ("models", "noise_dim"): "noise_dim",
    ("models", "generator_hidden"): "generator_hidden",
    ("run", "seeds"): "seeds",
    ("run", "out_dir"): "out_dir",
}

_FED_KEYS = {
    ("federation", k): k
    for k in (
        "num_clients", "sampling_fraction", "rounds", "local_epochs",
        "local_distill_epochs", "global_distill_epochs", "lr_local",
        "lr_global", "lr_generator", "batch", "local_batch_size", "method",
    )
}


def parse_config(path: str | None = None,
                 overrides: dict[tuple[str, str], str] | None = None) -> ExperimentConfig:
    """Read an INI config file (optional) then apply flag overrides.

    Unknown sections or keys, unparseable values, and constraint violations
    all raise :class:`ConfigError` naming the offending key.
    """
    values: dict[tuple[str, str], object] = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from None
        for section in parser.sections():
            for key, raw in parser.items(section):
                values[(section, key)] = _parse_entry(section, key, raw)
    for (section, key), raw in (overrides or {}).items():
        values[(section, key)] = _parse_entry(section, key, raw)
    return _build_experiment(values)


def _parse_entry(section: str, key: str, raw: str):
    if (section, key) not in _SCHEMA:
        raise ConfigError(f"unknown config key [{section}] {key}")
    fn, kind = _SCHEMA[(section, key)]
    try:
        return fn(raw)
    except (ValueError, TypeError):
        raise ConfigError(
            f"config key [{section}] {key}: expected {kind}, got {raw!r}"
        ) from None


def _build_experiment(values: dict[tuple[str, str], object]) -> ExperimentConfig:
    loss_kwargs = {k[1]: v for k, v in values.items() if k[0] == "losses"}
    zo_kwargs = {k[1]: v for k, v in values.items() if k[0] == "zo"}
    fed_kwargs = {name: values[k] for k, name in _FED_KEYS.items() if k in values}
    exp_kwargs = {name: values[k] for k, name in _EXP_KEYS.items() if k in values}
    if ("run", "ablation") in values:
        flags = values[("run", "ablation")]
        for f in flags:
            if f not in ABLATION_FLAGS:
                raise ConfigError(
                    f"config key [run] ablation: unknown flag {f!r}; "
                    f"expected one of {ABLATION_FLAGS}"
                )
        fed_kwargs["ablation"] = flags
    method = fed_kwargs.get("method", "fedzge")
    if method not in METHODS:
        raise ConfigError(
            f"config key [federation] method: unknown method {method!r}; "
            f"expected one of {METHODS}"
        )
    mode = zo_kwargs.get("mode", "gaussian")
    if mode not in MODES:
        raise ConfigError(
            f"config key [zo] mode: unknown mode {mode!r}; expected one of {MODES}"
        )
    try:
        fed = FederationConfig(
            loss_weights=LossWeights(**loss_kwargs),
            zo=ZOConfig(**zo_kwargs),
            **fed_kwargs,
        )
        return ExperimentConfig(federation=fed, **exp_kwargs)
    except FedzgeError as exc:
        raise ConfigError(str(exc)) from None


def resolved_config_dict(exp: ExperimentConfig) -> dict:
    return dataclasses.asdict(exp)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run(exp: ExperimentConfig, out_dir: str | None = None) -> ExperimentResult:
    """Execute the experiment and write the four output files."""
    out = out_dir or exp.out_dir or "fedzge-out"
    os.makedirs(out, exist_ok=True)
    result = run_experiment(exp)

    with open(os.path.join(out, "metrics.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write("seed,round,accuracy,loss_fid,loss_adv,loss_div,loss_info,"
                 "loss_gd,bytes_down,bytes_up\n")
        for run_result in result.runs:
            for m in run_result.metrics:
                row = [
                    run_result.seed, m.round_index, _fmt(m.accuracy),
                    _fmt(m.loss_fid), _fmt(m.loss_adv), _fmt(m.loss_div),
                    _fmt(m.loss_info), _fmt(m.loss_gd),
                    m.bytes_down, m.bytes_up,
                ]
                fh.write(",".join(str(v) for v in row) + "\n")

    summary = {
        "method": result.method,
        "seeds": list(exp.seeds),
        "final_accuracies": [r.final_accuracy for r in result.runs],
        "mean_final_accuracy": result.mean_final_accuracy,
        "std_final_accuracy": result.std_final_accuracy,
        "total_bytes": result.total_bytes,
        "total_gib": comms.to_gib(result.total_bytes),
    }
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    result.runs[0].ledger.to_csv(os.path.join(out, "ledger.csv"))

    with open(os.path.join(out, "resolved-config.json"), "w", encoding="utf-8") as fh:
        json.dump(resolved_config_dict(exp), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result


def _sweep_point(exp: ExperimentConfig, axis: str, raw_value: str) -> ExperimentConfig:
    fed = exp.federation
    if axis == "q":
        return dataclasses.replace(
            exp, federation=dataclasses.replace(
                fed, zo=dataclasses.replace(fed.zo, q=int(raw_value))
            )
        )
    if axis == "alpha":
        return dataclasses.replace(exp, alpha=float(raw_value))
    if axis == "epsilon_sf":
        return dataclasses.replace(
            exp, federation=dataclasses.replace(fed, sampling_fraction=float(raw_value))
        )
    if axis == "method":
        if raw_value not in METHODS:
            raise ConfigError(f"unknown method {raw_value!r}; expected one of {METHODS}")
        return dataclasses.replace(
            exp, federation=dataclasses.replace(fed, method=raw_value)
        )
    if axis == "ablation":
        flags = () if raw_value in ("full", "none") else (raw_value,)
        return dataclasses.replace(
            exp, federation=dataclasses.replace(fed, ablation=flags)
        )
    raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(exp: ExperimentConfig, axis: str, values: list[str],
          out_dir: str | None = None, parallel: int = 1) -> dict[str, str]:
    """One run per axis value, each in its own subdirectory; returns and
    writes the point -> directory index."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    out = out_dir or exp.out_dir or "fedzge-sweep"
    os.makedirs(out, exist_ok=True)
    points = [(v, _sweep_point(exp, axis, v), f"{axis}={v}") for v in values]

    def _one(point):
        _, point_exp, subdir = point
        run(point_exp, os.path.join(out, subdir))

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            list(pool.map(_one, points))
    else:
        for p in points:
            _one(p)
    index = {v: subdir for v, _, subdir in points}
    with open(os.path.join(out, "index.json"), "w", encoding="utf-8") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return index


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file path")
    p.add_argument("--method", help="fedzge | fedavg | mhat | dsfl | whitebox_datafree")
    p.add_argument("--alpha", help="Dirichlet concentration")
    p.add_argument("--clients", help="number of clients K")
    p.add_argument("--rounds", help="communication rounds T")
    p.add_argument("--q", help="perturbation direction count")
    p.add_argument("--seed", help="comma-separated seed list")
    p.add_argument("--out", help="output directory")
    p.add_argument("--ablate", action="append", default=[],
                   help="drop a loss term or phase: " + "|".join(ABLATION_FLAGS))


def _overrides_from_args(args: argparse.Namespace) -> dict[tuple[str, str], str]:
    overrides: dict[tuple[str, str], str] = {}
    if args.method is not None:
        overrides[("federation", "method")] = args.method
    if args.alpha is not None:
        overrides[("data", "alpha")] = args.alpha
    if args.clients is not None:
        overrides[("federation", "num_clients")] = args.clients
    if args.rounds is not None:
        overrides[("federation", "rounds")] = args.rounds
    if args.q is not None:
        overrides[("zo", "q")] = args.q
    if args.seed is not None:
        overrides[("run", "seeds")] = args.seed
    if args.out is not None:
        overrides[("run", "out_dir")] = args.out
    if args.ablate:
        overrides[("run", "ablation")] = ",".join(args.ablate)
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fedzge",
        description="Desk-scale federated learning simulator with a black-box, "
                    "data-free, zeroth-order generator protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one experiment")
    _add_common_flags(run_p)
    sweep_p = sub.add_parser("sweep", help="run one experiment per axis value")
    _add_common_flags(sweep_p)
    sweep_p.add_argument("--axis", required=True, help="|".join(SWEEP_AXES))
    sweep_p.add_argument("--values", required=True, help="comma-separated axis values")
    sweep_p.add_argument("--parallel", type=int, default=1,
                         help="concurrent sweep points")

    args = parser.parse_args(argv)
    try:
        exp = parse_config(args.config, _overrides_from_args(args))
        if args.command == "run":
            result = run(exp)
            out = exp.out_dir or "fedzge-out"
            print(f"{exp.federation.method}: mean final accuracy "
                  f"{result.mean_final_accuracy:.4f} "
                  f"(std {result.std_final_accuracy:.4f}), "
                  f"{comms.to_gib(result.total_bytes):.2f} GiB moved; outputs in {out}")
        else:
            index = sweep(exp, args.axis, list(_parse_str_list(args.values)),
                          parallel=args.parallel)
            print(f"swept {args.axis} over {len(index)} points; outputs in "
                  f"{exp.out_dir or 'fedzge-sweep'}")
    except FedzgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
