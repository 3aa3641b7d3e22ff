"""Command-line front end: budget queries, sweeps, training runs, audits.

Exit codes: 0 success, 2 usage error (argparse), 1 runtime failure. Every
command is deterministic under --seed; commands that create an output
directory drop a manifest.json recording how it was produced.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__, accountant, flsim, lira
from .flsim import FlRunConfig, SyntheticTaskSpec
from .lira import AttackConfig
from .pmf import NoiseSpec
from .quantizer import QuantizerSpec

SEED_ENV_VAR = "QDP_SEED"

_FL_KEYS = {
    "n_clients_total": int,
    "n_sampled": int,
    "rounds": int,
    "local_steps": int,
    "learning_rate": float,
    "batch_size": int,
    "c_q": float,
    "sigma": float,
    "seed": int,
    "dimension": int,
    "samples_per_client": int,
    "margin": float,
    "test_samples": int,
}
_ATTACK_KEYS = {
    "m_shadows": int,
    "audit_size": int,
    "shadow_steps": int,
    "shadow_learning_rate": float,
}


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every generated output directory."""

    command: str
    config_path: str
    seed: int
    output_dir: str
    tool_version: str


def parse_config(path: Path | str) -> dict[str, str]:
    """Read a flat `key = value` file; `#` starts a comment."""
    mapping: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ValueError(f"{path}:{lineno}: empty key or value in {raw!r}")
        if key in mapping:
            raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


def _convert(key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: cannot parse {value!r} as {kind.__name__}") from exc


def _fl_config_from_mapping(mapping: dict[str, str], seed: int) -> FlRunConfig:
    known = set(_FL_KEYS) | set(_ATTACK_KEYS) | {"k", "optimizer"}
    for key in mapping:
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
    values = {}
    for key, kind in _FL_KEYS.items():
        if key in ("seed", "test_samples"):
            continue
        if key not in mapping:
            raise ValueError(f"missing config key {key!r}")
        values[key] = _convert(key, mapping[key], kind)
    if "k" not in mapping:
        raise ValueError("missing config key 'k' (an integer >= 2, or 'none')")
    raw_k = mapping["k"].lower()
    k = None if raw_k == "none" else _convert("k", mapping["k"], int)
    task = SyntheticTaskSpec(
        dimension=values.pop("dimension"),
        samples_per_client=values.pop("samples_per_client"),
        margin=values.pop("margin"),
        test_samples=_convert("test_samples", mapping.get("test_samples", "2000"), int),
    )
    return FlRunConfig(
        k=k,
        seed=seed,
        task=task,
        optimizer=mapping.get("optimizer", "sgd"),
        **values,
    )


def _attack_config_from_mapping(mapping: dict[str, str], seed: int) -> AttackConfig:
    kwargs = {"seed": seed}
    for key, kind in _ATTACK_KEYS.items():
        if key in mapping:
            kwargs[key] = _convert(key, mapping[key], kind)
    return AttackConfig(**kwargs)


def _resolve_seed(flag_seed: int | None, mapping: dict[str, str]) -> int:
    if flag_seed is not None:
        return flag_seed
    if "seed" in mapping:
        return _convert("seed", mapping["seed"], int)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        return _convert(SEED_ENV_VAR, env, int)
    raise ValueError(f"no seed given: pass --seed, set 'seed' in the config, or set {SEED_ENV_VAR}")


def _write_manifest(command: str, config_path: str, seed: int, out_dir: Path) -> None:
    manifest = RunManifest(
        command=command,
        config_path=config_path,
        seed=seed,
        output_dir=str(out_dir),
        tool_version=__version__,
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n"
    )


def _cmd_budget(args) -> int:
    mech = accountant.MechanismSpec(
        noise=NoiseSpec(sigma=args.sigma), quant=QuantizerSpec(k=args.k, c_q=args.cq)
    )
    if args.alpha == "1":
        value = accountant.epsilon_one(mech)
    else:
        value = accountant.epsilon_infinity(mech)
    print(f"{value:.12g}")
    return 0


def _cmd_sweep(args) -> int:
    rows = accountant.budget_sweep(args.k_list, NoiseSpec(sigma=args.sigma), args.cq)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "eps1", "eps_inf", "eps_gauss_alpha1"])
        for row in rows:
            writer.writerow([row.k, repr(row.eps1), repr(row.eps_inf), repr(row.eps_gauss_alpha1)])
    return 0


def _cmd_fl_train(args) -> int:
    mapping = parse_config(args.config)
    seed = _resolve_seed(args.seed, mapping)
    config = _fl_config_from_mapping(mapping, seed)
    result = flsim.train(config)
    out_dir = Path(args.out)
    flsim.write_run_artifact(result, out_dir)
    _write_manifest("fl-train", str(args.config), seed, out_dir)
    final_round, final_acc, final_loss = result.metrics[-1]
    print(f"round {final_round}: test_accuracy={final_acc:.4f} test_loss={final_loss:.4f}")
    return 0


def _cmd_mia(args) -> int:
    mapping = parse_config(args.config)
    seed = _resolve_seed(args.seed, mapping)
    fl_config = _fl_config_from_mapping(mapping, seed)
    attack_config = _attack_config_from_mapping(mapping, seed)
    report = lira.audit_run(fl_config, attack_config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lira.write_report(report, fl_config, attack_config, out_dir / "report.json")
    _write_manifest("mia", str(args.config), seed, out_dir)
    print(f"attack accuracy: {report.accuracy:.4f}")
    return 0


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0 or math.isinf(value):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got {text!r}")
    return value


def _k_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values or any(k < 2 for k in values):
        raise argparse.ArgumentTypeError("every quantization level must be an integer >= 2")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdp",
        description="Privacy budgets for the quantized Gaussian mechanism, "
        "a FedAvg simulator, and a membership-inference harness.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    budget = sub.add_parser("budget", help="print one privacy budget")
    budget.add_argument("--k", type=int, required=True, help="quantization levels (>= 2)")
    budget.add_argument("--cq", type=_positive_float, required=True, help="clipping radius")
    budget.add_argument("--sigma", type=_positive_float, required=True, help="noise std dev")
    budget.add_argument("--alpha", choices=("1", "inf"), default="1", help="Renyi order")
    budget.set_defaults(handler=_cmd_budget)

    sweep = sub.add_parser("sweep", help="budgets for a list of levels, as CSV")
    sweep.add_argument("--k-list", type=_k_list, required=True, help="e.g. 2,4,8,16,32,64")
    sweep.add_argument("--cq", type=_positive_float, required=True)
    sweep.add_argument("--sigma", type=_positive_float, required=True)
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.set_defaults(handler=_cmd_sweep)

    fl = sub.add_parser("fl-train", help="run the federated simulator")
    fl.add_argument("--config", required=True, help="flat key=value config file")
    fl.add_argument("--seed", type=int, default=None)
    fl.add_argument("--out", required=True, help="output directory")
    fl.set_defaults(handler=_cmd_fl_train)

    mia = sub.add_parser("mia", help="run the membership-inference audit")
    mia.add_argument("--config", required=True, help="flat key=value config file")
    mia.add_argument("--seed", type=int, default=None)
    mia.add_argument("--out", required=True, help="output directory")
    mia.set_defaults(handler=_cmd_mia)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"qdp {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
