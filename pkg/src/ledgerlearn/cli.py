"""Command-line front end for the simulator.

One TOML config file describes a run; flags override selected fields. Every
subcommand is a pure function of (config, flags, seed) to output bytes: no
timestamps and no machine-specific content land in any artifact.

Exit status: 0 on success, 2 on a config problem, 3 on a runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .ledger import GAS_TABLE, ContractConfig, gas_total_per_encounter
from .learning import PartitionSpec, TrainConfig
from .simulation import (
    AttackerMix,
    SimConfig,
    TaskConfig,
    attack_study,
    run,
    voting_sweep,
    write_outputs,
)


class ConfigError(Exception):
    """Unreadable, unparsable, or invalid configuration."""


_SECTIONS = {
    "run": {
        "participants",
        "rounds",
        "algorithm",
        "seed",
        "blocks_per_round",
        "validators",
        "tau",
        "incentives",
        "validators_use_holdout",
        "reward",
        "hidden_widths",
    },
    "partition": {"mode", "classes_per_node"},
    "contract": {
        "stake_threshold",
        "initial_exchange",
        "initial_stake",
        "voting_threshold",
        "max_voting_blocks",
        "neighbor_reward_share",
        "default_reward",
        "incomplete_fraction",
    },
    "task": {"num_classes", "dims", "train_per_class", "test_per_class", "spread"},
    "train": {"learning_rate", "steps", "batch_size"},
    "attackers": {"label_flip", "random_model", "always_approve"},
}


def load_config(path: str | Path | None) -> dict:
    """Parse the TOML config file and reject unknown sections or keys."""
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section, content in doc.items():
        if section not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"{path}: [{section}] must be a table")
        for key in content:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
    return doc


def build_sim_config(doc: dict, args: argparse.Namespace) -> SimConfig:
    """Defaults, then config file, then command-line flags."""
    run_sec = dict(doc.get("run", {}))
    part_sec = dict(doc.get("partition", {}))

    if getattr(args, "seed", None) is not None:
        run_sec["seed"] = args.seed
    if getattr(args, "algorithm", None) is not None:
        run_sec["algorithm"] = args.algorithm
    if getattr(args, "tau", None) is not None:
        run_sec["tau"] = args.tau
    if getattr(args, "voters", None) is not None:
        run_sec["validators"] = args.voters
    if getattr(args, "incentives", None) is not None:
        run_sec["incentives"] = args.incentives == "on"
    if getattr(args, "partition", None) is not None:
        part_sec["mode"] = args.partition

    try:
        contract = ContractConfig(**doc.get("contract", {}))
        task = TaskConfig(**doc.get("task", {}))
        train = TrainConfig(**doc.get("train", {}))
        attackers = AttackerMix(**doc.get("attackers", {}))
        n = int(run_sec.get("participants", 50))
        part = PartitionSpec(
            mode=part_sec.get("mode", "iid"),
            n_nodes=n,
            classes_per_node=int(part_sec.get("classes_per_node", 2)),
        )
        widths = run_sec.get("hidden_widths")
        cfg = SimConfig(
            n_participants=n,
            n_rounds=int(run_sec.get("rounds", 100)),
            algorithm=run_sec.get("algorithm", "oppcl"),
            partition=part,
            contract=contract,
            task=task,
            train=train,
            tolerance=float(run_sec.get("tau", 0.03)),
            validators_k=int(run_sec.get("validators", contract.voting_threshold)),
            attackers=attackers,
            blocks_per_round=int(run_sec.get("blocks_per_round", 1000)),
            master_seed=int(run_sec.get("seed", 1)),
            with_incentives=bool(run_sec.get("incentives", True)),
            validators_use_holdout=bool(run_sec.get("validators_use_holdout", False)),
            reward=None if run_sec.get("reward") is None else int(run_sec["reward"]),
            hidden_widths=None if widths is None else tuple(int(w) for w in widths),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _manifest(args: argparse.Namespace, cfg: SimConfig, outdir: Path) -> dict:
    return {
        "config_path": None if args.config is None else str(args.config),
        "master_seed": cfg.master_seed,
        "out_dir": str(outdir),
        "tool_version": __version__,
    }


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from None


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected a comma-separated number list, got {text!r}") from None


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_sim_config(load_config(args.config), args)
    if args.attackers is not None:
        counts = _parse_ints(args.attackers)
        if len(counts) != 1:
            raise ConfigError("simulate takes a single attacker count")
        cfg = replace(cfg, attackers=AttackerMix(random_model=counts[0]))
    outdir = Path(args.out)
    metrics = run(cfg)
    paths = write_outputs(metrics, outdir, _manifest(args, cfg, outdir))
    final = metrics.final_mean_honest_accuracy()
    print(f"simulated {cfg.n_rounds} rounds, final mean honest accuracy {final:.4f}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_voting_sweep(args: argparse.Namespace) -> int:
    cfg = build_sim_config(load_config(args.config), args)
    taus = _parse_floats(args.taus)
    voters = _parse_ints(args.voters_list)
    if not taus or not voters:
        raise ConfigError("need at least one tau and one voter count")
    rows = voting_sweep(cfg, taus, voters)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "voting_sweep.csv"
    lines = ["tau,voters,validated_fraction"]
    lines += [f"{repr(t)},{k},{repr(f)}" for t, k, f in rows]
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path}")
    return 0


def cmd_attack_study(args: argparse.Namespace) -> int:
    cfg = build_sim_config(load_config(args.config), args)
    counts = _parse_ints(args.attackers if args.attackers is not None else "0,3,10")
    if not counts:
        raise ConfigError("need at least one attacker count")
    with_incentives = (args.incentives or "on") == "on"
    curves = attack_study(cfg, counts, with_incentives)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "attack_study.csv"
    lines = ["attackers,round,mean_honest_accuracy"]
    for count in sorted(curves):
        lines += [f"{count},{rnd},{repr(acc)}" for rnd, acc in curves[count]]
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path}")
    return 0


def cmd_cost(args: argparse.Namespace) -> int:
    votes = args.votes
    if votes < 0:
        raise ConfigError("--votes must be non-negative")
    rows = [
        ("pre_training_check", "learner", 1),
        ("learning_complete", "neighbor", 1),
        ("learning_complete", "learner", 1),
        ("vote", "validator", votes),
        ("finalize", "any", 1),
    ]
    print(f"{'step':<20} {'role':<10} {'count':>5} {'gas':>10}")
    for step, role, count in rows:
        each = GAS_TABLE[(step, role)]
        print(f"{step:<20} {role:<10} {count:>5} {each * count:>10}")
    print(f"{'total':<20} {'':<10} {'':>5} {gas_total_per_encounter(votes):>10}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ledgerlearn",
        description="Token-incentivized opportunistic learning simulator.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--algorithm", choices=("gossip", "oppcl"), default=None)
        p.add_argument("--partition", choices=("iid", "noniid"), default=None)
        p.add_argument("--tau", type=float, default=None, help="validation tolerance")
        p.add_argument("--voters", type=int, default=None, help="validators per encounter")

    p = sub.add_parser("simulate", help="one full run, five output files")
    common(p)
    p.add_argument("--attackers", default=None, help="random-model attacker count")
    p.add_argument("--incentives", choices=("on", "off"), default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("voting-sweep", help="validated fraction per (tau, voters) cell")
    common(p)
    p.add_argument("--taus", default="0.0,0.03,1.0", help="comma-separated tolerances")
    p.add_argument(
        "--voters-list",
        default="3,5,7",
        dest="voters_list",
        help="comma-separated validator counts",
    )
    p.set_defaults(func=cmd_voting_sweep)

    p = sub.add_parser("attack-study", help="accuracy curves per attacker count")
    common(p)
    p.add_argument("--attackers", default=None, help="comma-separated attacker counts")
    p.add_argument("--incentives", choices=("on", "off"), default=None)
    p.set_defaults(func=cmd_attack_study)

    p = sub.add_parser("cost", help="static gas breakdown for one encounter")
    p.add_argument("--votes", type=int, default=1, help="votes cast during the encounter")
    p.set_defaults(func=cmd_cost)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything past config validation
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
