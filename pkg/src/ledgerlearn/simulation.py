"""Deterministic round-based simulator for a population of peers.

Builds a synthetic task, partitions it across participants, injects attackers,
funds and stakes everyone on a fresh ledger, then replays a seeded encounter
trace round by round through the chosen protocol adapter. All randomness flows
from one master seed through named SeedSequence spawns, so a config maps to
byte-identical outputs.

Metrics land in RunMetrics and can be written out as four CSV files plus a
summary.json. A run without incentives bypasses the ledger entirely (every
encounter is accepted) and serves as the unprotected baseline.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from statistics import fmean
from typing import Sequence

import numpy as np

from .ledger import (
    ACCEPTED_CASES,
    ContractConfig,
    EligibilityError,
    EVENT_LOG_COLUMNS,
    InsufficientBalanceError,
    TokenLedger,
    gas_total_per_encounter,
)
from .learning import (
    PartitionSpec,
    TrainConfig,
    evaluate,
    flip_labels,
    generate_synthetic,
    init_model,
    merge,
    partition,
    split_by_class,
    train,
)
from .protocol import (
    Behavior,
    EncounterSettings,
    Participant,
    gossip_encounter,
    neighbor_gossip_payload,
    neighbor_oppcl_response,
    oppcl_encounter,
    spawn_seed,
)

ALGORITHMS = ("gossip", "oppcl")


@dataclass(frozen=True)
class TaskConfig:
    """Synthetic classification task shared by the whole population."""

    num_classes: int = 10
    dims: int = 16
    train_per_class: int = 400
    test_per_class: int = 50
    spread: float = 0.3

    def __post_init__(self):
        if min(self.num_classes, self.dims, self.train_per_class, self.test_per_class) < 1:
            raise ValueError("task dimensions must all be positive")
        if self.spread < 0:
            raise ValueError("spread must be non-negative")


@dataclass(frozen=True)
class AttackerMix:
    label_flip: int = 0
    random_model: int = 0
    always_approve: int = 0

    def __post_init__(self):
        if min(self.label_flip, self.random_model, self.always_approve) < 0:
            raise ValueError("attacker counts must be non-negative")

    @property
    def total(self) -> int:
        return self.label_flip + self.random_model + self.always_approve


@dataclass(frozen=True)
class SimConfig:
    n_participants: int = 50
    n_rounds: int = 100
    algorithm: str = "oppcl"
    partition: PartitionSpec = field(default_factory=lambda: PartitionSpec("iid", 50))
    contract: ContractConfig = field(default_factory=ContractConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    tolerance: float = 0.03
    validators_k: int = 3
    attackers: AttackerMix = field(default_factory=AttackerMix)
    blocks_per_round: int = 1000
    master_seed: int = 1
    with_incentives: bool = True
    validators_use_holdout: bool = False
    reward: int | None = None
    hidden_widths: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n_participants < 2:
            raise ValueError("need at least 2 participants")
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be positive")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.partition.n_nodes != self.n_participants:
            raise ValueError(
                f"partition is for {self.partition.n_nodes} nodes, "
                f"run has {self.n_participants} participants"
            )
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if self.attackers.total > self.n_participants:
            raise ValueError("more attackers than participants")
        if self.validators_k < self.contract.voting_threshold:
            raise ValueError(
                f"validators_k {self.validators_k} is below the voting threshold "
                f"{self.contract.voting_threshold}"
            )
        if self.blocks_per_round < 0:
            raise ValueError("blocks_per_round must be non-negative")
        if self.reward is not None and self.reward <= 0:
            raise ValueError("reward must be positive")
        widths = self.resolved_widths()
        if self.algorithm == "gossip" and len(set(widths)) != 1:
            raise ValueError("gossip requires a single shared arch; give one hidden width")

    def resolved_widths(self) -> tuple[int, ...]:
        """Hidden-layer widths cycled over the population; 0 means linear."""
        if self.hidden_widths is not None:
            return self.hidden_widths
        return (0,) if self.algorithm == "gossip" else (0, 16, 32)


@dataclass(frozen=True)
class EncounterTrace:
    rounds: tuple[tuple[tuple[str, str], ...], ...]


@dataclass
class RunMetrics:
    config: SimConfig
    accuracy_rows: list[tuple[int, str, float]]
    stake_rows: list[tuple[int, str, int]]
    vote_rows: list[tuple[int, str, bool]]
    round_summary: list[tuple[int, float, float, float]]
    behaviors: dict[str, str]
    case_counts: dict[str, int]
    validated_fraction: float | None
    settled_encounters: int
    incomplete_encounters: int
    skipped_pairs: int
    gas_total: int
    ledger: TokenLedger

    def final_mean_honest_accuracy(self) -> float:
        return self.round_summary[-1][1]

    def summary(self) -> dict:
        cfg = asdict(self.config)
        excluded = sorted(
            pid for pid, acct in self.ledger.accounts.items() if acct.excluded
        )
        return {
            "config": cfg,
            "results": {
                "initial_mean_honest_accuracy": self.round_summary[0][1],
                "final_mean_honest_accuracy": self.round_summary[-1][1],
                "validated_fraction": self.validated_fraction,
                "case_counts": dict(sorted(self.case_counts.items())),
                "settled_encounters": self.settled_encounters,
                "incomplete_encounters": self.incomplete_encounters,
                "skipped_pairs": self.skipped_pairs,
                "gas_total": self.gas_total,
                "treasury": self.ledger.treasury,
                "total_tokens": self.ledger.total_tokens(),
                "excluded_participants": excluded,
                "behaviors": dict(sorted(self.behaviors.items())),
            },
        }


def participant_ids(n: int) -> list[str]:
    width = max(2, len(str(n - 1)))
    return [f"p{i:0{width}d}" for i in range(n)]


def _seed_of(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(2, dtype=np.uint64)[0])


def generate_trace(n_participants: int, n_rounds: int, seed: int) -> EncounterTrace:
    """Seeded random perfect matchings; with odd populations the sit-out
    rotates so per-participant encounter counts stay within one of each other."""
    if n_participants < 2:
        raise ValueError("need at least 2 participants to pair")
    if n_rounds < 0:
        raise ValueError("n_rounds must be non-negative")
    ids = participant_ids(n_participants)
    rng = np.random.default_rng(seed)
    rounds = []
    for rnd in range(n_rounds):
        active = [ids[int(i)] for i in rng.permutation(n_participants)]
        if n_participants % 2:
            active.remove(ids[rnd % n_participants])
        pairs = tuple(
            (active[i], active[i + 1]) for i in range(0, len(active), 2)
        )
        rounds.append(pairs)
    return EncounterTrace(tuple(rounds))


def _assign_behaviors(
    ids: list[str], mix: AttackerMix, rng: np.random.Generator
) -> dict[str, Behavior]:
    behaviors = {pid: Behavior.HONEST for pid in ids}
    chosen = rng.choice(len(ids), size=mix.total, replace=False)
    cursor = 0
    for count, behavior in (
        (mix.label_flip, Behavior.LABEL_FLIP),
        (mix.random_model, Behavior.RANDOM_MODEL),
        (mix.always_approve, Behavior.ALWAYS_APPROVE),
    ):
        for _ in range(count):
            behaviors[ids[int(chosen[cursor])]] = behavior
            cursor += 1
    return behaviors


def _plain_encounter(
    algorithm: str,
    learner: Participant,
    neighbor: Participant,
    train_cfg: TrainConfig,
    rng: np.random.Generator,
) -> None:
    """Unprotected exchange: no escrow, no votes, everything accepted."""
    if algorithm == "gossip":
        payload = neighbor_gossip_payload(neighbor, rng)
        merged = merge(learner.model, payload)
        cfg = replace(train_cfg, seed=spawn_seed(rng))
        learner.model = train(merged, learner.dataset, cfg)
    else:
        returned = neighbor_oppcl_response(neighbor, learner.model, train_cfg, rng)
        learner.model = merge(learner.model, returned)


def run(cfg: SimConfig) -> RunMetrics:
    """Replay the full trace and collect metrics on a shared held-out test set."""
    if cfg.with_incentives and cfg.n_participants < 2 + cfg.validators_k:
        raise ValueError(
            f"{cfg.n_participants} participants cannot seat a learner, a neighbor, "
            f"and {cfg.validators_k} validators"
        )

    root = np.random.SeedSequence(cfg.master_seed)
    task_seq, part_seq, trace_seq, assign_seq, model_seq, flip_seq, rounds_seq = root.spawn(7)

    task = cfg.task
    full = generate_synthetic(
        task.num_classes,
        task.dims,
        task.train_per_class + task.test_per_class,
        task.spread,
        _seed_of(task_seq),
    )
    train_pool, test_set = split_by_class(full, task.train_per_class)
    shares = partition(train_pool, cfg.partition, _seed_of(part_seq))
    ids = participant_ids(cfg.n_participants)
    trace = generate_trace(cfg.n_participants, cfg.n_rounds, _seed_of(trace_seq))
    behaviors = _assign_behaviors(
        ids, cfg.attackers, np.random.default_rng(_seed_of(assign_seq))
    )

    widths = cfg.resolved_widths()
    flip_seed = _seed_of(flip_seq)
    model_seqs = model_seq.spawn(cfg.n_participants)
    participants: dict[str, Participant] = {}
    for i, pid in enumerate(ids):
        w = int(widths[i % len(widths)])
        arch = (task.dims, task.num_classes) if w == 0 else (task.dims, w, task.num_classes)
        data = shares[i]
        if behaviors[pid] is Behavior.LABEL_FLIP:
            # Every poisoner applies the same derangement: coordinated relabeling.
            data = flip_labels(data, flip_seed)
        participants[pid] = Participant(
            pid, data, init_model(arch, _seed_of(model_seqs[i])), behaviors[pid]
        )

    ledger = TokenLedger(cfg.contract)
    for pid in ids:
        ledger.exchange_tokens(pid, cfg.contract.initial_exchange)
        ledger.stake(pid, cfg.contract.initial_stake)
    if cfg.with_incentives and not ledger.eligible_participants():
        raise ValueError("no participant is eligible after initial staking")

    accuracy_rows: list[tuple[int, str, float]] = []
    stake_rows: list[tuple[int, str, int]] = []
    round_summary: list[tuple[int, float, float, float]] = []
    skipped = 0

    def snapshot(round_no: int) -> None:
        block = ledger.height
        honest = []
        for pid in ids:
            acc = evaluate(participants[pid].model, test_set).accuracy
            accuracy_rows.append((round_no, pid, acc))
            if behaviors[pid] is Behavior.HONEST:
                honest.append(acc)
            stake_rows.append((block, pid, ledger.accounts[pid].staked))
        if honest:
            round_summary.append((round_no, fmean(honest), min(honest), max(honest)))

    snapshot(0)
    reward = cfg.reward if cfg.reward is not None else cfg.contract.default_reward
    adapter = gossip_encounter if cfg.algorithm == "gossip" else oppcl_encounter
    per_round_seqs = rounds_seq.spawn(cfg.n_rounds)
    for rnd in range(1, cfg.n_rounds + 1):
        pairs = trace.rounds[rnd - 1]
        pair_seqs = per_round_seqs[rnd - 1].spawn(max(1, len(pairs)))
        for pair_idx, (learner_id, neighbor_id) in enumerate(pairs):
            pair_rng = np.random.default_rng(pair_seqs[pair_idx])
            learner = participants[learner_id]
            neighbor = participants[neighbor_id]
            if not cfg.with_incentives:
                _plain_encounter(cfg.algorithm, learner, neighbor, cfg.train, pair_rng)
                continue
            # Ephemeral pairings: a pair the ledger would turn away is dropped, not retried.
            if (
                ledger.accounts[learner_id].excluded
                or not ledger.is_eligible(neighbor_id)
                or ledger.accounts[learner_id].balance < reward
            ):
                skipped += 1
                continue
            settings = EncounterSettings(
                candidates=participants,
                rng=pair_rng,
                reward=cfg.reward,
                tolerance=cfg.tolerance,
                validators_k=cfg.validators_k,
                train=cfg.train,
                validator_holdout=test_set if cfg.validators_use_holdout else None,
            )
            try:
                adapter(learner, neighbor, ledger, settings)
            except (InsufficientBalanceError, EligibilityError):
                skipped += 1
        ledger.advance_block(cfg.blocks_per_round)
        snapshot(rnd)

    vote_rows: list[tuple[int, str, bool]] = []
    case_counts: Counter[str] = Counter()
    settled = 0
    incomplete = 0
    gas_total = 0
    accepted = 0
    for eid in sorted(ledger.encounters):
        rec = ledger.encounters[eid]
        for v in rec.votes:
            vote_rows.append((eid, v.validator, v.verdict))
        if rec.outcome is None:
            continue
        settled += 1
        if rec.was_incomplete:
            incomplete += 1
        else:
            case_counts[rec.outcome.case.name] += 1
            gas_total += gas_total_per_encounter(len(rec.votes))
        if rec.outcome.case in ACCEPTED_CASES:
            accepted += 1
    validated_fraction = accepted / settled if settled else None

    return RunMetrics(
        config=cfg,
        accuracy_rows=accuracy_rows,
        stake_rows=stake_rows,
        vote_rows=vote_rows,
        round_summary=round_summary,
        behaviors={pid: behaviors[pid].value for pid in ids},
        case_counts=dict(case_counts),
        validated_fraction=validated_fraction,
        settled_encounters=settled,
        incomplete_encounters=incomplete,
        skipped_pairs=skipped,
        gas_total=gas_total,
        ledger=ledger,
    )


def voting_sweep(
    base: SimConfig,
    taus: Sequence[float],
    voter_counts: Sequence[int],
    use_holdout: bool = True,
) -> list[tuple[float, int, float]]:
    """One full run per (tau, voters) cell, same master seed everywhere.

    By default validators score models on the shared held-out set so the cells
    differ only in tolerance and panel size, not in evaluation noise.
    """
    rows = []
    for tau in sorted(float(t) for t in taus):
        for k in sorted(int(v) for v in voter_counts):
            cfg = replace(
                base,
                tolerance=tau,
                validators_k=k,
                validators_use_holdout=use_holdout or base.validators_use_holdout,
            )
            metrics = run(cfg)
            fraction = metrics.validated_fraction
            rows.append((tau, k, 0.0 if fraction is None else fraction))
    return rows


def attack_study(
    base: SimConfig,
    attacker_counts: Sequence[int],
    with_incentives: bool,
    behavior: Behavior = Behavior.RANDOM_MODEL,
) -> dict[int, list[tuple[int, float]]]:
    """Mean honest accuracy per round for each attacker count."""
    if behavior is Behavior.HONEST:
        raise ValueError("attack_study needs an attacker behavior")
    curves: dict[int, list[tuple[int, float]]] = {}
    for count in attacker_counts:
        mix = AttackerMix(**{behavior.value: int(count)})
        cfg = replace(base, attackers=mix, with_incentives=with_incentives)
        metrics = run(cfg)
        curves[int(count)] = [(rnd, mean) for rnd, mean, _, _ in metrics.round_summary]
    return curves


# -- output files -------------------------------------------------------------


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_outputs(metrics: RunMetrics, outdir: str | Path, manifest: dict | None = None) -> list[Path]:
    """Emit accuracy.csv, stakes.csv, encounters.csv, votes.csv, summary.json."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    p = outdir / "accuracy.csv"
    _write_csv(
        p,
        ("round", "participant_id", "accuracy"),
        ((rnd, pid, repr(acc)) for rnd, pid, acc in metrics.accuracy_rows),
    )
    paths.append(p)

    p = outdir / "stakes.csv"
    _write_csv(p, ("block", "participant_id", "staked"), metrics.stake_rows)
    paths.append(p)

    p = outdir / "encounters.csv"
    _write_csv(p, EVENT_LOG_COLUMNS, metrics.ledger.event_rows())
    paths.append(p)

    p = outdir / "votes.csv"
    _write_csv(
        p,
        ("encounter_id", "validator_id", "verdict"),
        ((eid, vid, int(verdict)) for eid, vid, verdict in metrics.vote_rows),
    )
    paths.append(p)

    summary = metrics.summary()
    if manifest:
        summary["manifest"] = manifest
    p = outdir / "summary.json"
    p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    paths.append(p)
    return paths
