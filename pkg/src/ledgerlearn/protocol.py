"""Encounter choreography: staking rules meet the learning loop.

Two adapters drive a full escrow-report-validate-settle cycle against the
ledger. Gossip merges the neighbor's model into the learner's and trains
before validation, keeping a copy for rollback. OppCL sends the learner's
model out for the neighbor to train and defers the merge until the votes
accept it, so rejection never touches the learner's parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .ledger import (
    ACCEPTED_CASES,
    FinalizationOutcome,
    TokenLedger,
)
from .learning import (
    Dataset,
    ModelParams,
    TrainConfig,
    digest,
    evaluate,
    merge,
    random_params_like,
    train,
)


class SelectionError(Exception):
    """Not enough eligible third parties to seat a validator panel."""


class Behavior(Enum):
    HONEST = "honest"
    LABEL_FLIP = "label_flip"
    RANDOM_MODEL = "random_model"
    ALWAYS_APPROVE = "always_approve"


# Behaviors that never evaluate anything before voting yes.
RUBBER_STAMP_BEHAVIORS = frozenset({Behavior.RANDOM_MODEL, Behavior.ALWAYS_APPROVE})


@dataclass
class Participant:
    participant_id: str
    dataset: Dataset
    model: ModelParams
    behavior: Behavior = Behavior.HONEST


@dataclass(frozen=True)
class ValidationRequest:
    old_model: ModelParams
    new_model: ModelParams
    tolerance: float = 0.03

    def __post_init__(self):
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if self.old_model.arch != self.new_model.arch:
            raise ValueError(
                f"arch mismatch: {self.old_model.arch} vs {self.new_model.arch}"
            )


@dataclass(frozen=True)
class EncounterResult:
    encounter_id: int
    outcome: FinalizationOutcome
    learner_model_after: ModelParams
    accepted: bool


@dataclass
class EncounterSettings:
    """Everything one encounter needs beyond the two parties themselves."""

    candidates: Mapping[str, Participant]
    rng: np.random.Generator
    reward: int | None = None
    tolerance: float = 0.03
    validators_k: int = 3
    train: TrainConfig = field(default_factory=TrainConfig)
    validator_holdout: Dataset | None = None
    simulate_drop: bool = False


def validate(req: ValidationRequest, validator_data: Dataset) -> bool:
    """True when the new model is not worse than the old one by more than the
    tolerance on the validator's data. Boundary equality counts as valid;
    the comparison is exact (no float rounding at the threshold)."""
    old = evaluate(req.old_model, validator_data)
    new = evaluate(req.new_model, validator_data)
    # Same dataset, same denominator: compare counts against an exact bound.
    tau = Fraction(str(req.tolerance))
    return Fraction(new.n_correct) >= Fraction(old.n_correct) - tau * old.n_samples


def as_generator(rng: np.random.Generator | int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def select_validators(
    ledger: TokenLedger,
    k: int,
    exclude: set[str],
    rng: np.random.Generator | int,
) -> list[str]:
    """k distinct eligible ids outside `exclude`, uniform without replacement."""
    if k < 1:
        raise SelectionError("validator count must be at least 1")
    gen = as_generator(rng)
    pool = [p for p in ledger.eligible_participants() if p not in exclude]
    if len(pool) < k:
        raise SelectionError(f"need {k} eligible validators, found {len(pool)}")
    picked = gen.choice(len(pool), size=k, replace=False)
    return [pool[int(i)] for i in picked]


def spawn_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63))


def neighbor_gossip_payload(neighbor: Participant, rng: np.random.Generator) -> ModelParams:
    """What the neighbor hands over in a gossip exchange."""
    if neighbor.behavior is Behavior.RANDOM_MODEL:
        return random_params_like(neighbor.model, spawn_seed(rng))
    return neighbor.model


def neighbor_oppcl_response(
    neighbor: Participant,
    incoming: ModelParams,
    train_cfg: TrainConfig,
    rng: np.random.Generator,
) -> ModelParams:
    """The neighbor's training service on the learner's model. A random-model
    attacker skips the work and returns junk of the right shape."""
    if neighbor.behavior is Behavior.RANDOM_MODEL:
        return random_params_like(incoming, spawn_seed(rng))
    cfg = replace(train_cfg, seed=spawn_seed(rng))
    return train(incoming, neighbor.dataset, cfg)


def validator_verdict(
    validator: Participant,
    req: ValidationRequest,
    holdout: Dataset | None = None,
) -> bool:
    if validator.behavior in RUBBER_STAMP_BEHAVIORS:
        return True
    data = holdout if holdout is not None else validator.dataset
    return validate(req, data)


def drive_validation(
    encounter_id: int,
    validators: Sequence[Participant],
    req: ValidationRequest,
    ledger: TokenLedger,
    holdout: Dataset | None = None,
) -> tuple[int, int]:
    """Collect one verdict per seated validator and cast it. Returns the tally."""
    tally = (0, 0)
    for v in validators:
        verdict = validator_verdict(v, req, holdout)
        tally = ledger.cast_vote(encounter_id, v.participant_id, verdict)
    return tally


def _check_panel_size(ledger: TokenLedger, cfg: EncounterSettings) -> None:
    # A panel smaller than the voting threshold could never finalize in-window.
    if cfg.validators_k < ledger.config.voting_threshold:
        raise ValueError(
            f"validators_k {cfg.validators_k} is below the voting threshold "
            f"{ledger.config.voting_threshold}"
        )


def _run_validated(
    eid: int,
    learner: Participant,
    neighbor: Participant,
    old_model: ModelParams,
    new_model: ModelParams,
    ledger: TokenLedger,
    cfg: EncounterSettings,
) -> FinalizationOutcome:
    """Shared back half: digests, panel selection, voting, settlement."""
    result_digest = digest(new_model)
    if cfg.simulate_drop:
        # One party never saw the result; its confirmation cannot match.
        ledger.report_complete(eid, neighbor.participant_id, result_digest)
        ledger.report_complete(eid, learner.participant_id, digest(old_model))
        return ledger.resolve_incomplete(eid)
    ledger.report_complete(eid, learner.participant_id, result_digest)
    ledger.report_complete(eid, neighbor.participant_id, result_digest)
    exclude = {learner.participant_id, neighbor.participant_id}
    try:
        panel = select_validators(ledger, cfg.validators_k, exclude, cfg.rng)
    except SelectionError:
        return ledger.resolve_incomplete(eid, abandoned=True)
    ledger.register_validation(eid, panel)
    req = ValidationRequest(old_model, new_model, cfg.tolerance)
    drive_validation(
        eid, [cfg.candidates[v] for v in panel], req, ledger, cfg.validator_holdout
    )
    return ledger.finalize(eid)


def gossip_encounter(
    learner: Participant,
    neighbor: Participant,
    ledger: TokenLedger,
    cfg: EncounterSettings,
) -> EncounterResult:
    """Merge-update-send: receive, average, train locally, then validate the
    (pre-merge, post-train) pair. Rejection restores the saved copy."""
    _check_panel_size(ledger, cfg)
    eid = ledger.open_encounter(learner.participant_id, neighbor.participant_id, cfg.reward)
    if not ledger.check_prepayment(eid):
        raise RuntimeError(f"encounter {eid} opened without escrow")
    old_model = learner.model.copy()
    payload = neighbor_gossip_payload(neighbor, cfg.rng)
    merged = merge(old_model, payload)
    train_cfg = replace(cfg.train, seed=spawn_seed(cfg.rng))
    new_model = train(merged, learner.dataset, train_cfg)
    outcome = _run_validated(eid, learner, neighbor, old_model, new_model, ledger, cfg)
    accepted = outcome.case in ACCEPTED_CASES
    learner.model = new_model if accepted else old_model
    return EncounterResult(eid, outcome, learner.model, accepted)


def oppcl_encounter(
    learner: Participant,
    neighbor: Participant,
    ledger: TokenLedger,
    cfg: EncounterSettings,
) -> EncounterResult:
    """Send-train-return-merge: the neighbor trains the learner's model on its
    own data; the merge waits for acceptance, so a rejected return is simply
    discarded."""
    _check_panel_size(ledger, cfg)
    eid = ledger.open_encounter(learner.participant_id, neighbor.participant_id, cfg.reward)
    if not ledger.check_prepayment(eid):
        raise RuntimeError(f"encounter {eid} opened without escrow")
    sent = learner.model
    returned = neighbor_oppcl_response(neighbor, sent, cfg.train, cfg.rng)
    outcome = _run_validated(eid, learner, neighbor, sent, returned, ledger, cfg)
    accepted = outcome.case in ACCEPTED_CASES
    if accepted:
        learner.model = merge(sent, returned)
    return EncounterResult(eid, outcome, learner.model, accepted)
