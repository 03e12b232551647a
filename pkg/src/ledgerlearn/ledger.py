"""Escrow-backed token ledger for peer learning encounters.

Accounts hold a spendable balance and a staked amount. Staking at or above
the configured threshold makes a participant eligible to serve as a neighbor
or validator. Each encounter escrows the learner's reward up front, collects
a result digest from both parties, runs a bounded voting window, and settles
by vote tally. Mismatched digests or an abandoned encounter fall back to a
partial split of the prepayment.

All quantities are unsigned integers in base units. Fractional reward shares
are applied with exact rational arithmetic and rounded toward minus infinity:
positive payouts truncate down, slash magnitudes round up. Sub-unit remainders
accumulate in a treasury account, so every settlement conserves tokens
exactly. Slashes are clamped at the available stake; the uncollected shortfall
reduces the pool distributed to recipients and is reported in the outcome.

The ledger is a single serializable state machine. Callers from multiple
threads must serialize through one owner; no internal locking is provided.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from fractions import Fraction
from pathlib import Path


class LedgerError(Exception):
    """Base class for every rule violation the ledger rejects."""


class AmountError(LedgerError):
    """Zero, negative, or otherwise malformed token amount."""


class InsufficientBalanceError(LedgerError):
    """Spendable balance cannot cover the requested amount."""

    def __init__(self, message: str, encounter_id: int | None = None):
        super().__init__(message)
        self.encounter_id = encounter_id


class EligibilityError(LedgerError):
    """Participant does not meet the staking or role requirements."""


class UnknownEncounterError(LedgerError):
    """No record exists for the given encounter id."""


class EncounterStateError(LedgerError):
    """Operation applied to a record in the wrong state."""


class VotingError(LedgerError):
    """Vote rejected: wrong voter, double vote, or closed window."""


class ClockError(LedgerError):
    """Block heights never decrease."""


def _exact(value: int | float | str | Fraction) -> Fraction:
    # Decimal-literal reading: 0.8 means exactly 8/10, not the nearest binary float.
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


@dataclass(frozen=True)
class ContractConfig:
    """Contract-level constants shared by every encounter in a run."""

    stake_threshold: int = 100
    initial_exchange: int = 1_000_000
    initial_stake: int = 200
    voting_threshold: int = 3
    max_voting_blocks: int = 50_000
    neighbor_reward_share: float = 0.8
    default_reward: int = 100
    incomplete_fraction: float = 0.2

    def __post_init__(self):
        for name in (
            "stake_threshold",
            "initial_exchange",
            "initial_stake",
            "voting_threshold",
            "max_voting_blocks",
            "default_reward",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.stake_threshold > self.initial_stake:
            raise ValueError(
                "stake_threshold above initial_stake would leave every participant ineligible"
            )
        if not 0 < self.neighbor_share < 1:
            raise ValueError(f"neighbor_reward_share must be in (0, 1), got {self.neighbor_reward_share!r}")
        if not 0 <= self.incomplete_share < 1:
            raise ValueError(f"incomplete_fraction must be in [0, 1), got {self.incomplete_fraction!r}")

    @property
    def neighbor_share(self) -> Fraction:
        return _exact(self.neighbor_reward_share)

    @property
    def validator_share(self) -> Fraction:
        # Never stored: always the complement of the neighbor's share.
        return 1 - self.neighbor_share

    @property
    def incomplete_share(self) -> Fraction:
        return _exact(self.incomplete_fraction)


class EncounterState(Enum):
    OPENED = "Opened"
    PREPAID = "Prepaid"
    COMPLETE_REPORTED = "CompleteReported"
    INCOMPLETE = "Incomplete"
    VALIDATING = "Validating"
    FINALIZED = "Finalized"
    ABORTED = "Aborted"


class SettlementCase(IntEnum):
    """Payout branch keyed by the yes/no tally (0 marks the no-result split)."""

    INCOMPLETE = 0
    NO_VOTES = 1
    UNANIMOUS_YES = 2
    UNANIMOUS_NO = 3
    MAJORITY_YES = 4
    MAJORITY_NO = 5


# Cases in which the learner keeps the new model and the neighbor is paid.
ACCEPTED_CASES = frozenset(
    {SettlementCase.NO_VOTES, SettlementCase.UNANIMOUS_YES, SettlementCase.MAJORITY_YES}
)


def classify_votes(yes: int, no: int) -> SettlementCase:
    """Map a tally to its settlement case. Ties side with acceptance."""
    if yes < 0 or no < 0:
        raise AmountError("vote counts must be non-negative")
    if yes == 0 and no == 0:
        return SettlementCase.NO_VOTES
    if no == 0:
        return SettlementCase.UNANIMOUS_YES
    if yes == 0:
        return SettlementCase.UNANIMOUS_NO
    if yes >= no:
        return SettlementCase.MAJORITY_YES
    return SettlementCase.MAJORITY_NO


@dataclass
class Account:
    participant_id: str
    balance: int = 0
    staked: int = 0
    has_staked: bool = False
    excluded: bool = False


@dataclass(frozen=True)
class Vote:
    validator: str
    verdict: bool


@dataclass(frozen=True)
class FinalizationOutcome:
    """Settled per-role deltas for one encounter.

    Positive entries are realized credits. Negative entries are the assessed
    per-party slash; collection is clamped at each party's stake and the total
    uncollected amount is reported in slash_shortfall. learner_refund and
    treasury_remainder are realized. The identity

        reward + assessed slashes - shortfall
            == refund + positive payouts + treasury_remainder

    holds exactly for every outcome.
    """

    case: SettlementCase
    yes_votes: int
    no_votes: int
    neighbor_delta: int
    yes_voter_delta_each: int
    no_voter_delta_each: int
    learner_refund: int
    treasury_remainder: int
    slash_shortfall: int


@dataclass
class EncounterRecord:
    encounter_id: int
    learner: str
    neighbor: str
    reward: int
    state: EncounterState
    opened_block: int
    voting_deadline: int
    escrow: int = 0
    digest_from_learner: str | None = None
    digest_from_neighbor: str | None = None
    validators: tuple[str, ...] = ()
    votes: list[Vote] = field(default_factory=list)
    outcome: FinalizationOutcome | None = None
    was_incomplete: bool = False

    def tally(self) -> tuple[int, int]:
        yes = sum(1 for v in self.votes if v.verdict)
        return yes, len(self.votes) - yes


@dataclass(frozen=True)
class LedgerEvent:
    block: int
    encounter_id: int | None
    event: str
    actor: str
    amount: int
    state_after: str


EVENT_LOG_COLUMNS = ("block", "encounter_id", "event", "actor", "amount", "state_after")


# Static per-interaction gas figures for the reference contract deployment.
GAS_TABLE: dict[tuple[str, str], int] = {
    ("pre_training_check", "learner"): 43_919,
    ("learning_complete", "neighbor"): 96_172,
    ("learning_complete", "learner"): 46_921,
    ("vote", "validator"): 78_869,
    ("finalize", "any"): 191_344,
}


def gas_cost(step: str, role: str) -> int:
    """Gas for one billed contract interaction."""
    try:
        return GAS_TABLE[(step, role)]
    except KeyError:
        raise LedgerError(f"no gas figure for step {step!r} in role {role!r}") from None


def gas_total_per_encounter(votes: int) -> int:
    """Total gas for one full encounter with the given number of votes cast."""
    if votes < 0:
        raise AmountError("vote count must be non-negative")
    fixed = (
        GAS_TABLE[("pre_training_check", "learner")]
        + GAS_TABLE[("learning_complete", "neighbor")]
        + GAS_TABLE[("learning_complete", "learner")]
        + GAS_TABLE[("finalize", "any")]
    )
    return fixed + votes * GAS_TABLE[("vote", "validator")]


def _check_digest(digest: str) -> str:
    if not isinstance(digest, str) or len(digest) != 32:
        raise AmountError(f"digest must be a 32-char hex string, got {digest!r}")
    try:
        int(digest, 16)
    except ValueError:
        raise AmountError(f"digest must be hexadecimal, got {digest!r}") from None
    return digest.lower()


class TokenLedger:
    """Single-owner state machine over accounts, encounters, and the clock.

    Operations that accept ``now`` treat it as the caller's block height: when
    given, the clock advances to it first (heights never go backwards), then
    the operation's own preconditions are checked. Leaving it None uses the
    current height.
    """

    def __init__(self, config: ContractConfig | None = None):
        self.config = config if config is not None else ContractConfig()
        self.accounts: dict[str, Account] = {}
        self.encounters: dict[int, EncounterRecord] = {}
        self.treasury = 0
        self.height = 0
        self.events: list[LedgerEvent] = []
        self._next_id = 1
        self._minted = 0

    # -- clock and bookkeeping ------------------------------------------------

    def advance_block(self, n: int) -> int:
        if n < 0:
            raise ClockError("cannot advance by a negative block count")
        self.height += n
        return self.height

    def _at(self, now: int | None) -> int:
        if now is None:
            return self.height
        if now < self.height:
            raise ClockError(f"block {now} is in the past (height {self.height})")
        self.height = now
        return now

    def _emit(self, encounter_id: int | None, event: str, actor: str, amount: int, state_after: str) -> None:
        self.events.append(LedgerEvent(self.height, encounter_id, event, actor, amount, state_after))

    def _record(self, encounter_id: int) -> EncounterRecord:
        try:
            return self.encounters[encounter_id]
        except KeyError:
            raise UnknownEncounterError(f"no encounter {encounter_id}") from None

    @property
    def minted(self) -> int:
        """Total ever created through exchange; the conservation target."""
        return self._minted

    def total_tokens(self) -> int:
        """Sum of balances, stakes, open escrow, and treasury. Equals minted."""
        held = sum(a.balance + a.staked for a in self.accounts.values())
        escrow = sum(r.escrow for r in self.encounters.values())
        return held + escrow + self.treasury

    # -- accounts -------------------------------------------------------------

    def exchange_tokens(self, participant: str, amount: int) -> Account:
        """Mint tokens into a balance. The only operation that creates value."""
        if amount <= 0:
            raise AmountError(f"exchange amount must be positive, got {amount}")
        acct = self.accounts.get(participant)
        if acct is None:
            acct = self.accounts[participant] = Account(participant)
        acct.balance += amount
        self._minted += amount
        self._emit(None, "exchange", participant, amount, "")
        return acct

    def stake(self, participant: str, amount: int) -> Account:
        if amount <= 0:
            raise AmountError(f"stake amount must be positive, got {amount}")
        acct = self.accounts.get(participant)
        if acct is None or acct.balance < amount:
            have = 0 if acct is None else acct.balance
            raise InsufficientBalanceError(
                f"{participant} cannot stake {amount} (balance {have})"
            )
        acct.balance -= amount
        acct.staked += amount
        acct.has_staked = True
        self._emit(None, "stake", participant, amount, "")
        self._refresh_exclusion(acct)
        return acct

    def is_eligible(self, participant: str) -> bool:
        acct = self.accounts.get(participant)
        if acct is None:
            return False
        return acct.staked >= self.config.stake_threshold and not acct.excluded

    def eligible_participants(self) -> list[str]:
        return sorted(p for p in self.accounts if self.is_eligible(p))

    def _refresh_exclusion(self, acct: Account) -> None:
        # Excluded is derived state: ever staked, and currently under threshold.
        now_excluded = acct.has_staked and acct.staked < self.config.stake_threshold
        if now_excluded and not acct.excluded:
            acct.excluded = True
            self._emit(None, "excluded", acct.participant_id, acct.staked, "")
        elif not now_excluded and acct.excluded:
            acct.excluded = False
            self._emit(None, "requalified", acct.participant_id, acct.staked, "")

    # -- encounter lifecycle --------------------------------------------------

    def open_encounter(
        self,
        learner: str,
        neighbor: str,
        reward: int | None = None,
        now: int | None = None,
    ) -> int:
        """Escrow the learner's reward and open a record in state Prepaid.

        An ineligible neighbor rejects the collaboration outright: no record
        is created. An insolvent learner leaves an Aborted record (the failed
        attempt is part of both parties' histories) and raises.
        """
        at = self._at(now)
        r = self.config.default_reward if reward is None else reward
        if r <= 0:
            raise AmountError(f"reward must be positive, got {r}")
        if learner == neighbor:
            raise EligibilityError("learner and neighbor must be distinct")
        if not self.is_eligible(neighbor):
            raise EligibilityError(f"neighbor {neighbor} is not eligible")
        eid = self._next_id
        self._next_id += 1
        deadline = at + self.config.max_voting_blocks
        acct = self.accounts.get(learner)
        if acct is None or acct.balance < r:
            rec = EncounterRecord(eid, learner, neighbor, r, EncounterState.ABORTED, at, deadline)
            self.encounters[eid] = rec
            self._emit(eid, "abort", learner, r, rec.state.value)
            raise InsufficientBalanceError(
                f"{learner} cannot escrow {r}", encounter_id=eid
            )
        acct.balance -= r
        rec = EncounterRecord(
            eid, learner, neighbor, r, EncounterState.PREPAID, at, deadline, escrow=r
        )
        self.encounters[eid] = rec
        self._emit(eid, "escrow", learner, r, rec.state.value)
        return eid

    def check_prepayment(self, encounter_id: int) -> bool:
        rec = self.encounters.get(encounter_id)
        return (
            rec is not None
            and rec.state is EncounterState.PREPAID
            and rec.escrow == rec.reward
        )

    def report_complete(
        self,
        encounter_id: int,
        reporter: str,
        digest: str,
        now: int | None = None,
    ) -> EncounterState:
        """Record one party's result digest; both matching moves the record on.

        Equal digests from both parties advance to CompleteReported; unequal
        digests mark the encounter Incomplete.
        """
        rec = self._record(encounter_id)
        self._at(now)
        if rec.state not in (EncounterState.PREPAID, EncounterState.COMPLETE_REPORTED):
            raise EncounterStateError(
                f"encounter {encounter_id} is {rec.state.value}, cannot report"
            )
        digest = _check_digest(digest)
        if reporter == rec.learner:
            if rec.digest_from_learner is not None:
                raise EncounterStateError(f"{reporter} already reported")
            rec.digest_from_learner = digest
        elif reporter == rec.neighbor:
            if rec.digest_from_neighbor is not None:
                raise EncounterStateError(f"{reporter} already reported")
            rec.digest_from_neighbor = digest
        else:
            raise EligibilityError(f"{reporter} is not a party to encounter {encounter_id}")
        self._emit(encounter_id, "digest", reporter, 0, rec.state.value)
        if rec.digest_from_learner is not None and rec.digest_from_neighbor is not None:
            if rec.digest_from_learner == rec.digest_from_neighbor:
                rec.state = EncounterState.COMPLETE_REPORTED
                self._emit(encounter_id, "complete", reporter, 0, rec.state.value)
            else:
                rec.state = EncounterState.INCOMPLETE
                self._emit(encounter_id, "mismatch", reporter, 0, rec.state.value)
        return rec.state

    def resolve_incomplete(
        self,
        encounter_id: int,
        *,
        abandoned: bool = False,
        now: int | None = None,
    ) -> FinalizationOutcome:
        """Settle a failed encounter: a fixed fraction of the prepayment goes
        to the neighbor, the rest refunds the learner.

        Applies to records marked Incomplete, to stale Prepaid records past
        their deadline, and (with abandoned=True) to records a party walked
        away from before validation was registered.
        """
        rec = self._record(encounter_id)
        at = self._at(now)
        if rec.state is EncounterState.INCOMPLETE:
            permitted = True
        elif rec.state is EncounterState.PREPAID:
            permitted = abandoned or at > rec.voting_deadline
        elif rec.state is EncounterState.COMPLETE_REPORTED:
            permitted = abandoned
        else:
            permitted = False
        if not permitted:
            raise EncounterStateError(
                f"encounter {encounter_id} is {rec.state.value}, cannot resolve as incomplete"
            )
        reward = rec.escrow
        neighbor_credit = math.floor(self.config.incomplete_share * reward)
        refund = reward - neighbor_credit
        rec.escrow = 0
        rec.state = EncounterState.FINALIZED
        rec.was_incomplete = True
        self._credit(rec.neighbor, neighbor_credit, encounter_id, "payout")
        self._credit(rec.learner, refund, encounter_id, "refund")
        outcome = FinalizationOutcome(
            case=SettlementCase.INCOMPLETE,
            yes_votes=0,
            no_votes=0,
            neighbor_delta=neighbor_credit,
            yes_voter_delta_each=0,
            no_voter_delta_each=0,
            learner_refund=refund,
            treasury_remainder=0,
            slash_shortfall=0,
        )
        rec.outcome = outcome
        self._emit(encounter_id, "finalized", "", reward, rec.state.value)
        return outcome

    def register_validation(
        self,
        encounter_id: int,
        validators: list[str] | tuple[str, ...],
        now: int | None = None,
    ) -> EncounterState:
        rec = self._record(encounter_id)
        at = self._at(now)
        if rec.state is not EncounterState.COMPLETE_REPORTED:
            raise EncounterStateError(
                f"encounter {encounter_id} is {rec.state.value}, cannot register validation"
            )
        if at > rec.voting_deadline:
            raise EncounterStateError(f"encounter {encounter_id} voting window closed")
        vids = tuple(validators)
        if not vids:
            raise EligibilityError("at least one validator required")
        if len(set(vids)) != len(vids):
            raise EligibilityError("duplicate validator in registration")
        for v in vids:
            if v in (rec.learner, rec.neighbor):
                raise EligibilityError(f"{v} is a party to the encounter, cannot validate")
            if not self.is_eligible(v):
                raise EligibilityError(f"validator {v} is not eligible")
        rec.validators = vids
        rec.state = EncounterState.VALIDATING
        for v in vids:
            self._emit(encounter_id, "validator", v, 0, rec.state.value)
        return rec.state

    def cast_vote(
        self,
        encounter_id: int,
        validator: str,
        verdict: bool,
        now: int | None = None,
    ) -> tuple[int, int]:
        rec = self._record(encounter_id)
        at = self._at(now)
        if rec.state is not EncounterState.VALIDATING:
            raise EncounterStateError(
                f"encounter {encounter_id} is {rec.state.value}, not accepting votes"
            )
        if validator not in rec.validators:
            raise VotingError(f"{validator} is not a registered validator")
        if any(v.validator == validator for v in rec.votes):
            raise VotingError(f"{validator} already voted")
        if at > rec.voting_deadline:
            raise VotingError(f"voting closed at block {rec.voting_deadline}")
        if not self.is_eligible(validator):
            raise VotingError(f"{validator} lost eligibility before voting")
        verdict = bool(verdict)
        rec.votes.append(Vote(validator, verdict))
        self._emit(
            encounter_id,
            "vote_yes" if verdict else "vote_no",
            validator,
            0,
            rec.state.value,
        )
        return rec.tally()

    def finalize(self, encounter_id: int, now: int | None = None) -> FinalizationOutcome:
        """Settle a voted encounter. Callable by anyone once the tally reaches
        the voting threshold or the window has closed. Rejected otherwise and
        on any repeat call."""
        rec = self._record(encounter_id)
        at = self._at(now)
        if rec.state is not EncounterState.VALIDATING:
            raise EncounterStateError(
                f"encounter {encounter_id} is {rec.state.value}, cannot finalize"
            )
        yes, no = rec.tally()
        if yes + no < self.config.voting_threshold and at <= rec.voting_deadline:
            raise EncounterStateError(
                f"encounter {encounter_id} has {yes + no} votes, "
                f"needs {self.config.voting_threshold} or a closed window"
            )
        outcome = self._settle(rec)
        rec.outcome = outcome
        self._emit(encounter_id, "finalized", "", rec.reward, rec.state.value)
        return outcome

    # -- settlement -----------------------------------------------------------

    def _credit(self, participant: str, amount: int, eid: int, event: str) -> None:
        if amount:
            self.accounts[participant].balance += amount
            self._emit(eid, event, participant, amount, EncounterState.FINALIZED.value)

    def _slash(self, participant: str, assessed: int, eid: int) -> int:
        """Remove up to the assessed amount from stake; returns the collected part."""
        acct = self.accounts[participant]
        taken = min(assessed, acct.staked)
        if taken:
            acct.staked -= taken
            self._emit(eid, "slash", participant, taken, EncounterState.FINALIZED.value)
        self._refresh_exclusion(acct)
        return taken

    def _settle(self, rec: EncounterRecord) -> FinalizationOutcome:
        yes_voters = [v.validator for v in rec.votes if v.verdict]
        no_voters = [v.validator for v in rec.votes if not v.verdict]
        n_t, n_f = len(yes_voters), len(no_voters)
        case = classify_votes(n_t, n_f)
        r = rec.escrow
        nb_share = self.config.neighbor_share
        val_share = self.config.validator_share
        eid = rec.encounter_id

        rec.escrow = 0
        rec.state = EncounterState.FINALIZED

        neighbor_delta = 0
        yes_each = 0
        no_each = 0
        refund = 0
        shortfall = 0
        treasury_part = 0

        if case is SettlementCase.NO_VOTES:
            # Nobody voted: the full reward goes to the neighbor.
            neighbor_delta = r
            self._credit(rec.neighbor, r, eid, "payout")
        elif case is SettlementCase.UNANIMOUS_YES:
            neighbor_delta = math.floor(nb_share * r)
            yes_each = math.floor(val_share * r / n_t)
            self._credit(rec.neighbor, neighbor_delta, eid, "payout")
            for v in yes_voters:
                self._credit(v, yes_each, eid, "payout")
            treasury_part = r - neighbor_delta - n_t * yes_each
        elif case is SettlementCase.UNANIMOUS_NO:
            refund = r
            self._credit(rec.learner, refund, eid, "refund")
            collected = self._slash(rec.neighbor, r, eid)
            neighbor_delta = -r
            shortfall = r - collected
            no_each = collected // n_f
            for v in no_voters:
                self._credit(v, no_each, eid, "payout")
            treasury_part = collected - n_f * no_each
        elif case is SettlementCase.MAJORITY_YES:
            neighbor_delta = math.floor(nb_share * r)
            self._credit(rec.neighbor, neighbor_delta, eid, "payout")
            # Slash per no-voter rounds toward minus infinity.
            slash_each = -math.floor(-val_share * r / (n_t + n_f))
            collected = 0
            for v in no_voters:
                collected += self._slash(v, slash_each, eid)
            no_each = -slash_each
            shortfall = n_f * slash_each - collected
            pool = val_share * r + collected
            yes_each = math.floor(pool / n_t)
            for v in yes_voters:
                self._credit(v, yes_each, eid, "payout")
            treasury_part = (r - neighbor_delta + collected) - n_t * yes_each
        else:  # MAJORITY_NO
            refund = r
            self._credit(rec.learner, refund, eid, "refund")
            collected = self._slash(rec.neighbor, r, eid)
            neighbor_delta = -r
            slash_each = -math.floor(Fraction(-r, n_t + n_f))
            for v in yes_voters:
                collected += self._slash(v, slash_each, eid)
            yes_each = -slash_each
            shortfall = (r + n_t * slash_each) - collected
            no_each = collected // n_f
            for v in no_voters:
                self._credit(v, no_each, eid, "payout")
            treasury_part = collected - n_f * no_each

        if treasury_part:
            self.treasury += treasury_part
            self._emit(eid, "treasury", "", treasury_part, EncounterState.FINALIZED.value)

        return FinalizationOutcome(
            case=case,
            yes_votes=n_t,
            no_votes=n_f,
            neighbor_delta=neighbor_delta,
            yes_voter_delta_each=yes_each,
            no_voter_delta_each=no_each,
            learner_refund=refund,
            treasury_remainder=treasury_part,
            slash_shortfall=shortfall,
        )

    # -- queries and export ---------------------------------------------------

    def query_history(self, participant: str) -> list[tuple[int, str, str]]:
        """Chronological (encounter_id, role, state label) for every encounter
        the participant took part in. Resolved failures stay tagged Incomplete."""
        out = []
        for eid in sorted(self.encounters):
            rec = self.encounters[eid]
            if participant == rec.learner:
                role = "learner"
            elif participant == rec.neighbor:
                role = "neighbor"
            elif participant in rec.validators:
                role = "validator"
            else:
                continue
            label = "Incomplete" if rec.was_incomplete else rec.state.value
            out.append((eid, role, label))
        return out

    def event_rows(self) -> list[tuple]:
        rows = []
        for ev in self.events:
            eid = "" if ev.encounter_id is None else ev.encounter_id
            rows.append((ev.block, eid, ev.event, ev.actor, ev.amount, ev.state_after))
        return rows

    def write_event_log(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(EVENT_LOG_COLUMNS)
            writer.writerows(self.event_rows())
