"""Token-incentivized opportunistic learning: ledger, protocol, simulator.

The ledger escrows a learner's reward, collects result digests, runs a voting
window, and settles stakes exactly in integer base units. The protocol layer
choreographs gossip and OppCL encounters against it, and the simulation layer
replays seeded encounter traces over a synthetic population with injectable
attackers.
"""

from .ledger import (
    ACCEPTED_CASES,
    Account,
    AmountError,
    ClockError,
    ContractConfig,
    EligibilityError,
    EncounterRecord,
    EncounterState,
    EncounterStateError,
    EVENT_LOG_COLUMNS,
    FinalizationOutcome,
    GAS_TABLE,
    InsufficientBalanceError,
    LedgerError,
    LedgerEvent,
    SettlementCase,
    TokenLedger,
    UnknownEncounterError,
    Vote,
    VotingError,
    classify_votes,
    gas_cost,
    gas_total_per_encounter,
)
from .learning import (
    Dataset,
    EvalReport,
    ModelParams,
    PartitionSpec,
    TrainConfig,
    digest,
    digest_parts,
    evaluate,
    flip_labels,
    generate_synthetic,
    init_model,
    label_derangement,
    load_model,
    merge,
    param_count,
    partition,
    random_params_like,
    save_model,
    serialize_model,
    deserialize_model,
    split_by_class,
    train,
)
from .protocol import (
    Behavior,
    EncounterResult,
    EncounterSettings,
    Participant,
    SelectionError,
    ValidationRequest,
    drive_validation,
    gossip_encounter,
    oppcl_encounter,
    select_validators,
    validate,
)
from .simulation import (
    AttackerMix,
    EncounterTrace,
    RunMetrics,
    SimConfig,
    TaskConfig,
    attack_study,
    generate_trace,
    participant_ids,
    run,
    voting_sweep,
    write_outputs,
)

__version__ = "0.1.0"
