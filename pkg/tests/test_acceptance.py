"""Release gate: eight end-to-end criteria, one verdict line each.

Every check asserts its stated tolerance and runtime budget directly; the
conftest summary hook replays the verdict lines after the run. Nothing here
is redundant with the per-module suites on purpose: these are the checks a
release must pass as a whole, at full scale, in one place.
"""

from __future__ import annotations

import random
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from ledgerlearn import (
    GAS_TABLE,
    AttackerMix,
    Behavior,
    ContractConfig,
    EncounterSettings,
    InsufficientBalanceError,
    Participant,
    PartitionSpec,
    SettlementCase,
    SimConfig,
    TaskConfig,
    TokenLedger,
    TrainConfig,
    attack_study,
    gas_total_per_encounter,
    generate_synthetic,
    gossip_encounter,
    init_model,
    oppcl_encounter,
    partition,
    run,
    serialize_model,
    split_by_class,
    train,
    voting_sweep,
)
from ledgerlearn.cli import main
from settlement_oracle import (
    GRID_REWARDS,
    GRID_SHARES,
    GRID_TALLIES,
    drive_encounter,
    oracle_settle,
    outcome_conserves,
)

REJECTED = (SettlementCase.UNANIMOUS_NO, SettlementCase.MAJORITY_NO)


def verdict(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def token_world(behaviors, *, seed=100):
    """Funded population holding IID shares of one task and a shared,
    solidly trained starting model."""
    n = len(behaviors)
    full = generate_synthetic(4, 8, per_class=50 + 10 * n, spread=0.3, seed=seed)
    holdout, rest = split_by_class(full, 50)
    shares = partition(rest, PartitionSpec("iid", n), seed=seed)
    base = train(init_model((8, 4), seed=seed), rest, TrainConfig(steps=100, seed=seed))
    led = TokenLedger()
    people = {}
    for i, behavior in enumerate(behaviors):
        pid = f"p{i}"
        people[pid] = Participant(pid, shares[i], base.copy(), behavior)
        led.exchange_tokens(pid, 5_000)
        led.stake(pid, 300)
    return led, people, holdout


def keep_solvent(led: TokenLedger) -> None:
    """Top everyone back up so slashes never starve the next encounter."""
    for pid in list(led.accounts):
        acct = led.accounts[pid]
        if acct.balance < 500:
            led.exchange_tokens(pid, 5_000)
        if acct.staked < 300:
            led.stake(pid, 300 - acct.staked)


def test_criterion_1_settlement_matches_rational_oracle():
    start = time.perf_counter()
    bad = []
    for n_t, n_f in GRID_TALLIES:
        for r in GRID_REWARDS:
            for p_n in GRID_SHARES:
                want = oracle_settle(n_t, n_f, r, p_n)
                led, out, _ = drive_encounter(n_t, n_f, r, p_n)
                agrees = (
                    out.case is want.case
                    and out.neighbor_delta == want.neighbor
                    and out.yes_voter_delta_each == want.yes_each
                    and out.no_voter_delta_each == want.no_each
                    and out.learner_refund == want.refund
                    and out.treasury_remainder == want.treasury
                    and out.slash_shortfall == 0
                    and outcome_conserves(out, r)
                    and led.total_tokens() == led.minted
                )
                if not agrees:
                    bad.append((n_t, n_f, r, p_n))
    elapsed = time.perf_counter() - start
    cells = len(GRID_TALLIES) * len(GRID_REWARDS) * len(GRID_SHARES)
    verdict(
        1,
        not bad and elapsed < 1.0,
        f"settlement equals the rational oracle on all {cells} grid cells "
        f"({elapsed:.2f}s < 1s){'' if not bad else f', mismatches: {bad[:3]}'}",
    )


def test_criterion_2_conservation_across_fuzzed_lifecycles():
    cfg = ContractConfig(max_voting_blocks=20)
    led = TokenLedger(cfg)
    rng = random.Random(99)
    people = [f"n{i:02d}" for i in range(12)]
    for p in people:
        led.exchange_tokens(p, 10_000)
        led.stake(p, 300)
    d_ok, d_bad = "a" * 32, "b" * 32

    trials = 10_000
    paths = {"abort": 0, "abandon": 0, "timeout": 0, "mismatch": 0, "walkaway": 0, "vote": 0}
    broke_at = None
    start = time.perf_counter()
    for trial in range(trials):
        keep_solvent(led)
        learner, neighbor = rng.sample(people, 2)
        r = rng.randint(1, 200)
        if rng.random() < 0.03:
            # unfunded learner: the open must abort without touching totals
            try:
                led.open_encounter("pauper", neighbor, r)
                broke_at = trial
                break
            except InsufficientBalanceError:
                paths["abort"] += 1
        else:
            eid = led.open_encounter(learner, neighbor, r)
            path = rng.randrange(6)
            if path == 0:
                led.resolve_incomplete(eid, abandoned=True)
                paths["abandon"] += 1
            elif path == 1:
                led.advance_block(cfg.max_voting_blocks + 1)
                led.resolve_incomplete(eid)
                paths["timeout"] += 1
            else:
                d_n = d_ok if rng.random() < 0.85 else d_bad
                led.report_complete(eid, learner, d_ok)
                led.report_complete(eid, neighbor, d_n)
                if d_n != d_ok:
                    led.resolve_incomplete(eid)
                    paths["mismatch"] += 1
                elif path == 2:
                    led.resolve_incomplete(eid, abandoned=True)
                    paths["walkaway"] += 1
                else:
                    others = [p for p in people if p not in (learner, neighbor)]
                    panel = rng.sample(others, rng.randint(1, 5))
                    led.register_validation(eid, panel)
                    n_votes = rng.randint(0, len(panel))
                    for v in rng.sample(panel, n_votes):
                        led.cast_vote(eid, v, rng.random() < 0.6)
                    if n_votes >= cfg.voting_threshold:
                        led.finalize(eid)
                    else:
                        led.finalize(eid, now=led.height + cfg.max_voting_blocks + 1)
                    paths["vote"] += 1
        if led.total_tokens() != led.minted:
            broke_at = trial
            break
    elapsed = time.perf_counter() - start

    ok = broke_at is None and elapsed < 10.0 and all(paths.values())
    verdict(
        2,
        ok,
        f"token total invariant across {trials} fuzzed lifecycles, "
        f"every path exercised ({elapsed:.1f}s < 10s)"
        + ("" if broke_at is None else f", broke at trial {broke_at}"),
    )


def test_criterion_3_gas_schedule_is_exact():
    expected = {
        ("pre_training_check", "learner"): 43_919,
        ("learning_complete", "neighbor"): 96_172,
        ("learning_complete", "learner"): 46_921,
        ("vote", "validator"): 78_869,
        ("finalize", "any"): 191_344,
    }
    ok = dict(GAS_TABLE) == expected and gas_total_per_encounter(1) == 457_225
    verdict(3, ok, "per-step gas figures and the 457225 single-vote total match")


def test_criterion_4_attack_recovery():
    def cfg(n_att: int, *, incentives: bool = True) -> SimConfig:
        return SimConfig(
            n_participants=50,
            n_rounds=60,
            algorithm="oppcl",
            partition=PartitionSpec("iid", 50),
            master_seed=1,
            attackers=AttackerMix(random_model=n_att),
            with_incentives=incentives,
        )

    clean = run(cfg(0))
    attacked = run(cfg(10))
    stakes = [
        attacked.ledger.accounts[pid].staked
        for pid, behavior in attacked.behaviors.items()
        if behavior == "random_model"
    ]
    gap = abs(clean.final_mean_honest_accuracy() - attacked.final_mean_honest_accuracy())

    curves = attack_study(cfg(0), (0, 3, 10), with_incentives=False)
    finals = {count: series[-1][1] for count, series in curves.items()}

    ok = (
        len(stakes) == 10
        and max(stakes) < attacked.config.contract.stake_threshold
        and gap < 0.05
        and finals[0] >= finals[3] >= finals[10]
    )
    verdict(
        4,
        ok,
        f"all 10 attacker stakes end below threshold (max {max(stakes)}); honest "
        f"accuracy gap {gap:.4f} < 0.05; unincentivized ordering "
        f"{finals[0]:.3f} >= {finals[3]:.3f} >= {finals[10]:.3f}",
    )


def test_criterion_5_attacks_lose_tokens_in_expectation():
    led, people, holdout = token_world([Behavior.HONEST] * 8 + [Behavior.RANDOM_MODEL])
    attacker = "p8"
    honest = [pid for pid in people if pid != attacker]
    settings = EncounterSettings(
        candidates=people, rng=np.random.default_rng(7), validator_holdout=holdout
    )

    deltas = []
    for i in range(200):
        keep_solvent(led)  # refills land outside the measured window
        learner = people[honest[i % len(honest)]]
        before = led.accounts[attacker].balance + led.accounts[attacker].staked
        oppcl_encounter(learner, people[attacker], led, settings)
        after = led.accounts[attacker].balance + led.accounts[attacker].staked
        deltas.append(after - before)

    mean = sum(deltas) / len(deltas)
    verdict(
        5,
        mean <= 0 and len(deltas) >= 200,
        f"random-model attacker mean net delta {mean:+.1f} tokens per encounter "
        f"over {len(deltas)} encounters (<= 0)",
    )


def test_criterion_6_voting_stability():
    base = SimConfig(
        n_participants=16,
        n_rounds=12,
        algorithm="oppcl",
        partition=PartitionSpec("iid", 16),
        master_seed=5,
        # noisy enough that tau = 0 genuinely rejects some contributions
        task=TaskConfig(num_classes=10, dims=16, train_per_class=200, spread=0.6),
    )
    rows = voting_sweep(base, (0.0, 0.03, 1.0), (3, 5, 7), use_holdout=False)
    by_tau: dict[float, dict[int, float]] = {}
    for tau, voters, fraction in rows:
        by_tau.setdefault(tau, {})[voters] = fraction

    spread = max(by_tau[0.03].values()) - min(by_tau[0.03].values())
    monotone = all(
        by_tau[0.0][k] <= by_tau[0.03][k] <= by_tau[1.0][k] == 1.0 for k in (3, 5, 7)
    )
    binding = min(by_tau[0.0].values()) < 1.0  # the sweep is not vacuous
    verdict(
        6,
        spread < 0.15 and monotone and binding,
        f"validated-fraction spread {spread:.3f} < 0.15 across voter counts; "
        f"fraction rises 0 -> 0.03 -> 1.0 (= 1.0 exactly) for every count",
    )


def test_criterion_7_identical_seeds_identical_artifacts(tmp_path):
    config = tmp_path / "run.toml"
    config.write_text("[run]\nparticipants = 16\nrounds = 10\nseed = 33\n")
    out = tmp_path / "out"
    argv = ["simulate", "--config", str(config), "--out", str(out)]
    names = ("accuracy.csv", "stakes.csv", "encounters.csv", "votes.csv", "summary.json")

    rc_first = main(argv)
    first = {name: (out / name).read_bytes() for name in names}
    rc_second = main(argv)
    second = {name: (out / name).read_bytes() for name in names}

    verdict(
        7,
        rc_first == rc_second == 0 and first == second,
        "two identical-seed simulate runs emit byte-identical artifacts",
    )


def test_criterion_8_rejection_always_rolls_back():
    led, people, holdout = token_world(
        [Behavior.HONEST] * 7 + [Behavior.ALWAYS_APPROVE] * 2 + [Behavior.RANDOM_MODEL]
    )
    junk = "p9"
    honest = [pid for pid, p in people.items() if p.behavior is Behavior.HONEST]
    settings = EncounterSettings(
        candidates=people,
        rng=np.random.default_rng(11),
        validator_holdout=holdout,
        # short recovery training keeps merged junk rejectable under gossip
        train=TrainConfig(steps=5),
    )

    checked = {case: 0 for case in REJECTED}
    violations = 0
    for i in range(60):
        keep_solvent(led)
        learner = people[honest[i % len(honest)]]
        before = serialize_model(learner.model)
        step = gossip_encounter if i % 2 == 0 else oppcl_encounter
        result = step(learner, people[junk], led, settings)
        if result.outcome.case in REJECTED:
            checked[result.outcome.case] += 1
            if serialize_model(learner.model) != before:
                violations += 1

    total = sum(checked.values())
    ok = violations == 0 and all(checked.values()) and total >= 20
    verdict(
        8,
        ok,
        f"learner model bit-identical after every rejection "
        f"({checked[SettlementCase.UNANIMOUS_NO]} unanimous-no, "
        f"{checked[SettlementCase.MAJORITY_NO]} majority-no finalizations)",
    )
