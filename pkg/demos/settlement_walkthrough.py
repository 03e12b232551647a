"""
One encounter through the ledger, step by step
==============================================

Five accounts, one reward, every vote tally. The first half walks a single
encounter by hand; the second half replays the same reward under each tally
so the payout cases can be read side by side.
"""

from ledgerlearn import TokenLedger, gas_total_per_encounter

REWARD = 100
DIGEST = "c59548c3c576228486a1f0037eb16a1b"  # both parties report the same bytes


def banner(text):
    print()
    print(text)
    print("-" * len(text))


led = TokenLedger()

banner("funding and staking")
for name in ("ada", "ben", "v0", "v1", "v2"):
    led.exchange_tokens(name, 1_000)
    led.stake(name, 200)
    acct = led.accounts[name]
    print(f"  {name:>3}  balance {acct.balance:>4}  staked {acct.staked}")
print("eligible:", ", ".join(led.eligible_participants()))

banner("escrow and the training handshake")
eid = led.open_encounter("ada", "ben", REWARD)
print(f"ada prepaid {REWARD} into escrow, balance now {led.accounts['ada'].balance}")
print("prepayment check:", led.check_prepayment(eid))
led.report_complete(eid, "ben", DIGEST)
led.report_complete(eid, "ada", DIGEST)
print("both digests agree, validation can start")

banner("panel, votes, finalization")
led.register_validation(eid, ["v0", "v1", "v2"])
led.cast_vote(eid, "v0", True)
led.cast_vote(eid, "v1", True)
led.cast_vote(eid, "v2", False)
out = led.finalize(eid)
print(f"tally 2 yes / 1 no -> {out.case.name}")
print(f"  ben (neighbor)   {out.neighbor_delta:+}")
print(f"  each yes voter   {out.yes_voter_delta_each:+}")
print(f"  the no voter     {out.no_voter_delta_each:+}")
print(f"  treasury keeps   {out.treasury_remainder}")
print("tokens conserved:", led.total_tokens() == led.minted)
print(f"on-chain cost of the whole exchange: {gas_total_per_encounter(3)} gas")


def replay(n_yes, n_no):
    """Fresh ledger, same reward, a chosen tally. Returns the outcome."""
    led = TokenLedger()
    voters = [f"v{i}" for i in range(max(n_yes + n_no, 1))]
    for name in ["ada", "ben"] + voters:
        led.exchange_tokens(name, 1_000)
        led.stake(name, 300)
    eid = led.open_encounter("ada", "ben", REWARD)
    led.report_complete(eid, "ben", DIGEST)
    led.report_complete(eid, "ada", DIGEST)
    led.register_validation(eid, voters)
    for v in voters[:n_yes]:
        led.cast_vote(eid, v, True)
    for v in voters[n_yes : n_yes + n_no]:
        led.cast_vote(eid, v, False)
    if n_yes + n_no >= led.config.voting_threshold:
        return led.finalize(eid)
    # below the vote threshold the encounter must sit out the full window
    return led.finalize(eid, now=led.height + led.config.max_voting_blocks + 1)


banner(f"the same {REWARD}-token reward under every tally")
print(f"{'yes':>4} {'no':>3}  {'case':<14} {'neighbor':>9} {'yes each':>9} {'no each':>8} {'refund':>7}")
for n_yes, n_no in [(3, 0), (2, 1), (1, 2), (0, 3), (0, 0)]:
    out = replay(n_yes, n_no)
    print(
        f"{n_yes:>4} {n_no:>3}  {out.case.name:<14} {out.neighbor_delta:>+9} "
        f"{out.yes_voter_delta_each:>+9} {out.no_voter_delta_each:>+8} {out.learner_refund:>7}"
    )
print()
print("ties side with acceptance; a silent panel forfeits the reward to the")
print("neighbor; a rejection refunds the learner and slashes the neighbor.")
