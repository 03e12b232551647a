"""
Tolerance and panel size versus the validated fraction
======================================================

An honest IID population on a deliberately noisy task, swept over tau and
the validator count. At tau = 0 any one-sample dip on a validator's data is
grounds for rejection; at tau = 1.0 nothing can fail. Validators judge on
their own shards here, so larger panels smooth out unlucky draws.
"""

from ledgerlearn import PartitionSpec, SimConfig, TaskConfig, voting_sweep

base = SimConfig(
    n_participants=16,
    n_rounds=12,
    algorithm="oppcl",
    partition=PartitionSpec("iid", 16),
    master_seed=5,
    # high spread keeps per-round training noisy enough for tau = 0 to bite
    task=TaskConfig(num_classes=10, dims=16, train_per_class=200, spread=0.6),
)

taus = (0.0, 0.03, 1.0)
voters = (3, 5, 7)
print(f"sweeping {len(taus)} tolerances x {len(voters)} panel sizes ...")
rows = voting_sweep(base, taus, voters, use_holdout=False)

cells = {(tau, k): frac for tau, k, frac in rows}
print()
print("validated fraction")
print(f"{'tau':>6}" + "".join(f"{k:>9}" for k in voters) + "  voters")
for tau in taus:
    print(f"{tau:>6}" + "".join(f"{cells[tau, k]:>9.3f}" for k in voters))

print()
print("reading: fraction rises with tau (looser bar) and, at a strict bar,")
print("with panel size; tau = 1.0 validates everything by construction.")
