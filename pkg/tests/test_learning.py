"""Data generation, partitioning, SGD training, merging, and the canonical
model serialization/digest."""

from __future__ import annotations

import hashlib

import numpy as np
import pytest

from ledgerlearn import (
    Dataset,
    ModelParams,
    PartitionSpec,
    TrainConfig,
    digest,
    digest_parts,
    deserialize_model,
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
    split_by_class,
    train,
)
from ledgerlearn.learning import MODEL_MAGIC, loss_and_gradient


def row_set(ds: Dataset) -> set[tuple]:
    return {
        tuple(f) + (int(l),) for f, l in zip(ds.features.tolist(), ds.labels.tolist())
    }


# -- synthetic data -----------------------------------------------------------


def test_generate_shapes_and_balance():
    ds = generate_synthetic(10, 16, 100, 0.3, seed=7)
    assert ds.features.shape == (1000, 16)
    assert ds.features.dtype == np.float32
    assert ds.labels.shape == (1000,)
    assert np.bincount(ds.labels, minlength=10).tolist() == [100] * 10


def test_generate_is_deterministic():
    a = generate_synthetic(10, 16, 100, 0.3, seed=7)
    b = generate_synthetic(10, 16, 100, 0.3, seed=7)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()
    c = generate_synthetic(10, 16, 100, 0.3, seed=8)
    assert a.features.tobytes() != c.features.tobytes()


def test_tight_clusters_are_nearest_mean_separable():
    # With spread ~ 0 every sample sits on its class mean, so classifying by
    # nearest empirical mean must be perfect.
    ds = generate_synthetic(10, 16, 50, 1e-6, seed=3)
    means = np.stack([ds.features[ds.labels == c].mean(axis=0) for c in range(10)])
    d2 = ((ds.features[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    assert (d2.argmin(axis=1) == ds.labels).all()


def test_generate_rejects_bad_counts():
    with pytest.raises(ValueError):
        generate_synthetic(0, 16, 100, 0.3, seed=1)
    with pytest.raises(ValueError):
        generate_synthetic(10, 16, 100, -0.1, seed=1)


def test_split_by_class_counts():
    ds = generate_synthetic(4, 8, 30, 0.2, seed=5)
    head, rest = split_by_class(ds, 10)
    assert np.bincount(head.labels, minlength=4).tolist() == [10] * 4
    assert np.bincount(rest.labels, minlength=4).tolist() == [20] * 4
    assert row_set(head) | row_set(rest) == row_set(ds)
    with pytest.raises(ValueError):
        split_by_class(ds, 31)


# -- partitioning -------------------------------------------------------------


def test_iid_partition_is_a_disjoint_cover():
    ds = generate_synthetic(10, 16, 100, 0.3, seed=11)
    shares = partition(ds, PartitionSpec("iid", 50), seed=2)
    assert len(shares) == 50
    assert all(len(s) == 20 for s in shares)
    union: set[tuple] = set()
    for s in shares:
        rows = row_set(s)
        assert not (union & rows)
        union |= rows
    assert union == row_set(ds)


def test_noniid_partition_two_classes_each():
    ds = generate_synthetic(10, 16, 100, 0.3, seed=11)
    shares = partition(ds, PartitionSpec("noniid", 10, classes_per_node=2), seed=2)
    sizes = {len(s) for s in shares}
    for s in shares:
        assert len(np.unique(s.labels)) == 2
    union: set[tuple] = set()
    for s in shares:
        rows = row_set(s)
        assert not (union & rows)
        union |= rows
    assert union == row_set(ds)
    assert max(sizes) - min(sizes) <= 2  # near-even shares


def test_noniid_infeasible_rejected():
    ds = generate_synthetic(10, 16, 20, 0.3, seed=1)
    with pytest.raises(ValueError):
        partition(ds, PartitionSpec("noniid", 5, classes_per_node=11), seed=0)
    with pytest.raises(ValueError):
        partition(ds, PartitionSpec("iid", 500), seed=0)


def test_partition_deterministic():
    ds = generate_synthetic(10, 16, 100, 0.3, seed=11)
    a = partition(ds, PartitionSpec("noniid", 10), seed=4)
    b = partition(ds, PartitionSpec("noniid", 10), seed=4)
    for x, y in zip(a, b):
        assert x.features.tobytes() == y.features.tobytes()
        assert x.labels.tobytes() == y.labels.tobytes()


# -- training and evaluation --------------------------------------------------


def test_param_count_linear_and_hidden():
    assert param_count((16, 10)) == 16 * 10 + 10
    assert param_count((16, 32, 10)) == 16 * 32 + 32 + 32 * 10 + 10


def test_evaluate_constant_argmax_dataset():
    # Zero weights, one biased logit: argmax is constant at class 2, so a
    # dataset labeled all-2 scores perfectly.
    arch = (4, 3)
    params = np.zeros(param_count(arch), dtype=np.float32)
    model = ModelParams(arch, params)
    biased = np.array(model.params)
    biased[4 * 3 + 2] = 1.0  # bias of class 2
    model = ModelParams(arch, biased)
    feats = np.random.default_rng(0).normal(size=(20, 4)).astype(np.float32)
    ds = Dataset(feats, np.full(20, 2, dtype=np.int64), 3)
    report = evaluate(model, ds)
    assert report.accuracy == 1.0
    assert report.n_correct == report.n_samples == 20


def test_train_improves_separable_blobs():
    ds = generate_synthetic(2, 8, 100, 0.05, seed=9)
    model = init_model((8, 2), seed=1)
    before = evaluate(model, ds)
    after_model = train(model, ds, TrainConfig(steps=500, seed=5))
    after = evaluate(after_model, ds)
    assert after.n_correct > before.n_correct
    assert after.accuracy > 0.95


def test_train_deterministic_and_pure():
    ds = generate_synthetic(3, 6, 40, 0.2, seed=2)
    model = init_model((6, 3), seed=0)
    frozen = model.params.tobytes()
    a = train(model, ds, TrainConfig(seed=77))
    b = train(model, ds, TrainConfig(seed=77))
    assert a.params.tobytes() == b.params.tobytes()
    assert model.params.tobytes() == frozen  # input untouched
    c = train(model, ds, TrainConfig(seed=78))
    assert a.params.tobytes() != c.params.tobytes()


def test_train_rejects_mismatch_and_empty():
    ds = generate_synthetic(3, 6, 10, 0.2, seed=2)
    wrong = init_model((5, 3), seed=0)
    with pytest.raises(ValueError):
        train(wrong, ds, TrainConfig())
    with pytest.raises(ValueError):
        evaluate(wrong, ds)
    empty = Dataset(np.zeros((0, 6), np.float32), np.zeros(0, np.int64), 3)
    with pytest.raises(ValueError):
        train(init_model((6, 3), seed=0), empty, TrainConfig())


def test_evaluate_counts_exactly():
    ds = generate_synthetic(4, 6, 25, 0.4, seed=6)
    report = evaluate(init_model((6, 4), seed=3), ds)
    assert report.n_samples == 100
    assert 0 <= report.n_correct <= 100
    assert report.accuracy * report.n_samples == pytest.approx(report.n_correct)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(12)
    for arch in ((5, 3), (4, 6, 3)):
        flat = 0.3 * rng.standard_normal(param_count(arch))
        feats = rng.normal(size=(7, arch[0])).astype(np.float32)
        labels = rng.integers(0, arch[-1], size=7)
        _, grad = loss_and_gradient(arch, flat, feats, labels)
        eps = 1e-5
        for k in rng.choice(len(flat), size=12, replace=False):
            up = flat.copy()
            up[k] += eps
            down = flat.copy()
            down[k] -= eps
            lo, _ = loss_and_gradient(arch, down, feats, labels)
            hi, _ = loss_and_gradient(arch, up, feats, labels)
            numeric = (hi - lo) / (2 * eps)
            denom = max(abs(numeric), abs(grad[k]), 1e-8)
            assert abs(numeric - grad[k]) / denom < 1e-3, (arch, k)


# -- merging ------------------------------------------------------------------


def test_merge_is_elementwise_mean():
    a = ModelParams((1, 2), np.array([0.0, 2.0, 0.0, 0.0], dtype=np.float32))
    b = ModelParams((1, 2), np.array([2.0, 0.0, 0.0, 0.0], dtype=np.float32))
    assert merge(a, b).params.tolist() == [1.0, 1.0, 0.0, 0.0]


def test_merge_identity_and_commutativity():
    m = init_model((6, 4), seed=8)
    other = init_model((6, 4), seed=9)
    assert merge(m, m).params.tobytes() == m.params.tobytes()
    assert merge(m, other).params.tobytes() == merge(other, m).params.tobytes()


def test_merge_arch_mismatch_rejected():
    with pytest.raises(ValueError):
        merge(init_model((6, 4), seed=0), init_model((6, 5), seed=0))


# -- attacker transforms ------------------------------------------------------


def test_two_class_flip_is_complement():
    ds = generate_synthetic(2, 4, 20, 0.2, seed=1)
    flipped = flip_labels(ds, seed=42)
    assert (flipped.labels == 1 - ds.labels).all()
    assert flipped.features is ds.features


def test_flip_is_a_derangement_and_invertible():
    ds = generate_synthetic(10, 4, 30, 0.2, seed=1)
    mapping = label_derangement(10, seed=42)
    flipped = flip_labels(ds, seed=42)
    assert (flipped.labels != ds.labels).all()
    inverse = np.argsort(mapping)
    assert (inverse[flipped.labels] == ds.labels).all()
    assert (label_derangement(10, seed=42) == mapping).all()


def test_random_params_like_properties():
    m = init_model((6, 4), seed=0)
    junk = random_params_like(m, seed=5)
    assert junk.arch == m.arch
    assert len(junk.params) == len(m.params)
    assert junk.params.tobytes() != m.params.tobytes()
    assert random_params_like(m, seed=5).params.tobytes() == junk.params.tobytes()


# -- serialization and digest -------------------------------------------------


def test_digest_of_empty_parts_is_md5_of_empty():
    assert digest_parts((), np.zeros(0, np.float32)) == hashlib.md5(b"").hexdigest()
    assert digest_parts((), np.zeros(0, np.float32)) == "d41d8cd98f00b204e9800998ecf8427e"


def test_equal_models_equal_digest_one_bit_differs():
    m = init_model((6, 4), seed=0)
    same = ModelParams(m.arch, np.array(m.params))
    assert digest(m) == digest(same)
    raw = np.array(m.params)
    raw[0] = np.float32(np.nextafter(raw[0], np.float32(1e9)))
    assert serialize_model(ModelParams(m.arch, raw)) != serialize_model(m)
    assert digest(ModelParams(m.arch, raw)) != digest(m)


def test_serialize_roundtrip_bit_exact(tmp_path):
    m = init_model((16, 32, 10), seed=13)
    blob = serialize_model(m)
    assert blob.startswith(MODEL_MAGIC)
    back = deserialize_model(blob)
    assert back.arch == m.arch
    assert back.params.tobytes() == m.params.tobytes()

    path = tmp_path / "model.bin"
    save_model(m, path)
    loaded = load_model(path)
    assert loaded.arch == m.arch
    assert loaded.params.tobytes() == m.params.tobytes()
    assert digest(loaded) == digest(m)


def test_deserialize_rejects_garbage():
    with pytest.raises(ValueError):
        deserialize_model(b"not a model")


def test_model_params_validates_length():
    with pytest.raises(ValueError):
        ModelParams((4, 3), np.zeros(5, dtype=np.float32))
