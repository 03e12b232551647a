"""Desk-scale trainable models, synthetic data, and attacker transforms.

Models are flat float32 parameter vectors over a stack of linear layers
described by an arch tuple (input dim, hidden widths..., classes). The softmax
lives in the loss, not the layers. Training runs mini-batch SGD with float64
internals and casts back to float32, so results are deterministic per seed.
Digests and the file format fix a canonical little-endian serialization.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MODEL_MAGIC = b"LLMODEL1"


def param_count(arch: tuple[int, ...]) -> int:
    if len(arch) < 2 or any(int(d) <= 0 for d in arch):
        raise ValueError(f"arch needs at least (inputs, classes) positive dims, got {arch!r}")
    return sum(arch[i] * arch[i + 1] + arch[i + 1] for i in range(len(arch) - 1))


@dataclass
class ModelParams:
    arch: tuple[int, ...]
    params: np.ndarray

    def __post_init__(self):
        self.arch = tuple(int(d) for d in self.arch)
        expected = param_count(self.arch)
        params = np.ascontiguousarray(self.params, dtype=np.float32).reshape(-1)
        if params.size != expected:
            raise ValueError(
                f"arch {self.arch} needs {expected} params, got {params.size}"
            )
        self.params = params

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, self.params.copy())


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64).reshape(-1)
        if self.features.ndim != 2:
            raise ValueError("features must be 2-D (samples x dims)")
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels disagree on sample count")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class PartitionSpec:
    mode: str
    n_nodes: int
    classes_per_node: int = 2

    def __post_init__(self):
        if self.mode not in ("iid", "noniid"):
            raise ValueError(f"partition mode must be iid or noniid, got {self.mode!r}")
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be positive")
        if self.classes_per_node < 1:
            raise ValueError("classes_per_node must be positive")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.25
    steps: int = 25
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.steps <= 0 or self.batch_size <= 0:
            raise ValueError("steps and batch_size must be positive")


@dataclass(frozen=True)
class EvalReport:
    n_correct: int
    n_samples: int

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_samples


# -- data ---------------------------------------------------------------------


def generate_synthetic(
    num_classes: int,
    dims: int,
    per_class: int,
    spread: float,
    seed: int,
) -> Dataset:
    """Gaussian clusters around per-class means drawn uniformly in [-1, 1]^dims."""
    if num_classes < 1 or dims < 1 or per_class < 1:
        raise ValueError("num_classes, dims, and per_class must be positive")
    if spread < 0:
        raise ValueError("spread must be non-negative")
    rng = np.random.default_rng(seed)
    means = rng.uniform(-1.0, 1.0, size=(num_classes, dims))
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    noise = rng.standard_normal(size=(len(labels), dims))
    features = means[labels] + spread * noise
    order = rng.permutation(len(labels))
    return Dataset(features[order].astype(np.float32), labels[order], num_classes)


def split_by_class(dataset: Dataset, n_per_class: int) -> tuple[Dataset, Dataset]:
    """First n occurrences of each class (row order) vs everything else."""
    take = np.zeros(len(dataset), dtype=bool)
    for c in range(dataset.num_classes):
        idx = np.flatnonzero(dataset.labels == c)
        if len(idx) < n_per_class:
            raise ValueError(f"class {c} has only {len(idx)} samples, need {n_per_class}")
        take[idx[:n_per_class]] = True
    first = Dataset(dataset.features[take], dataset.labels[take], dataset.num_classes)
    rest = Dataset(dataset.features[~take], dataset.labels[~take], dataset.num_classes)
    return first, rest


def partition(dataset: Dataset, spec: PartitionSpec, seed: int) -> list[Dataset]:
    """Disjoint per-node shares: iid splits a seeded shuffle evenly; noniid
    gives each node samples from exactly classes_per_node classes, assigned
    round-robin over a seeded class order."""
    n = len(dataset)
    if spec.n_nodes > n:
        raise ValueError(f"cannot split {n} samples across {spec.n_nodes} nodes")
    rng = np.random.default_rng(seed)
    if spec.mode == "iid":
        order = rng.permutation(n)
        chunks = np.array_split(order, spec.n_nodes)
        return [
            Dataset(dataset.features[c], dataset.labels[c], dataset.num_classes)
            for c in chunks
        ]

    if spec.classes_per_node > dataset.num_classes:
        raise ValueError(
            f"classes_per_node {spec.classes_per_node} exceeds num_classes {dataset.num_classes}"
        )
    class_order = rng.permutation(dataset.num_classes)
    slots = [
        class_order[(i * spec.classes_per_node + j) % dataset.num_classes]
        for i in range(spec.n_nodes)
        for j in range(spec.classes_per_node)
    ]
    per_class_slots = np.bincount(np.array(slots), minlength=dataset.num_classes)
    # Deal each class's shuffled samples out to the nodes holding its slots.
    shards: dict[int, list[np.ndarray]] = {}
    for c in range(dataset.num_classes):
        idx = rng.permutation(np.flatnonzero(dataset.labels == c))
        k = int(per_class_slots[c])
        if k == 0:
            continue
        if len(idx) < k:
            raise ValueError(f"class {c} has {len(idx)} samples for {k} shards")
        shards[c] = np.array_split(idx, k)
    taken = {c: 0 for c in shards}
    shares = []
    for i in range(spec.n_nodes):
        rows = []
        for j in range(spec.classes_per_node):
            c = int(slots[i * spec.classes_per_node + j])
            rows.append(shards[c][taken[c]])
            taken[c] += 1
        rows = np.concatenate(rows)
        shares.append(Dataset(dataset.features[rows], dataset.labels[rows], dataset.num_classes))
    return shares


def label_derangement(num_classes: int, seed: int) -> np.ndarray:
    """Seeded permutation of class ids with no fixed points."""
    if num_classes < 2:
        raise ValueError("need at least 2 classes to derange")
    rng = np.random.default_rng(seed)
    ident = np.arange(num_classes)
    while True:
        perm = rng.permutation(num_classes)
        if not np.any(perm == ident):
            return perm


def flip_labels(dataset: Dataset, seed: int) -> Dataset:
    """Poisoning transform: relabel every sample through a fixed derangement."""
    mapping = label_derangement(dataset.num_classes, seed)
    return Dataset(dataset.features, mapping[dataset.labels], dataset.num_classes)


# -- model --------------------------------------------------------------------


def init_model(arch: tuple[int, ...], seed: int) -> ModelParams:
    rng = np.random.default_rng(seed)
    params = 0.1 * rng.standard_normal(param_count(tuple(arch)))
    return ModelParams(tuple(arch), params.astype(np.float32))


def random_params_like(model: ModelParams, seed: int) -> ModelParams:
    """Junk payload with the right shape: standard normal in place of weights."""
    rng = np.random.default_rng(seed)
    return ModelParams(model.arch, rng.standard_normal(model.params.size).astype(np.float32))


def _unpack(arch: tuple[int, ...], flat: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    layers = []
    pos = 0
    for i in range(len(arch) - 1):
        fan_in, fan_out = arch[i], arch[i + 1]
        w = flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = flat[pos : pos + fan_out]
        pos += fan_out
        layers.append((w, b))
    return layers


def _logits(arch: tuple[int, ...], flat: np.ndarray, features: np.ndarray) -> np.ndarray:
    out = features
    for w, b in _unpack(arch, flat):
        out = out @ w + b
    return out


def loss_and_gradient(
    arch: tuple[int, ...],
    flat: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient w.r.t. the flat params.

    Float64 throughout; layers are linear, the softmax supplies the only
    nonlinearity, so backprop is a chain of matmuls.
    """
    flat = np.asarray(flat, dtype=np.float64)
    x = np.asarray(features, dtype=np.float64)
    n = len(labels)
    if n == 0:
        raise ValueError("empty batch")
    layers = _unpack(arch, flat)
    activations = [x]
    for w, b in layers:
        activations.append(activations[-1] @ w + b)
    logits = activations[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    idx = np.arange(n)
    loss = float(-np.mean(shifted[idx, labels] - np.log(exp.sum(axis=1))))

    grad = np.empty_like(flat)
    delta = probs
    delta[idx, labels] -= 1.0
    delta /= n
    pos = flat.size
    for (w, b), inp in zip(reversed(layers), reversed(activations[:-1])):
        gw = inp.T @ delta
        gb = delta.sum(axis=0)
        pos -= b.size
        grad[pos : pos + b.size] = gb
        pos -= w.size
        grad[pos : pos + w.size] = gw.reshape(-1)
        delta = delta @ w.T
    return loss, grad


def train(model: ModelParams, data: Dataset, cfg: TrainConfig) -> ModelParams:
    """Mini-batch SGD; returns new params, never mutates the input."""
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if data.features.shape[1] != model.arch[0]:
        raise ValueError(
            f"data has {data.features.shape[1]} dims, model expects {model.arch[0]}"
        )
    if data.num_classes != model.arch[-1]:
        raise ValueError(
            f"data has {data.num_classes} classes, model outputs {model.arch[-1]}"
        )
    rng = np.random.default_rng(cfg.seed)
    flat = model.params.astype(np.float64)
    x = data.features.astype(np.float64)
    y = data.labels
    n = len(data)
    for _ in range(cfg.steps):
        batch = rng.integers(0, n, size=min(cfg.batch_size, n))
        _, grad = loss_and_gradient(model.arch, flat, x[batch], y[batch])
        flat -= cfg.learning_rate * grad
    return ModelParams(model.arch, flat.astype(np.float32))


def evaluate(model: ModelParams, data: Dataset) -> EvalReport:
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if data.features.shape[1] != model.arch[0]:
        raise ValueError(
            f"data has {data.features.shape[1]} dims, model expects {model.arch[0]}"
        )
    logits = _logits(model.arch, model.params.astype(np.float64), data.features.astype(np.float64))
    predicted = logits.argmax(axis=1)
    return EvalReport(int(np.sum(predicted == data.labels)), len(data))


def merge(a: ModelParams, b: ModelParams) -> ModelParams:
    """Element-wise parameter mean. Commutative; merge(m, m) == m bit-exactly."""
    if a.arch != b.arch:
        raise ValueError(f"arch mismatch: {a.arch} vs {b.arch}")
    return ModelParams(a.arch, (a.params + b.params) * np.float32(0.5))


# -- serialization ------------------------------------------------------------


def _arch_bytes(arch: tuple[int, ...]) -> bytes:
    return np.asarray(arch, dtype="<u4").tobytes()


def digest_parts(arch: tuple[int, ...], params: np.ndarray) -> str:
    """MD5 over arch descriptor bytes then little-endian float32 params.

    An integrity tag for result agreement, not a security boundary. Accepts
    raw parts so degenerate inputs (empty arch, no params) hash as the empty
    byte string.
    """
    h = hashlib.md5()
    h.update(np.asarray(arch, dtype="<u4").tobytes())
    h.update(np.asarray(params, dtype="<f4").tobytes())
    return h.hexdigest()


def digest(model: ModelParams) -> str:
    return digest_parts(model.arch, model.params)


def serialize_model(model: ModelParams) -> bytes:
    header = MODEL_MAGIC + struct.pack("<I", len(model.arch)) + _arch_bytes(model.arch)
    return header + model.params.astype("<f4").tobytes()


def deserialize_model(blob: bytes) -> ModelParams:
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ValueError("not a model file (bad magic)")
    off = len(MODEL_MAGIC)
    (n_dims,) = struct.unpack_from("<I", blob, off)
    off += 4
    arch = tuple(int(d) for d in np.frombuffer(blob, dtype="<u4", count=n_dims, offset=off))
    off += 4 * n_dims
    expected = param_count(arch)
    params = np.frombuffer(blob, dtype="<f4", count=expected, offset=off)
    if len(blob) != off + 4 * expected:
        raise ValueError("model file length does not match its arch")
    return ModelParams(arch, params.astype(np.float32))


def save_model(model: ModelParams, path: str | Path) -> None:
    Path(path).write_bytes(serialize_model(model))


def load_model(path: str | Path) -> ModelParams:
    return deserialize_model(Path(path).read_bytes())
