"""Metric-learning projection: a 768->512(ReLU)->256 network trained with a
triplet hinge loss so same-species embeddings cluster and different species
separate by a margin.

Gradients are computed analytically through the output L2-normalization
(Jacobian (I - y y^T)/||z||), the affine layers, and the ReLU, and applied
with Adam. Everything is float64 internally and fully deterministic given the
config seed; the serialized model stores float32 tensors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    InsufficientClasses,
    InsufficientMembers,
    NonFiniteGradient,
    ZeroVector,
)
from .taxonomy import TaxonPath

IN_DIM = 768
HIDDEN_DIM = 512
OUT_DIM = 256

_MODEL_MAGIC = b"TXPN"
_MODEL_VERSION = 1

# Adam moment decay and stabilizer; conventional values.
_BETA1 = 0.9
_BETA2 = 0.999
_EPS = 1e-8


@dataclass(frozen=True)
class Triplet:
    """Detection ids for one (anchor, positive, negative) example."""

    anchor_id: str
    positive_id: str
    negative_id: str


@dataclass(frozen=True)
class TrainConfig:
    margin: float = 1.0
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    triplets_per_epoch: int = 10_000

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.triplets_per_epoch < 1:
            raise ValueError(f"triplets_per_epoch must be >= 1, got {self.triplets_per_epoch}")


@dataclass
class ProjectionNet:
    """Parameters of the two-layer projection. Weight rows map onto outputs."""

    w1: np.ndarray  # (hidden, in)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (out, hidden)
    b2: np.ndarray  # (out,)

    @classmethod
    def initialized(
        cls,
        seed: int,
        in_dim: int = IN_DIM,
        hidden_dim: int = HIDDEN_DIM,
        out_dim: int = OUT_DIM,
    ) -> ProjectionNet:
        """He-uniform weights, zero biases, seeded for reproducibility."""
        rng = np.random.default_rng(seed)
        lim1 = np.sqrt(6.0 / in_dim)
        lim2 = np.sqrt(6.0 / hidden_dim)
        return cls(
            w1=rng.uniform(-lim1, lim1, size=(hidden_dim, in_dim)),
            b1=np.zeros(hidden_dim),
            w2=rng.uniform(-lim2, lim2, size=(out_dim, hidden_dim)),
            b2=np.zeros(out_dim),
        )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


def _forward_raw(net: ProjectionNet, emb: np.ndarray):
    """Pre-normalization pass; returns (z1, hidden, z2)."""
    z1 = emb @ net.w1.T + net.b1
    h = np.maximum(z1, 0.0)
    z2 = h @ net.w2.T + net.b2
    return z1, h, z2


def forward_batch(net: ProjectionNet, embeddings: np.ndarray) -> np.ndarray:
    """Project rows of ``embeddings`` and L2-normalize each output row."""
    emb = np.asarray(embeddings, dtype=np.float64)
    _, _, z2 = _forward_raw(net, emb)
    norms = np.linalg.norm(z2, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("projection produced an exactly-zero output (dead network)")
    return z2 / norms[:, None]


def forward(net: ProjectionNet, emb) -> np.ndarray:
    """Project a single embedding to a unit vector in the learned space."""
    return forward_batch(net, np.asarray(emb, dtype=np.float64)[None, :])[0]


def triplet_loss(a: np.ndarray, p: np.ndarray, n: np.ndarray, margin: float) -> float:
    """Hinge on squared distances: max(0, ||a-p||^2 - ||a-n||^2 + margin)."""
    d_ap = float(np.sum((np.asarray(a) - np.asarray(p)) ** 2))
    d_an = float(np.sum((np.asarray(a) - np.asarray(n)) ** 2))
    return max(0.0, d_ap - d_an + margin)


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros(cls, net: ProjectionNet) -> AdamState:
        return cls(
            m={k: np.zeros_like(t) for k, t in net.tensors().items()},
            v={k: np.zeros_like(t) for k, t in net.tensors().items()},
        )


def batch_gradients(
    net: ProjectionNet,
    anchors: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    margin: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean triplet loss over the batch and its exact parameter gradients.

    Triplets whose hinge is inactive contribute zero gradient.
    """
    bsz = anchors.shape[0]
    stacked = np.vstack([anchors, positives, negatives]).astype(np.float64)
    z1, h, z2 = _forward_raw(net, stacked)
    norms = np.linalg.norm(z2, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("projection produced an exactly-zero output (dead network)")
    y = z2 / norms[:, None]

    ya, yp, yn = y[:bsz], y[bsz : 2 * bsz], y[2 * bsz :]
    hinge = np.sum((ya - yp) ** 2, axis=1) - np.sum((ya - yn) ** 2, axis=1) + margin
    active = (hinge > 0.0).astype(np.float64)
    loss = float(np.mean(np.maximum(hinge, 0.0)))

    scale = (2.0 / bsz) * active[:, None]
    gy = np.vstack([scale * (yn - yp), scale * (yp - ya), scale * (ya - yn)])

    # through y = z2/||z2||: dz = (dy - (dy.y) y)/||z2||
    gz2 = (gy - np.sum(gy * y, axis=1, keepdims=True) * y) / norms[:, None]
    gb2 = gz2.sum(axis=0)
    gw2 = gz2.T @ h
    gh = gz2 @ net.w2
    gz1 = gh * (z1 > 0.0)
    gb1 = gz1.sum(axis=0)
    gw1 = gz1.T @ stacked

    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}


def grad_step(
    net: ProjectionNet,
    anchors: np.ndarray,
    positives: np.ndarray,
    negatives: np.ndarray,
    cfg: TrainConfig,
    state: AdamState,
) -> float:
    """One Adam update on a batch of resolved triplets; returns the batch loss.

    Mutates ``net`` and ``state`` in place. Raises NonFiniteGradient if either
    the gradients or the updated parameters stop being finite.
    """
    loss, grads = batch_gradients(net, anchors, positives, negatives, cfg.margin)
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains NaN/Inf")
    state.t += 1
    tensors = net.tensors()
    for key, grad in grads.items():
        state.m[key] = _BETA1 * state.m[key] + (1.0 - _BETA1) * grad
        state.v[key] = _BETA2 * state.v[key] + (1.0 - _BETA2) * grad * grad
        m_hat = state.m[key] / (1.0 - _BETA1**state.t)
        v_hat = state.v[key] / (1.0 - _BETA2**state.t)
        tensors[key] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + _EPS)
        if not np.all(np.isfinite(tensors[key])):
            raise NonFiniteGradient(f"parameter {key} became non-finite")
    return loss


def sample_triplets(
    groups: Mapping[TaxonPath, Sequence[str]],
    count: int,
    seed: int,
) -> list[Triplet]:
    """Draw random triplets from species-grouped anchor ids.

    Anchor species are drawn uniformly from groups with >= 2 members, the
    positive is a distinct member of the same group, and the negative is a
    uniform member of a uniformly-drawn different species. Deterministic for
    a given seed.
    """
    ordered = sorted(groups.items(), key=lambda kv: kv[0].render())
    if len(ordered) < 2:
        raise InsufficientClasses(f"need >= 2 species groups, got {len(ordered)}")
    eligible = [(label, list(ids)) for label, ids in ordered if len(ids) >= 2]
    if not eligible:
        raise InsufficientMembers("no species has >= 2 members to anchor a triplet")

    rng = np.random.default_rng(seed)
    triplets: list[Triplet] = []
    for _ in range(count):
        label, members = eligible[int(rng.integers(len(eligible)))]
        a_idx, p_idx = rng.choice(len(members), size=2, replace=False)
        others = [i for i, (other, _) in enumerate(ordered) if other != label]
        neg_label, neg_members = ordered[others[int(rng.integers(len(others)))]]
        n_idx = int(rng.integers(len(neg_members)))
        triplets.append(
            Triplet(
                anchor_id=members[int(a_idx)],
                positive_id=members[int(p_idx)],
                negative_id=neg_members[n_idx],
            )
        )
    return triplets


@dataclass
class TrainResult:
    net: ProjectionNet
    epoch_losses: list[float] = field(default_factory=list)


def train(
    anchors: Mapping[TaxonPath, Sequence[tuple[str, np.ndarray]]],
    cfg: TrainConfig,
) -> TrainResult:
    """Train the projection on species-grouped anchor embeddings.

    ``anchors`` maps each accepted species to its (detection id, raw
    embedding) pairs. Bit-identical results for identical inputs and config.
    """
    by_id = {det_id: np.asarray(emb, dtype=np.float64) for group in anchors.values() for det_id, emb in group}
    groups = {label: [det_id for det_id, _ in group] for label, group in anchors.items()}

    net = ProjectionNet.initialized(seed=cfg.seed)
    state = AdamState.zeros(net)
    epoch_seeds = np.random.default_rng(cfg.seed).integers(0, 2**62, size=cfg.epochs)

    epoch_losses: list[float] = []
    for epoch in range(cfg.epochs):
        triplets = sample_triplets(groups, cfg.triplets_per_epoch, seed=int(epoch_seeds[epoch]))
        total, seen = 0.0, 0
        for start in range(0, len(triplets), cfg.batch_size):
            batch = triplets[start : start + cfg.batch_size]
            a = np.stack([by_id[t.anchor_id] for t in batch])
            p = np.stack([by_id[t.positive_id] for t in batch])
            n = np.stack([by_id[t.negative_id] for t in batch])
            loss = grad_step(net, a, p, n, cfg, state)
            total += loss * len(batch)
            seen += len(batch)
        epoch_losses.append(total / seen)
    return TrainResult(net=net, epoch_losses=epoch_losses)


def save_net(net: ProjectionNet, path: str | Path) -> None:
    """Serialize to the binary model format.

    Layout: magic ``TXPN``, u32 version, three u32 dims (in, hidden, out),
    then w1, b1, w2, b2 as row-major little-endian float32.
    """
    in_dim, hidden_dim, out_dim = net.dims
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<IIII", _MODEL_VERSION, in_dim, hidden_dim, out_dim))
        for key in ("w1", "b1", "w2", "b2"):
            fh.write(np.ascontiguousarray(net.tensors()[key], dtype="<f4").tobytes())


def load_net(path: str | Path) -> ProjectionNet:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MODEL_MAGIC:
            raise ValueError(f"{path}: not a projection model file")
        version, in_dim, hidden_dim, out_dim = struct.unpack("<IIII", fh.read(16))
        if version != _MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {version}")
        shapes = {
            "w1": (hidden_dim, in_dim),
            "b1": (hidden_dim,),
            "w2": (out_dim, hidden_dim),
            "b2": (out_dim,),
        }
        tensors = {}
        for key, shape in shapes.items():
            n = int(np.prod(shape))
            buf = fh.read(4 * n)
            if len(buf) != 4 * n:
                raise ValueError(f"{path}: truncated tensor {key}")
            tensors[key] = np.frombuffer(buf, dtype="<f4").reshape(shape).astype(np.float64)
    return ProjectionNet(**tensors)
