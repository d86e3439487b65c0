"""Vector primitives shared by centroid building and adaptive scoring.

All accumulation happens in float64 regardless of the float32 storage format,
and reductions go through numpy's pairwise summation so results are stable
under re-runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import ceil
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCluster, EmptyInput, ZeroVector
from .taxonomy import TaxonPath


class Space(str, Enum):
    """Embedding space a cluster lives in: raw 768-d or learned 256-d."""

    RAW = "raw"
    LEARNED = "learned"


def _as_f64(v) -> np.ndarray:
    return np.asarray(v, dtype=np.float64)


def cosine_distance(u, v) -> float:
    """1 - cos(u, v), clamped to [0, 2] against floating-point drift."""
    u, v = _as_f64(u), _as_f64(v)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine distance undefined for zero vectors")
    if np.array_equal(u, v):
        return 0.0
    d = 1.0 - float(np.dot(u, v)) / (nu * nv)
    return min(max(d, 0.0), 2.0)


def centroid(members: Sequence) -> np.ndarray:
    """Component-wise arithmetic mean; deliberately not normalized."""
    if len(members) == 0:
        raise EmptyCluster("centroid of zero members")
    first = _as_f64(members[0])
    for m in members[1:]:
        if _as_f64(m).shape != first.shape:
            raise DimensionMismatch("cluster members differ in dimension")
    return np.mean(np.stack([_as_f64(m) for m in members]), axis=0)


def percentile(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: element at index ceil(p*n/100) - 1 after sorting."""
    if len(values) == 0:
        raise EmptyInput("percentile of empty values")
    if not 0.0 < p <= 100.0:
        raise ValueError(f"percentile p must be in (0, 100], got {p}")
    ordered = sorted(float(v) for v in values)
    rank = max(1, ceil(p * len(ordered) / 100.0))
    return ordered[rank - 1]


def normalize(v) -> np.ndarray:
    """v / ||v||_2."""
    v = _as_f64(v)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return v / n


@dataclass(frozen=True)
class ClusterModel:
    """Per-species centroid plus intra-cluster distance statistics.

    ``mean_intra_dist`` and ``p95_intra_dist`` summarize the pairwise cosine
    distances between distinct members. Both lie in [0, 2]; their ordering is
    not guaranteed for pathological member distributions.
    """

    label: TaxonPath
    centroid: np.ndarray
    mean_intra_dist: float
    p95_intra_dist: float
    member_count: int
    space: Space

    def __post_init__(self):
        if self.member_count < 5:
            raise ValueError(f"cluster needs at least 5 members, got {self.member_count}")
        for name in ("mean_intra_dist", "p95_intra_dist"):
            value = getattr(self, name)
            if not 0.0 <= value <= 2.0:
                raise ValueError(f"{name} out of [0, 2]: {value}")


def pairwise_cosine_distances(members: Sequence) -> np.ndarray:
    """Cosine distances over all unordered pairs of distinct members."""
    if len(members) < 2:
        raise EmptyInput("pairwise distances need at least 2 members")
    m = np.stack([_as_f64(v) for v in members])
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("cluster member with zero norm")
    unit = m / norms[:, None]
    sims = unit @ unit.T
    i, j = np.triu_indices(len(members), k=1)
    return np.clip(1.0 - sims[i, j], 0.0, 2.0)


def build_cluster(
    label: TaxonPath,
    members: Sequence,
    space: Space,
    stat_percentile: float = 95.0,
) -> ClusterModel:
    """Build a ClusterModel from member embeddings.

    Distance statistics come from the pairwise cosine distances among
    members; the mean feeds the adaptive-score denominator and the percentile
    is the acceptance radius for centroid-gated admission.
    """
    mu = centroid(members)
    dists = pairwise_cosine_distances(members)
    return ClusterModel(
        label=label,
        centroid=mu,
        mean_intra_dist=float(np.mean(dists)),
        p95_intra_dist=percentile(dists.tolist(), stat_percentile),
        member_count=len(members),
        space=space,
    )
