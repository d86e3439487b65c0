"""Five-stage re-classification over a dataset of detections.

Stage 1 accepts confident species predictions as anchors. Stage 2 rolls blank
and kingdom-level detections down to class Aves when their raw top-5 is
bird-dominated. Stage 3 clusters anchors per species in raw embedding space
and pulls in sub-threshold species predictions that land inside their own
cluster. Stage 4 trains the metric-learning projection on all anchors and
rebuilds clusters in the learned space. Stage 5 scores the remaining coarse
detections against the learned clusters and either re-classifies them to a
species or conservatively rolls them up to generic "animal".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .embedspace import ClusterModel, Space, build_cluster, cosine_distance, normalize
from .errors import DegenerateCluster, EmptyInput, NoEligibleClusters
from .ingest import Dataset, Detection
from .projection import ProjectionNet, TrainConfig, forward_batch, train
from .taxonomy import (
    ANIMAL_KINGDOM,
    AVES_CLASS,
    Label,
    TaxonPath,
    hierarchy_match,
    is_bird,
)

logger = logging.getLogger(__name__)


class DecidedBy(str, Enum):
    STAGE1 = "stage1"
    STAGE2 = "stage2"
    STAGE3 = "stage3"
    STAGE5 = "stage5"
    ROLLUP_ANIMAL = "rollup_animal"
    UNTOUCHED = "untouched"


@dataclass(frozen=True)
class StageConfig:
    """Thresholds for all five stages plus the training config."""

    accept_threshold: float = 0.8
    bird_min_species: int = 3
    bird_min_sum: float = 0.3
    min_cluster_size: int = 5
    centroid_percentile: float = 95.0
    tau: float = 0.85
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not 0.0 <= self.accept_threshold <= 1.0:
            raise ValueError(f"accept_threshold out of [0, 1]: {self.accept_threshold}")
        if self.bird_min_species < 1:
            raise ValueError(f"bird_min_species must be >= 1: {self.bird_min_species}")
        if not 0.0 <= self.bird_min_sum <= 5.0:
            raise ValueError(f"bird_min_sum out of [0, 5]: {self.bird_min_sum}")
        if self.min_cluster_size < 5:
            raise ValueError(f"min_cluster_size must be >= 5: {self.min_cluster_size}")
        if not 0.0 < self.centroid_percentile <= 100.0:
            raise ValueError(f"centroid_percentile out of (0, 100]: {self.centroid_percentile}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive: {self.tau}")


@dataclass
class PipelineOutcome:
    """Final label for one detection plus how and why it was decided."""

    detection_id: str
    original_label: Label
    final_label: Label
    decided_by: DecidedBy
    score: float | None = None
    nearest_label: TaxonPath | None = None
    audit: list[str] = field(default_factory=list)


@dataclass
class PipelineResult:
    outcomes: list[PipelineOutcome]
    net: ProjectionNet
    raw_clusters: list[ClusterModel]
    learned_clusters: list[ClusterModel]
    anchor_labels: dict[str, TaxonPath]
    epoch_losses: list[float]


def stage1_accept(det: Detection, cfg: StageConfig) -> bool:
    """Species-level prediction at or above the accept threshold."""
    return (
        det.ensemble_label.is_taxon
        and det.ensemble_label.taxon.is_species_level
        and det.ensemble_score >= cfg.accept_threshold
    )


def _is_stage2_eligible(label: Label) -> bool:
    return label.is_blank or (label.is_taxon and label.taxon.level() == "kingdom")


def stage2_bird_override(det: Detection, cfg: StageConfig) -> Label | None:
    """Class-level Aves when the raw top-5 is bird-dominated.

    Fires for blank or kingdom-level detections whose top-5 holds at least
    ``bird_min_species`` bird entries with summed confidence at least
    ``bird_min_sum``.
    """
    bird_entries = [e for e in det.top5 if is_bird(e.label)]
    if len(bird_entries) < cfg.bird_min_species:
        return None
    if sum(e.score for e in bird_entries) < cfg.bird_min_sum:
        return None
    return Label.of(AVES_CLASS)


def stage3_build_centroids(
    anchors: dict[str, TaxonPath],
    dataset: Dataset,
    cfg: StageConfig,
) -> tuple[list[ClusterModel], list[str]]:
    """Cluster anchors per species and admit sub-threshold species predictions.

    Builds a raw-space ClusterModel for every species with at least
    ``min_cluster_size`` anchors. A not-yet-accepted detection with a
    species-level prediction is accepted as an additional anchor when its
    nearest centroid carries its own predicted species and its distance to
    that centroid is within the cluster's 95th-percentile radius. Clusters
    are not recomputed after augmentation.
    """
    groups: dict[TaxonPath, list[np.ndarray]] = {}
    for det_id, path in anchors.items():
        det = dataset.get(det_id)
        groups.setdefault(path, []).append(det.embedding.astype(np.float64))

    clusters = [
        build_cluster(path, members, Space.RAW, cfg.centroid_percentile)
        for path, members in sorted(groups.items(), key=lambda kv: kv[0].render())
        if len(members) >= cfg.min_cluster_size
    ]
    if not clusters:
        raise NoEligibleClusters(
            f"no species reached min_cluster_size={cfg.min_cluster_size}"
        )

    accepted: list[str] = []
    for det in dataset.detections:
        if det.id in anchors:
            continue
        label = det.ensemble_label
        if not (label.is_taxon and label.taxon.is_species_level):
            continue
        distances = [(cosine_distance(det.embedding, c.centroid), c) for c in clusters]
        distances.sort(key=lambda dc: (dc[0], dc[1].label.render()))
        dist, nearest = distances[0]
        if stage3_admit(label.taxon, dist, nearest):
            accepted.append(det.id)
    return clusters, accepted


def stage3_admit(predicted: TaxonPath, dist: float, nearest: ClusterModel) -> bool:
    """Admission rule for sub-threshold species predictions: the nearest
    cluster must carry the predicted species, with the distance inside the
    cluster's 95th-percentile radius (boundary inclusive)."""
    return bool(nearest.label == predicted and dist <= nearest.p95_intra_dist)


def stage5_adaptive_score(
    e_learned: np.ndarray,
    clusters: list[ClusterModel],
) -> list[tuple[TaxonPath, float]]:
    """Score a learned-space embedding against every cluster, best first.

    score = (1 - mu_hat . e) / (mean_intra_dist * tightness), where tightness
    is 1 + (d_max - d_c)/d_max so tight clusters get a more forgiving
    denominator. Ties break on the species path.
    """
    if not clusters:
        raise EmptyInput("no clusters to score against")
    for c in clusters:
        if c.mean_intra_dist == 0.0:
            raise DegenerateCluster(f"cluster {c.label.render()} has zero mean intra distance")
    d_max = max(c.mean_intra_dist for c in clusters)
    scored = []
    for c in clusters:
        mu_hat = normalize(c.centroid)
        weight = 1.0 + (d_max - c.mean_intra_dist) / d_max
        score = (1.0 - float(np.dot(mu_hat, e_learned))) / (c.mean_intra_dist * weight)
        scored.append((c.label, score))
    scored.sort(key=lambda ls: (ls[1], ls[0].render()))
    return scored


def tightness_weight(cluster: ClusterModel, d_max: float) -> float:
    """Eq-style cluster tightness factor in [1, 2]."""
    return 1.0 + (d_max - cluster.mean_intra_dist) / d_max


def _is_stage5_candidate(label: Label) -> bool:
    if label.is_blank:
        return True
    if not label.is_taxon:
        return False
    level = label.taxon.level()
    return level == "kingdom" or (level == "class" and label.taxon.class_ == "mammalia")


def stage5_decide(
    ranked: list[tuple[TaxonPath, float]],
    original: Label,
    tau: float,
) -> tuple[TaxonPath, float] | None:
    """Re-classification decision given the ranked scores.

    The best-scoring cluster wins only with a score strictly below tau and a
    taxonomic hierarchy match against the original label; anything else is a
    conservative rollup.
    """
    best_label, best_score = ranked[0]
    if best_score < tau and hierarchy_match(original, best_label):
        return best_label, best_score
    return None


def run_pipeline(ds: Dataset, cfg: StageConfig) -> PipelineResult:
    """Run all five stages and decide every detection exactly once."""
    return _run(ds, cfg, pretrained=None)


def score_with_net(ds: Dataset, cfg: StageConfig, net: ProjectionNet) -> PipelineResult:
    """Run the pipeline with an already-trained projection (no stage-4 training)."""
    return _run(ds, cfg, pretrained=net)


def _run(ds: Dataset, cfg: StageConfig, pretrained: ProjectionNet | None) -> PipelineResult:
    decided: dict[str, PipelineOutcome] = {}
    audits: dict[str, list[str]] = {det.id: [] for det in ds.detections}
    anchors: dict[str, TaxonPath] = {}

    # Stage 1: accept confident species predictions as anchors.
    for det in ds.detections:
        if stage1_accept(det, cfg):
            anchors[det.id] = det.ensemble_label.taxon
            audits[det.id].append(
                f"stage1: accepted as anchor (score {det.ensemble_score:.6f} >= {cfg.accept_threshold:.6f})"
            )
            decided[det.id] = PipelineOutcome(
                detection_id=det.id,
                original_label=det.ensemble_label,
                final_label=det.ensemble_label,
                decided_by=DecidedBy.STAGE1,
                audit=audits[det.id],
            )
    logger.info("stage1: %d anchors", len(anchors))

    # Stage 2: bird override for blank/kingdom detections.
    n_birds = 0
    for det in ds.detections:
        if det.id in decided or not _is_stage2_eligible(det.ensemble_label):
            continue
        override = stage2_bird_override(det, cfg)
        if override is not None:
            birds = [e for e in det.top5 if is_bird(e.label)]
            audits[det.id].append(
                f"stage2: bird override ({len(birds)} bird entries, sum {sum(e.score for e in birds):.6f})"
            )
            decided[det.id] = PipelineOutcome(
                detection_id=det.id,
                original_label=det.ensemble_label,
                final_label=override,
                decided_by=DecidedBy.STAGE2,
                audit=audits[det.id],
            )
            n_birds += 1
    logger.info("stage2: %d bird overrides", n_birds)

    # Stage 3: raw-space clusters plus centroid-gated anchor augmentation.
    if not anchors:
        raise NoEligibleClusters("dataset yielded no stage-1 anchors")
    raw_clusters, admitted = stage3_build_centroids(anchors, ds, cfg)
    for det_id in admitted:
        det = ds.get(det_id)
        anchors[det_id] = det.ensemble_label.taxon
        audits[det_id].append("stage3: accepted by own-species centroid within p95 radius")
        decided[det_id] = PipelineOutcome(
            detection_id=det_id,
            original_label=det.ensemble_label,
            final_label=det.ensemble_label,
            decided_by=DecidedBy.STAGE3,
            audit=audits[det_id],
        )
    logger.info("stage3: %d clusters, %d additional anchors", len(raw_clusters), len(admitted))

    # Stage 4: train the projection on every anchor, then rebuild clusters in
    # the learned space from the projected anchor embeddings. The raw-space
    # centroid is not projected: under a nonlinear map the mean of projections
    # is not the projection of the mean.
    anchor_groups: dict[TaxonPath, list[tuple[str, np.ndarray]]] = {}
    for det_id, path in anchors.items():
        anchor_groups.setdefault(path, []).append((det_id, ds.get(det_id).embedding))
    if pretrained is None:
        result = train(anchor_groups, cfg.train)
        net, epoch_losses = result.net, result.epoch_losses
    else:
        net, epoch_losses = pretrained, []

    learned_clusters = []
    for path, group in sorted(anchor_groups.items(), key=lambda kv: kv[0].render()):
        if len(group) < cfg.min_cluster_size:
            continue
        projected = forward_batch(net, np.stack([emb for _, emb in group]))
        learned_clusters.append(
            build_cluster(path, list(projected), Space.LEARNED, cfg.centroid_percentile)
        )
    if not learned_clusters:
        raise NoEligibleClusters("no species reached min_cluster_size in learned space")
    if epoch_losses:
        logger.info(
            "stage4: trained %d epochs (final loss %.6f), %d learned clusters",
            len(epoch_losses),
            epoch_losses[-1],
            len(learned_clusters),
        )
    else:
        logger.info("stage4: using pretrained projection, %d learned clusters", len(learned_clusters))

    # Stage 5: adaptive scoring of the remaining coarse detections.
    scorable = [c for c in learned_clusters if c.mean_intra_dist > 0.0]
    for c in learned_clusters:
        if c.mean_intra_dist == 0.0:
            logger.warning(
                "stage5: excluding degenerate cluster %s (zero mean intra distance)",
                c.label.render(),
            )

    n_reclassified = n_rollup = 0
    for det in ds.detections:
        if det.id in decided or not _is_stage5_candidate(det.ensemble_label):
            continue
        e_learned = forward_batch(net, det.embedding[None, :].astype(np.float64))[0]
        if not scorable:
            audits[det.id].append("stage5: no scorable clusters; conservative rollup")
            decided[det.id] = PipelineOutcome(
                detection_id=det.id,
                original_label=det.ensemble_label,
                final_label=Label.of(ANIMAL_KINGDOM),
                decided_by=DecidedBy.ROLLUP_ANIMAL,
                audit=audits[det.id],
            )
            n_rollup += 1
            continue
        ranked = stage5_adaptive_score(e_learned, scorable)
        best_label, best_score = ranked[0]
        decision = stage5_decide(ranked, det.ensemble_label, cfg.tau)
        if decision is not None:
            label, score = decision
            audits[det.id].append(
                f"stage5: re-classified to {label.render()} (score {score:.6f} < tau {cfg.tau:.6f})"
            )
            decided[det.id] = PipelineOutcome(
                detection_id=det.id,
                original_label=det.ensemble_label,
                final_label=Label.of(label),
                decided_by=DecidedBy.STAGE5,
                score=score,
                nearest_label=label,
                audit=audits[det.id],
            )
            n_reclassified += 1
        else:
            reason = (
                f"best score {best_score:.6f} >= tau {cfg.tau:.6f}"
                if best_score >= cfg.tau
                else f"hierarchy mismatch with {best_label.render()}"
            )
            audits[det.id].append(f"stage5: conservative rollup to animal ({reason})")
            decided[det.id] = PipelineOutcome(
                detection_id=det.id,
                original_label=det.ensemble_label,
                final_label=Label.of(ANIMAL_KINGDOM),
                decided_by=DecidedBy.ROLLUP_ANIMAL,
                score=best_score,
                nearest_label=best_label,
                audit=audits[det.id],
            )
            n_rollup += 1
    logger.info("stage5: %d re-classified, %d rolled up", n_reclassified, n_rollup)

    # Everything else never entered a deciding stage.
    for det in ds.detections:
        if det.id not in decided:
            audits[det.id].append("untouched: not a re-classification candidate")
            decided[det.id] = PipelineOutcome(
                detection_id=det.id,
                original_label=det.ensemble_label,
                final_label=det.ensemble_label,
                decided_by=DecidedBy.UNTOUCHED,
                audit=audits[det.id],
            )

    return PipelineResult(
        outcomes=[decided[det.id] for det in ds.detections],
        net=net,
        raw_clusters=raw_clusters,
        learned_clusters=learned_clusters,
        anchor_labels=anchors,
        epoch_losses=epoch_losses,
    )
