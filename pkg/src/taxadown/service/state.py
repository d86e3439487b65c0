"""In-memory review session built from pipeline artifacts.

Human label overrides are journaled to an append-only file so a restart
replays them; clusters (and optionally the projection) are rebuilt on
explicit recompute. A revision counter stamps every read so clients can
detect stale views.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

import numpy as np

from ..embedspace import ClusterModel, Space, build_cluster, normalize
from ..errors import MalformedLabel, TaxadownError
from ..ingest import Dataset, load_manifest, load_outcomes
from ..pipeline import DecidedBy, PipelineOutcome, StageConfig, stage5_adaptive_score
from ..projection import ProjectionNet, forward_batch, train
from ..taxonomy import Label, TaxonPath, hierarchy_match, parse_label

_ANCHOR_STAGES = (DecidedBy.STAGE1, DecidedBy.STAGE3)

_IMAGE_SUFFIXES = ("", ".jpg", ".jpeg", ".png", ".webp")


class UnknownReference(TaxadownError):
    """Reference id or label does not resolve to a detection or cluster."""


class NoClusters(TaxadownError):
    """Session has no learned-space clusters to score against."""


class RecomputeBusy(TaxadownError):
    """A recompute is already running."""


class SessionState:
    """Dataset + outcomes + projection + clusters + human overrides."""

    def __init__(
        self,
        ds: Dataset,
        outcomes: list[PipelineOutcome],
        net: ProjectionNet,
        cfg: StageConfig,
        images_dir: str | Path | None = None,
        journal_path: str | Path | None = None,
    ):
        self.ds = ds
        self.outcomes = {o.detection_id: o for o in outcomes}
        self.net = net
        self.cfg = cfg
        self.images_dir = Path(images_dir) if images_dir else None
        self.journal_path = Path(journal_path) if journal_path else None
        self.revision = 0
        self.overrides: dict[str, TaxonPath] = {}
        self._lock = threading.RLock()
        self._recompute_gate = threading.Lock()
        self.learned_clusters: list[ClusterModel] = []
        self._learned: np.ndarray | None = None
        self._row_of: dict[str, int] = {d.id: i for i, d in enumerate(ds.detections)}
        self._project_all()
        self._rebuild_clusters()

    # -- construction ------------------------------------------------------

    @classmethod
    def load(
        cls,
        artifacts_dir: str | Path,
        cfg: StageConfig,
        images_dir: str | Path | None = None,
        journal_path: str | Path | None = None,
    ) -> SessionState:
        """Build a session from a `run` output directory and replay the journal."""
        from ..projection import load_net

        artifacts = Path(artifacts_dir)
        ds = load_manifest(artifacts / "manifest.jsonl", artifacts / "embeddings.f32")
        outcomes = load_outcomes(artifacts / "outcomes.jsonl")
        net = load_net(artifacts / "model.bin")
        journal = Path(journal_path) if journal_path else artifacts / "journal.jsonl"
        state = cls(ds, outcomes, net, cfg, images_dir=images_dir, journal_path=journal)
        state._replay_journal()
        return state

    def _replay_journal(self):
        if self.journal_path is None or not self.journal_path.exists():
            return
        n = 0
        with open(self.journal_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                label = parse_label(rec["label"])
                self.overrides[rec["detection_id"]] = label.taxon
                n += 1
        if n:
            self.revision += n
            self._rebuild_clusters()

    # -- internal recomputation -------------------------------------------

    def _project_all(self):
        if self.ds.detections:
            matrix = np.stack([d.embedding for d in self.ds.detections]).astype(np.float64)
            self._learned = forward_batch(self.net, matrix)
        else:
            self._learned = np.zeros((0, self.net.dims[2]))

    def _anchor_groups(self) -> dict[TaxonPath, list[tuple[str, np.ndarray]]]:
        anchors: dict[str, TaxonPath] = {
            o.detection_id: o.final_label.taxon
            for o in self.outcomes.values()
            if o.decided_by in _ANCHOR_STAGES and o.final_label.is_taxon
        }
        anchors.update(self.overrides)
        groups: dict[TaxonPath, list[tuple[str, np.ndarray]]] = {}
        for det_id, path in anchors.items():
            det = self.ds.get(det_id)
            if det is not None:
                groups.setdefault(path, []).append((det_id, det.embedding))
        return groups

    def _rebuild_clusters(self):
        clusters = []
        for path, group in sorted(self._anchor_groups().items(), key=lambda kv: kv[0].render()):
            if len(group) < self.cfg.min_cluster_size:
                continue
            rows = [self._learned[self._row_of[det_id]] for det_id, _ in group]
            clusters.append(
                build_cluster(path, rows, Space.LEARNED, self.cfg.centroid_percentile)
            )
        self.learned_clusters = clusters

    # -- queries -----------------------------------------------------------

    def learned_vector(self, det_id: str) -> np.ndarray:
        return self._learned[self._row_of[det_id]]

    def resolve_reference(self, reference: str) -> np.ndarray:
        """A detection id, or a species label owning a cluster, to a learned-space point."""
        with self._lock:
            if reference in self._row_of:
                return self.learned_vector(reference)
            try:
                label = parse_label(reference)
            except MalformedLabel:
                raise UnknownReference(reference)
            if label.is_taxon:
                for c in self.learned_clusters:
                    if c.label == label.taxon:
                        return normalize(c.centroid)
            raise UnknownReference(reference)

    def distances_from(self, point: np.ndarray) -> np.ndarray:
        """Euclidean distance of every detection to the point, in dataset order."""
        with self._lock:
            return np.linalg.norm(self._learned - point[None, :], axis=1)

    def suggestions(self, det_id: str) -> list[tuple[TaxonPath, float, bool, bool]]:
        with self._lock:
            if det_id not in self._row_of:
                raise UnknownReference(det_id)
            scorable = [c for c in self.learned_clusters if c.mean_intra_dist > 0.0]
            if not scorable:
                raise NoClusters("run the pipeline (or recompute) before asking for suggestions")
            det = self.ds.get(det_id)
            ranked = stage5_adaptive_score(self.learned_vector(det_id), scorable)
            return [
                (label, score, hierarchy_match(det.ensemble_label, label), score < self.cfg.tau)
                for label, score in ranked
            ]

    def image_path(self, image_id: str) -> Path | None:
        if self.images_dir is None or not image_id:
            return None
        for suffix in _IMAGE_SUFFIXES:
            candidate = self.images_dir / f"{image_id}{suffix}"
            if candidate.is_file():
                return candidate
        return None

    # -- mutations ---------------------------------------------------------

    def apply_override(self, det_id: str, label: Label) -> int:
        """Record a human label, journal it, and bump the revision.

        The label must be a species-level taxon: overrides feed the anchor
        set, and anchors carry species.
        """
        if not (label.is_taxon and label.taxon.is_species_level):
            raise MalformedLabel("override labels must be species-level taxon paths")
        with self._lock:
            if det_id not in self._row_of:
                raise UnknownReference(det_id)
            if self.journal_path is not None:
                self.journal_path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.journal_path, "a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps(
                            {"detection_id": det_id, "label": label.render()},
                            separators=(",", ":"),
                        )
                        + "\n"
                    )
            self.overrides[det_id] = label.taxon
            self.revision += 1
            return self.revision

    def recompute(self, retrain: bool) -> int:
        """Rebuild clusters from anchors plus overrides; optionally retrain.

        Exclusive: a second concurrent call fails with RecomputeBusy rather
        than queueing.
        """
        if not self._recompute_gate.acquire(blocking=False):
            raise RecomputeBusy("a recompute is already running")
        try:
            groups = self._anchor_groups()
            if retrain:
                net = train(groups, self.cfg.train).net
            else:
                net = None
            with self._lock:
                if net is not None:
                    self.net = net
                    self._project_all()
                self._rebuild_clusters()
                self.revision += 1
                return self.revision
        finally:
            self._recompute_gate.release()
