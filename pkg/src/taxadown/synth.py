"""Synthetic desk-scale datasets with known ground truth.

Each species is an isotropic Gaussian cluster around a seeded unit direction
in R^768, rescaled to realistic embedding norms. Detections are assigned
roles — high-confidence species prediction, sub-threshold species prediction,
generic "animal"/"mammal" label, or blank — while ground truth always names
the generating species, so pipeline accuracy can be checked exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SpecInvalid
from .ingest import EMBEDDING_DIM, Dataset, Detection, PreEnsembleEntry
from .taxonomy import ANIMAL_KINGDOM, BLANK, Label, TaxonPath, parse_label

ROLE_HIGH_CONF = "high_conf"
ROLE_SUB_THRESHOLD = "sub_threshold"
ROLE_GENERIC = "generic"
ROLE_BLANK = "blank"

MAMMAL_CLASS = TaxonPath(kingdom="animalia", class_="mammalia", common_name="mammal")

DEFAULT_SPECIES = (
    "animalia;mammalia;carnivora;felidae;panthera;leo;lion",
    "animalia;mammalia;carnivora;felidae;panthera;pardus;leopard",
    "animalia;mammalia;proboscidea;elephantidae;loxodonta;africana;african bush elephant",
    "animalia;mammalia;perissodactyla;equidae;equus;quagga;plains zebra",
    "animalia;mammalia;carnivora;hyaenidae;crocuta;crocuta;spotted hyena",
)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic dataset.

    ``species`` pairs each species path with the seed of its cluster mean
    direction. Role fractions apply per species; whatever they leave over
    becomes sub-threshold species predictions. ``overlap_angle_deg`` is the
    hard mode: it places the second species' mean at that angle from the
    first, forcing genuinely ambiguous candidates.
    """

    species: tuple[tuple[TaxonPath, int], ...]
    per_species_count: int = 60
    noise_sigma: float = 0.05
    frac_high_conf: float = 0.4
    frac_generic: float = 0.3
    frac_blank: float = 0.1
    seed: int = 42
    overlap_angle_deg: float | None = None

    def __post_init__(self):
        if len(self.species) < 2:
            raise SpecInvalid(f"need >= 2 species, got {len(self.species)}")
        if self.per_species_count < 10:
            raise SpecInvalid(
                f"per_species_count must be >= 10 so clusters can form, got {self.per_species_count}"
            )
        if self.noise_sigma <= 0:
            raise SpecInvalid("noise_sigma must be positive")
        for name in ("frac_high_conf", "frac_generic", "frac_blank"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SpecInvalid(f"{name} out of [0, 1]: {value}")
        if self.frac_high_conf + self.frac_generic + self.frac_blank > 1.0 + 1e-9:
            raise SpecInvalid("role fractions sum to more than 1")
        seen = set()
        for path, _ in self.species:
            if not path.is_species_level:
                raise SpecInvalid(f"species entries must be species-level: {path.render()}")
            if path in seen:
                raise SpecInvalid(f"duplicate species: {path.render()}")
            seen.add(path)


def default_spec(seed: int = 42, **overrides) -> SynthSpec:
    """Five African-savanna mammals with seeded mean directions."""
    species = tuple(
        (parse_label(s).taxon, 1000 + i) for i, s in enumerate(DEFAULT_SPECIES)
    )
    return SynthSpec(species=species, seed=seed, **overrides)


def load_spec(path: str | Path) -> SynthSpec:
    """Read a SynthSpec from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        species = []
        for entry in raw["species"]:
            label = parse_label(entry["path"])
            if not label.is_taxon:
                raise SpecInvalid(f"species entries must be taxon paths: {entry['path']!r}")
            species.append((label.taxon, int(entry["mean_seed"])))
        species = tuple(species)
        kwargs = {
            key: raw[key]
            for key in (
                "per_species_count",
                "noise_sigma",
                "frac_high_conf",
                "frac_generic",
                "frac_blank",
                "seed",
                "overlap_angle_deg",
            )
            if key in raw
        }
    except (KeyError, TypeError) as exc:
        raise SpecInvalid(f"bad synth spec {path}: {exc}") from exc
    return SynthSpec(species=species, **kwargs)


def _role_counts(spec: SynthSpec) -> dict[str, int]:
    n = spec.per_species_count
    high = round(n * spec.frac_high_conf)
    generic = round(n * spec.frac_generic)
    blank = round(n * spec.frac_blank)
    if high + generic + blank > n:
        raise SpecInvalid("role fractions leave no room after rounding")
    return {
        ROLE_HIGH_CONF: high,
        ROLE_GENERIC: generic,
        ROLE_BLANK: blank,
        ROLE_SUB_THRESHOLD: n - high - generic - blank,
    }


def _mean_directions(spec: SynthSpec) -> list[np.ndarray]:
    means = []
    for path, mean_seed in spec.species:
        rng = np.random.default_rng(mean_seed)
        direction = rng.standard_normal(EMBEDDING_DIM)
        means.append(direction / np.linalg.norm(direction))
    if spec.overlap_angle_deg is not None:
        theta = math.radians(spec.overlap_angle_deg)
        base = means[0]
        other = means[1] - np.dot(means[1], base) * base
        other /= np.linalg.norm(other)
        means[1] = math.cos(theta) * base + math.sin(theta) * other
    return means


def _make_top5(gt_index: int, paths: list[TaxonPath], lead_score: float, rng, blank: bool):
    """Top-5 list consistent with the role: the generating species leads
    non-blank detections; blanks get a shuffled low-score list."""
    if blank:
        order = list(rng.permutation(len(paths)))
        score = float(rng.uniform(0.05, 0.2))
    else:
        order = [gt_index] + [int(i) for i in rng.permutation(len(paths)) if i != gt_index]
        score = lead_score
    entries = []
    for idx in order[:5]:
        entries.append(PreEnsembleEntry(label=paths[idx], score=round(score, 6)))
        score *= float(rng.uniform(0.3, 0.8))
    return tuple(entries)


def generate(spec: SynthSpec) -> Dataset:
    """Build the synthetic dataset; deterministic for a given spec."""
    counts = _role_counts(spec)
    means = _mean_directions(spec)
    paths = [path for path, _ in spec.species]
    rng = np.random.default_rng(spec.seed)

    detections: list[Detection] = []
    for s_idx, (path, _) in enumerate(spec.species):
        roles = (
            [ROLE_HIGH_CONF] * counts[ROLE_HIGH_CONF]
            + [ROLE_GENERIC] * counts[ROLE_GENERIC]
            + [ROLE_BLANK] * counts[ROLE_BLANK]
            + [ROLE_SUB_THRESHOLD] * counts[ROLE_SUB_THRESHOLD]
        )
        rng.shuffle(roles)
        for j, role in enumerate(roles):
            vec = means[s_idx] + rng.normal(scale=spec.noise_sigma, size=EMBEDDING_DIM)
            vec = vec / np.linalg.norm(vec) * rng.uniform(8.0, 12.0)

            if role == ROLE_HIGH_CONF:
                score = float(rng.uniform(0.8, 1.0))
                label = Label.of(path)
                top5 = _make_top5(s_idx, paths, score, rng, blank=False)
            elif role == ROLE_SUB_THRESHOLD:
                score = float(rng.uniform(0.3, 0.8))
                label = Label.of(path)
                top5 = _make_top5(s_idx, paths, score, rng, blank=False)
            elif role == ROLE_GENERIC:
                score = float(rng.uniform(0.4, 0.9))
                generic = ANIMAL_KINGDOM if rng.integers(2) == 0 else MAMMAL_CLASS
                label = Label.of(generic)
                top5 = _make_top5(s_idx, paths, float(rng.uniform(0.2, 0.5)), rng, blank=False)
            else:
                score = float(rng.uniform(0.5, 1.0))
                label = BLANK
                top5 = _make_top5(s_idx, paths, 0.0, rng, blank=True)

            detections.append(
                Detection(
                    id=f"det-{s_idx:02d}-{j:03d}",
                    image_id=f"img-{s_idx:02d}-{j:03d}",
                    ensemble_label=label,
                    ensemble_score=round(score, 6),
                    top5=top5,
                    embedding=vec.astype(np.float32),
                    ground_truth=Label.of(path),
                )
            )

    order = rng.permutation(len(detections))
    shuffled = [detections[i] for i in order]
    return Dataset(detections=shuffled, source_uri=f"synth:seed={spec.seed}")
