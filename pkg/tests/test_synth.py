from __future__ import annotations

import numpy as np
import pytest

from taxadown.embedspace import cosine_distance
from taxadown.errors import SpecInvalid
from taxadown.ingest import load_manifest, save_manifest
from taxadown.synth import SynthSpec, default_spec, generate, load_spec
from taxadown.taxonomy import parse_label


class TestSpecValidation:
    def test_single_species_rejected(self):
        species = (default_spec().species[0],)
        with pytest.raises(SpecInvalid):
            SynthSpec(species=species)

    def test_fraction_overflow_rejected(self):
        with pytest.raises(SpecInvalid):
            default_spec(frac_high_conf=0.6, frac_generic=0.4, frac_blank=0.2)

    def test_tiny_per_species_count_rejected(self):
        with pytest.raises(SpecInvalid):
            default_spec(per_species_count=9)

    def test_non_species_entry_rejected(self):
        kingdom = parse_label("animalia;;;;;;animal").taxon
        with pytest.raises(SpecInvalid):
            SynthSpec(species=((kingdom, 1), (default_spec().species[0][0], 2)))


class TestGenerate:
    def test_role_arithmetic(self):
        ds = generate(default_spec())
        assert len(ds) == 300
        high_conf = [
            d
            for d in ds.detections
            if d.ensemble_label.is_taxon
            and d.ensemble_label.taxon.is_species_level
            and d.ensemble_score >= 0.8
        ]
        assert len(high_conf) == 120  # anchors by construction
        blanks = [d for d in ds.detections if d.ensemble_label.is_blank]
        assert len(blanks) == 30
        generic = [
            d
            for d in ds.detections
            if d.ensemble_label.is_taxon and not d.ensemble_label.taxon.is_species_level
        ]
        assert len(generic) == 90

    def test_deterministic(self):
        d1, d2 = generate(default_spec()), generate(default_spec())
        assert [d.id for d in d1.detections] == [d.id for d in d2.detections]
        for a, b in zip(d1.detections, d2.detections):
            assert a.ensemble_label == b.ensemble_label
            assert a.ensemble_score == b.ensemble_score
            np.testing.assert_array_equal(a.embedding, b.embedding)

    def test_every_detection_has_ground_truth(self):
        ds = generate(default_spec())
        for det in ds.detections:
            assert det.ground_truth is not None
            assert det.ground_truth.taxon.is_species_level

    def test_top5_leads_with_ground_truth_for_non_blank(self):
        ds = generate(default_spec())
        for det in ds.detections:
            if det.ensemble_label.is_blank:
                continue
            assert det.top5[0].label == det.ground_truth.taxon
            scores = [e.score for e in det.top5]
            assert scores == sorted(scores, reverse=True)

    def test_nearest_ground_truth_mean_is_almost_always_right(self):
        # embedding geometry oracle: brute-force nearest mean on generic-role rows
        spec = default_spec()
        ds = generate(spec)
        from taxadown.synth import _mean_directions

        means = _mean_directions(spec)
        paths = [p for p, _ in spec.species]
        checked = correct = 0
        for det in ds.detections:
            if det.ensemble_label.is_taxon and not det.ensemble_label.taxon.is_species_level:
                dists = [cosine_distance(det.embedding, m) for m in means]
                checked += 1
                correct += paths[int(np.argmin(dists))] == det.ground_truth.taxon
        assert checked == 90
        assert correct / checked >= 0.99

    def test_overlap_angle_places_second_mean(self):
        from taxadown.synth import _mean_directions

        spec = default_spec(overlap_angle_deg=15.0)
        means = _mean_directions(spec)
        angle = np.degrees(np.arccos(np.clip(np.dot(means[0], means[1]), -1, 1)))
        assert abs(angle - 15.0) < 1e-6


class TestRoundTrip:
    def test_manifest_round_trip(self, tmp_path):
        ds = generate(default_spec(per_species_count=12))
        manifest, embeddings = tmp_path / "m.jsonl", tmp_path / "e.f32"
        save_manifest(ds, manifest, embeddings)
        loaded = load_manifest(manifest, embeddings)
        assert len(loaded) == len(ds)
        for a, b in zip(ds.detections, loaded.detections):
            assert a.id == b.id
            assert a.ensemble_label == b.ensemble_label
            assert a.ground_truth == b.ground_truth
            assert a.top5 == b.top5
            np.testing.assert_array_equal(a.embedding, b.embedding)

    def test_spec_file_round_trip(self, tmp_path):
        import json

        spec_path = tmp_path / "spec.json"
        spec_path.write_text(
            json.dumps(
                {
                    "species": [
                        {"path": "animalia;mammalia;carnivora;felidae;panthera;leo;lion", "mean_seed": 1},
                        {"path": "animalia;mammalia;carnivora;felidae;panthera;pardus;leopard", "mean_seed": 2},
                    ],
                    "per_species_count": 20,
                    "seed": 7,
                }
            )
        )
        spec = load_spec(spec_path)
        assert spec.per_species_count == 20
        assert spec.seed == 7
        assert len(spec.species) == 2

    def test_bad_spec_file_rejected(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text('{"species": [{"path": "blank"}]}')
        with pytest.raises(SpecInvalid):
            load_spec(spec_path)
