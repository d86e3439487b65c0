from __future__ import annotations

import numpy as np
import pytest

from taxadown.errors import MissingGroundTruth
from taxadown.ingest import Dataset, Detection
from taxadown.pipeline import DecidedBy, PipelineOutcome
from taxadown.report import accuracy_percent, build_report, grade, render_report, write_report_json
from taxadown.taxonomy import BLANK, Label, parse_label

LION = parse_label("animalia;mammalia;carnivora;felidae;panthera;leo;lion")
LEOPARD = parse_label("animalia;mammalia;carnivora;felidae;panthera;pardus;leopard")
WEAVER = parse_label("animalia;aves;passeriformes;ploceidae;ploceus;velatus;weaver")
AVES = parse_label("animalia;aves;;;;;bird")
ANIMAL = parse_label("animalia;;;;;;animal")
MAMMAL = parse_label("animalia;mammalia;;;;;mammal")

_counter = 0


def _entry(pool: Label, final: Label, gt: Label):
    """One (outcome, detection) pair for report fixtures."""
    global _counter
    _counter += 1
    det_id = f"r{_counter:05d}"
    det = Detection(
        id=det_id,
        image_id=f"img-{det_id}",
        ensemble_label=pool,
        ensemble_score=0.5,
        top5=(),
        embedding=np.ones(3, dtype=np.float32),
        ground_truth=gt,
    )
    out = PipelineOutcome(
        detection_id=det_id,
        original_label=pool,
        final_label=final,
        decided_by=DecidedBy.STAGE5,
        score=0.5,
        nearest_label=final.taxon,
        audit=["stage5: re-classified"],
    )
    return out, det


def _pool_entries(pool, species_ok, species_bad, class_ok):
    entries = []
    entries += [_entry(pool, LION, LION) for _ in range(species_ok)]
    entries += [_entry(pool, LION, LEOPARD) for _ in range(species_bad)]
    entries += [_entry(pool, AVES, WEAVER) for _ in range(class_ok)]
    return entries


@pytest.fixture
def headline_fixture():
    """Pool counts that reproduce the published desk-validation table:
    341/334 (97.9%), 81/79 (97.5%), 34/27 (79.4%), totals 456/440 (96.5%)."""
    entries = []
    entries += _pool_entries(ANIMAL, species_ok=214, species_bad=7, class_ok=120)
    entries += _pool_entries(MAMMAL, species_ok=51, species_bad=2, class_ok=28)
    entries += _pool_entries(BLANK, species_ok=15, species_bad=7, class_ok=12)
    outcomes = [o for o, _ in entries]
    ds = Dataset(detections=[d for _, d in entries], source_uri="fixture")
    return outcomes, ds


class TestGrade:
    def test_species_final_requires_full_species_match(self):
        assert grade(LION, LION) is True
        assert grade(LION, LEOPARD) is False

    def test_class_final_graded_at_class(self):
        assert grade(AVES, WEAVER) is True
        assert grade(AVES, LION) is False

    def test_blank_or_missing_ground_truth_is_incorrect(self):
        assert grade(LION, BLANK) is False
        assert grade(LION, None) is False


class TestBuildReport:
    def test_headline_arithmetic(self, headline_fixture):
        outcomes, ds = headline_fixture
        report = build_report(outcomes, ds)
        rows = {s.pool.render(): s for s in report.pools}

        animal = rows[ANIMAL.render()]
        assert (animal.reclassified, animal.to_species, animal.correct, animal.incorrect) == (341, 221, 334, 7)
        assert accuracy_percent(animal.correct, animal.reclassified) == "97.9"

        mammal = rows[MAMMAL.render()]
        assert (mammal.reclassified, mammal.to_species, mammal.correct, mammal.incorrect) == (81, 53, 79, 2)
        assert accuracy_percent(mammal.correct, mammal.reclassified) == "97.5"

        blank = rows[BLANK.render()]
        assert (blank.reclassified, blank.to_species, blank.correct, blank.incorrect) == (34, 22, 27, 7)
        assert accuracy_percent(blank.correct, blank.reclassified) == "79.4"

        t = report.totals
        assert (t.reclassified, t.to_species, t.correct, t.incorrect) == (456, 296, 440, 16)
        assert accuracy_percent(t.correct, t.reclassified) == "96.5"

    def test_rows_ordered_by_volume(self, headline_fixture):
        outcomes, ds = headline_fixture
        report = build_report(outcomes, ds)
        assert [s.reclassified for s in report.pools] == [341, 81, 34]

    def test_column_sums_match_totals(self, headline_fixture):
        outcomes, ds = headline_fixture
        report = build_report(outcomes, ds)
        assert sum(s.reclassified for s in report.pools) == report.totals.reclassified
        assert sum(s.correct for s in report.pools) == report.totals.correct
        for s in report.pools:
            assert s.correct + s.incorrect == s.reclassified

    def test_missing_ground_truth_lists_ids(self):
        out, det = _entry(ANIMAL, LION, LION)
        det_no_gt = Detection(
            id=det.id,
            image_id=det.image_id,
            ensemble_label=det.ensemble_label,
            ensemble_score=det.ensemble_score,
            top5=det.top5,
            embedding=det.embedding,
            ground_truth=None,
        )
        with pytest.raises(MissingGroundTruth) as err:
            build_report([out], Dataset(detections=[det_no_gt]))
        assert err.value.ids == [det.id]

    def test_non_reclassifying_outcomes_need_no_ground_truth(self):
        out, det = _entry(ANIMAL, ANIMAL, LION)
        out.decided_by = DecidedBy.ROLLUP_ANIMAL
        det.ground_truth = None
        report = build_report([out], Dataset(detections=[det]))
        assert report.pools == ()
        assert report.funnel == {"rollup_animal": 1}

    def test_funnel_counts_every_stage(self, headline_fixture):
        outcomes, ds = headline_fixture
        report = build_report(outcomes, ds)
        assert report.funnel == {"stage5": 456}


class TestRender:
    def test_numeric_cells_match_fixture(self, headline_fixture):
        outcomes, ds = headline_fixture
        text = render_report(build_report(outcomes, ds))
        for token in ("341", "221", "334", "97.9%", "81", "97.5%", "34", "79.4%", "456", "296", "440", "96.5%"):
            assert token in text

    def test_empty_report_is_header_and_totals(self):
        report = build_report([], Dataset(detections=[]))
        text = render_report(report)
        assert "Original Label" in text
        assert "Total" in text
        assert "0.0%" in text

    def test_render_is_byte_stable(self, headline_fixture):
        outcomes, ds = headline_fixture
        report = build_report(outcomes, ds)
        assert render_report(report) == render_report(report)

    def test_json_write_is_byte_stable(self, headline_fixture, tmp_path):
        outcomes, ds = headline_fixture
        report = build_report(outcomes, ds)
        p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
        write_report_json(report, p1)
        write_report_json(report, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestRounding:
    def test_half_up_at_one_decimal(self):
        assert accuracy_percent(13, 80) == "16.3"  # 16.25 rounds up, not to even
        assert accuracy_percent(334, 341) == "97.9"
        assert accuracy_percent(79, 81) == "97.5"
        assert accuracy_percent(27, 34) == "79.4"
        assert accuracy_percent(440, 456) == "96.5"

    def test_zero_total(self):
        assert accuracy_percent(0, 0) == "0.0"
