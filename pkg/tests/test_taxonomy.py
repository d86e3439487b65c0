from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from taxadown.errors import MalformedLabel
from taxadown.taxonomy import (
    BLANK,
    RANKS,
    UNKNOWN,
    Label,
    TaxonPath,
    hierarchy_match,
    is_bird,
    parse_label,
    render_label,
)

LION = TaxonPath("animalia", "mammalia", "carnivora", "felidae", "panthera", "leo", "lion")
OSTRICH = TaxonPath(
    "animalia", "aves", "struthioniformes", "struthionidae", "struthio", "camelus", "ostrich"
)


class TestParseLabel:
    def test_kingdom_only_animal(self):
        label = parse_label("animalia;;;;;;animal")
        assert label.is_taxon
        assert label.taxon.kingdom == "animalia"
        assert label.taxon.level() == "kingdom"
        assert label.taxon.common_name == "animal"

    def test_blank_sentinel(self):
        assert parse_label("blank") is BLANK

    def test_unknown_sentinel(self):
        assert parse_label("unknown") is UNKNOWN

    def test_full_species_path(self):
        label = parse_label("animalia;mammalia;carnivora;felidae;panthera;leo;lion")
        assert label.taxon.level() == "species"
        assert label.taxon == LION

    def test_rank_fields_lowercased(self):
        label = parse_label("Animalia;Mammalia;;;;;")
        assert label.taxon.kingdom == "animalia"
        assert label.taxon.class_ == "mammalia"

    def test_missing_trailing_fields_allowed(self):
        label = parse_label("animalia")
        assert label.taxon.level() == "kingdom"

    def test_gap_in_rank_fill_rejected(self):
        with pytest.raises(MalformedLabel):
            parse_label("animalia;;carnivora;;;;")

    def test_empty_kingdom_rejected(self):
        with pytest.raises(MalformedLabel):
            parse_label(";mammalia;;;;;")
        with pytest.raises(MalformedLabel):
            parse_label(";;;;;;animal")

    def test_too_many_fields_rejected(self):
        with pytest.raises(MalformedLabel):
            parse_label("a;b;c;d;e;f;g;h")

    def test_empty_string_rejected(self):
        with pytest.raises(MalformedLabel):
            parse_label("")
        with pytest.raises(MalformedLabel):
            parse_label("   ")


class TestHierarchyMatch:
    def test_class_level_mammal_matches_lion(self):
        original = Label.of(TaxonPath("animalia", "mammalia", common_name="mammal"))
        assert hierarchy_match(original, LION) is True

    def test_class_level_bird_rejects_lion(self):
        original = Label.of(TaxonPath("animalia", "aves", common_name="bird"))
        assert hierarchy_match(original, LION) is False

    def test_blank_matches_any_candidate(self):
        assert hierarchy_match(BLANK, LION) is True
        assert hierarchy_match(BLANK, OSTRICH) is True

    def test_unknown_matches_any_candidate(self):
        assert hierarchy_match(UNKNOWN, LION) is True

    def test_kingdom_level_matches_same_kingdom(self):
        original = Label.of(TaxonPath("animalia", common_name="animal"))
        assert hierarchy_match(original, LION) is True

    def test_species_level_requires_full_match(self):
        leopard = TaxonPath(
            "animalia", "mammalia", "carnivora", "felidae", "panthera", "pardus", "leopard"
        )
        assert hierarchy_match(Label.of(LION), LION) is True
        assert hierarchy_match(Label.of(LION), leopard) is False


class TestIsBird:
    def test_lion_is_not_bird(self):
        assert is_bird(LION) is False

    def test_ostrich_is_bird(self):
        assert is_bird(OSTRICH) is True

    def test_kingdom_only_path_is_not_bird(self):
        assert is_bird(TaxonPath("animalia", common_name="animal")) is False


# -- property tests ----------------------------------------------------------

_token = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=8)


@st.composite
def taxon_paths(draw, min_depth=1, max_depth=6):
    depth = draw(st.integers(min_value=min_depth, max_value=max_depth))
    values = [draw(_token) for _ in range(depth)] + [""] * (6 - depth)
    common = draw(st.one_of(st.just(""), _token))
    return TaxonPath(*values, common_name=common)


@st.composite
def labels(draw):
    choice = draw(st.integers(min_value=0, max_value=3))
    if choice == 0:
        return BLANK
    if choice == 1:
        return UNKNOWN
    return Label.of(draw(taxon_paths()))


@given(labels())
def test_parse_render_round_trip(label):
    assert parse_label(render_label(label)) == label


@given(taxon_paths(min_depth=6))
def test_hierarchy_match_reflexive_on_species(path):
    assert hierarchy_match(Label.of(path), path) is True


@given(taxon_paths(min_depth=6), st.integers(min_value=0, max_value=5))
def test_hierarchy_match_monotone_under_truncation(path, rank_idx):
    trunc = path.truncate(RANKS[rank_idx])
    assert hierarchy_match(Label.of(trunc), path) is True


@given(taxon_paths())
def test_level_is_deepest_nonempty_rank(path):
    values = path.rank_values()
    deepest = max(i for i, v in enumerate(values) if v)
    assert path.level() == RANKS[deepest]
    assert all(not v for v in values[deepest + 1 :])
