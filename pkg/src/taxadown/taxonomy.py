"""Taxonomy-path labels, sentinels, and the hierarchy-match predicate.

Labels travel as semicolon-delimited 7-field strings
(kingdom;class;order;family;genus;species;common name) with the sentinel
tokens ``blank`` and ``unknown`` for non-taxon labels. Every re-classification
decision in the pipeline is gated by :func:`hierarchy_match`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MalformedLabel

# Rank names in root-to-leaf order; ``class_`` is the attribute for "class".
RANKS = ("kingdom", "class", "order", "family", "genus", "species")
_RANK_ATTRS = ("kingdom", "class_", "order", "family", "genus", "species")

BLANK_TOKEN = "blank"
UNKNOWN_TOKEN = "unknown"


@dataclass(frozen=True)
class TaxonPath:
    """A taxonomy path filled left to right down to some rank.

    Rank fields are normalized to lowercase; ``common_name`` is free text.
    ``kingdom`` must be non-empty and no empty rank may be followed by a
    non-empty one (``common_name`` is exempt).
    """

    kingdom: str
    class_: str = ""
    order: str = ""
    family: str = ""
    genus: str = ""
    species: str = ""
    common_name: str = ""

    def __post_init__(self):
        values = []
        for attr in _RANK_ATTRS:
            raw = getattr(self, attr)
            if not isinstance(raw, str):
                raise MalformedLabel(f"rank field {attr!r} must be a string")
            values.append(raw.strip().lower())
        if not values[0]:
            raise MalformedLabel("kingdom must be non-empty")
        deepest = max(i for i, v in enumerate(values) if v)
        if any(not v for v in values[:deepest]):
            raise MalformedLabel(
                "rank fields must be filled left to right without gaps: "
                + ";".join(values)
            )
        for attr, v in zip(_RANK_ATTRS, values):
            object.__setattr__(self, attr, v)
        object.__setattr__(self, "common_name", self.common_name.strip())

    def rank_values(self) -> tuple[str, ...]:
        """The six rank fields, root to leaf."""
        return tuple(getattr(self, attr) for attr in _RANK_ATTRS)

    def level(self) -> str:
        """Deepest non-empty rank name, e.g. ``"species"`` or ``"kingdom"``."""
        values = self.rank_values()
        deepest = max(i for i, v in enumerate(values) if v)
        return RANKS[deepest]

    @property
    def is_species_level(self) -> bool:
        return bool(self.species)

    def truncate(self, rank: str) -> TaxonPath:
        """Copy of this path cut off below ``rank`` (common name dropped)."""
        if rank not in RANKS:
            raise ValueError(f"unknown rank {rank!r}")
        keep = RANKS.index(rank) + 1
        values = self.rank_values()
        kept = values[:keep] + ("",) * (len(RANKS) - keep)
        return TaxonPath(*kept)

    def render(self) -> str:
        return ";".join(self.rank_values() + (self.common_name,))

    def display(self) -> str:
        """Short human-readable form: common name, else deepest rank token."""
        if self.common_name:
            return self.common_name
        return self.rank_values()[RANKS.index(self.level())]

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class Label:
    """A detection label: a taxon path or one of the sentinels blank/unknown."""

    kind: str  # "taxon" | "blank" | "unknown"
    taxon: TaxonPath | None = None

    def __post_init__(self):
        if self.kind not in ("taxon", BLANK_TOKEN, UNKNOWN_TOKEN):
            raise MalformedLabel(f"unknown label kind {self.kind!r}")
        if (self.kind == "taxon") != (self.taxon is not None):
            raise MalformedLabel("taxon labels carry a path; sentinels do not")

    @classmethod
    def of(cls, path: TaxonPath) -> Label:
        return cls(kind="taxon", taxon=path)

    @property
    def is_blank(self) -> bool:
        return self.kind == BLANK_TOKEN

    @property
    def is_unknown(self) -> bool:
        return self.kind == UNKNOWN_TOKEN

    @property
    def is_taxon(self) -> bool:
        return self.kind == "taxon"

    def level(self) -> str | None:
        """Rank of the taxon, or None for sentinels."""
        return self.taxon.level() if self.taxon is not None else None

    def render(self) -> str:
        if self.taxon is not None:
            return self.taxon.render()
        return self.kind

    def display(self) -> str:
        return self.taxon.display() if self.taxon is not None else self.kind

    def __str__(self) -> str:
        return self.render()


BLANK = Label(kind=BLANK_TOKEN)
UNKNOWN = Label(kind=UNKNOWN_TOKEN)

# Fallback target when a candidate clears no cluster, and the class-level
# label birds exit with.
ANIMAL_KINGDOM = TaxonPath(kingdom="animalia", common_name="animal")
AVES_CLASS = TaxonPath(kingdom="animalia", class_="aves", common_name="bird")


def parse_label(text: str) -> Label:
    """Parse a wire-format label string.

    The exact tokens ``blank`` and ``unknown`` (case-insensitive) map to the
    sentinels; anything else is split on ``;`` into at most 7 fields, with
    missing trailing fields treated as empty.

    Raises MalformedLabel for empty input, more than 7 fields, or a rank gap.
    """
    stripped = text.strip()
    if not stripped:
        raise MalformedLabel("empty label string")
    lowered = stripped.lower()
    if lowered == BLANK_TOKEN:
        return BLANK
    if lowered == UNKNOWN_TOKEN:
        return UNKNOWN
    parts = stripped.split(";")
    if len(parts) > 7:
        raise MalformedLabel(f"label has {len(parts)} fields, at most 7 allowed: {text!r}")
    parts += [""] * (7 - len(parts))
    return Label.of(TaxonPath(*parts[:6], common_name=parts[6]))


def render_label(label: Label) -> str:
    return label.render()


def hierarchy_match(original: Label, candidate: TaxonPath) -> bool:
    """True when re-classifying ``original`` to ``candidate`` is consistent.

    Every non-empty rank field of the original must equal the candidate's
    field at that rank. Blank and unknown originals carry no constraint and
    match any candidate. Candidates are expected to be species-level (they
    come from species clusters).
    """
    if not original.is_taxon:
        return True
    assert original.taxon is not None
    for own, cand in zip(original.taxon.rank_values(), candidate.rank_values()):
        if own and own != cand:
            return False
    return True


def is_bird(path: TaxonPath) -> bool:
    """True when the path sits inside class Aves."""
    return path.class_ == "aves"
