"""Core domain types shared by every pipeline stage.

All types are immutable values and safe to share between threads. Free-text
variable names are compared through :class:`CanonicalName`, which normalizes
text once and keeps the original spellings as audit metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

_TERMINAL_PUNCT = ".,;:!?"


class InvalidName(ValueError):
    """Raised when a raw string has no usable content to canonicalize."""


def normalize_name(raw: str) -> str:
    """Normalize a free-text name to its canonical spelling.

    Lowercase (Unicode-aware), trim, collapse internal whitespace runs to a
    single space, and strip terminal ``.,;:!?``. The transform is applied
    until it reaches a fixed point, so the result always normalizes to
    itself. Punctuation-only input normalizes to the empty string.
    """
    text = raw
    while True:
        collapsed = " ".join(text.lower().split())
        stripped = collapsed.rstrip(_TERMINAL_PUNCT + " ")
        if stripped == text:
            return stripped
        text = stripped


@dataclass(frozen=True)
class CanonicalName:
    """A normalized name plus the surface spellings it was seen under.

    Equality and hashing use only the canonical string; surface forms are
    audit metadata.
    """

    canonical: str
    surface_forms: frozenset[str] = field(compare=False)

    def __post_init__(self) -> None:
        if normalize_name(self.canonical) != self.canonical:
            raise InvalidName(f"not a canonical spelling: {self.canonical!r}")
        if not self.surface_forms:
            raise InvalidName("surface_forms must be non-empty")
        for form in self.surface_forms:
            if normalize_name(form) != self.canonical:
                raise InvalidName(
                    f"surface form {form!r} does not normalize to {self.canonical!r}"
                )

    def merged_with(self, other: CanonicalName) -> CanonicalName:
        """Union the surface forms of two names for the same canonical."""
        if other.canonical != self.canonical:
            raise ValueError("cannot merge names with different canonicals")
        return CanonicalName(self.canonical, self.surface_forms | other.surface_forms)

    def to_record(self) -> dict:
        return {
            "canonical": self.canonical,
            "surface_forms": sorted(self.surface_forms),
        }

    @classmethod
    def from_record(cls, record: dict) -> CanonicalName:
        return cls(record["canonical"], frozenset(record["surface_forms"]))

    def __str__(self) -> str:
        return self.canonical


def canonicalize_name(raw: str) -> CanonicalName:
    """Build a :class:`CanonicalName` from a raw spelling.

    Deterministic and idempotent: case variants of the same name map to the
    same canonical. Raises :class:`InvalidName` when the input is empty after
    trimming or contains nothing but whitespace and punctuation.
    """
    if not raw.strip():
        raise InvalidName("name is empty after trimming")
    canonical = normalize_name(raw)
    if not canonical:
        raise InvalidName(f"name has no content after normalization: {raw!r}")
    return CanonicalName(canonical, frozenset({raw}))


class VariableKind(str, Enum):
    TREATMENT = "treatment"
    OUTCOME = "outcome"
    CONFOUNDER = "confounder"
    INSTRUMENT = "instrument"
    EFFECT_MODIFIER = "effect_modifier"


class Provenance(str, Enum):
    MENTIONED_IN_TEXT = "mentioned_in_text"
    MENTIONED_IN_EXEMPLARS = "mentioned_in_exemplars"
    INFERRED = "inferred"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CausalVariable:
    """A named variable with its causal role.

    Confounders cause both the treatment and the outcome; instruments cause
    the treatment but do not directly affect the outcome; effect modifiers
    cause the outcome but do not directly affect the treatment.
    """

    name: CanonicalName
    kind: VariableKind
    provenance: Provenance = Provenance.UNKNOWN

    def to_record(self) -> dict:
        return {
            "name": self.name.to_record(),
            "kind": self.kind.value,
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_record(cls, record: dict) -> CausalVariable:
        return cls(
            CanonicalName.from_record(record["name"]),
            VariableKind(record["kind"]),
            Provenance(record["provenance"]),
        )


@dataclass(frozen=True)
class EventChain:
    """An ordered sequence of at least two events leading to an outcome."""

    nodes: tuple[CanonicalName, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise ValueError("a chain needs at least 2 nodes")
        for a, b in zip(self.nodes, self.nodes[1:]):
            if a.canonical == b.canonical:
                raise ValueError(f"consecutive duplicate node: {a.canonical!r}")

    @property
    def key(self) -> tuple[str, ...]:
        return tuple(node.canonical for node in self.nodes)

    def to_record(self) -> dict:
        return {"nodes": [node.to_record() for node in self.nodes]}

    @classmethod
    def from_record(cls, record: dict) -> EventChain:
        return cls(tuple(CanonicalName.from_record(n) for n in record["nodes"]))


def chain_length(chain: EventChain) -> int:
    """Node count of a chain; the unit of the sequence-length heuristic."""
    return len(chain.nodes)


@dataclass(frozen=True)
class VariableTriple:
    """One extracted (treatment, outcome) claim with its confounder set."""

    treatment: CanonicalName
    outcome: CanonicalName
    confounders: frozenset[CausalVariable] = frozenset()

    def __post_init__(self) -> None:
        if self.treatment.canonical == self.outcome.canonical:
            raise ValueError("treatment and outcome must differ")

    @property
    def pair(self) -> tuple[str, str]:
        return (self.treatment.canonical, self.outcome.canonical)

    def to_record(self) -> dict:
        return {
            "treatment": self.treatment.to_record(),
            "outcome": self.outcome.to_record(),
            "confounders": sorted(
                (v.to_record() for v in self.confounders),
                key=lambda r: (r["name"]["canonical"], r["kind"]),
            ),
        }

    @classmethod
    def from_record(cls, record: dict) -> VariableTriple:
        return cls(
            CanonicalName.from_record(record["treatment"]),
            CanonicalName.from_record(record["outcome"]),
            frozenset(CausalVariable.from_record(v) for v in record["confounders"]),
        )


@dataclass(frozen=True)
class FeedbackItem:
    """One user feedback report."""

    id: str
    text: str
    source: str | None = None
    received_at: str | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("feedback id must be non-empty")
        if not self.text.strip():
            raise ValueError(f"feedback {self.id!r} has empty text")
        if self.received_at is not None:
            try:
                datetime.fromisoformat(self.received_at)
            except ValueError as exc:
                raise ValueError(
                    f"feedback {self.id!r}: received_at is not ISO-8601: "
                    f"{self.received_at!r}"
                ) from exc

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "source": self.source,
            "received_at": self.received_at,
            "label": self.label,
        }

    @classmethod
    def from_record(cls, record: dict) -> FeedbackItem:
        return cls(
            id=record["id"],
            text=record["text"],
            source=record.get("source"),
            received_at=record.get("received_at"),
            label=record.get("label"),
        )


class CorpusParseError(ValueError):
    """Raised when a feedback corpus file cannot be read at all."""


def dump_record(record: dict) -> str:
    """One deterministic JSON line for a record dict."""
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def read_corpus(path: str | Path) -> tuple[list[FeedbackItem], list[tuple[int, str]]]:
    """Read a line-delimited feedback corpus.

    Returns the parsed items plus a list of (line_number, error) entries for
    lines that were skipped. Duplicate ids are a skip, not a crash. Raises
    :class:`CorpusParseError` if the file is missing or no line parses.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusParseError(f"corpus file not found: {path}")
    items: list[FeedbackItem] = []
    seen_ids: set[str] = set()
    skipped: list[tuple[int, str]] = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                item = FeedbackItem.from_record(record)
            except (ValueError, KeyError, TypeError) as exc:
                skipped.append((lineno, str(exc)))
                continue
            if item.id in seen_ids:
                skipped.append((lineno, f"duplicate id {item.id!r}"))
                continue
            seen_ids.add(item.id)
            items.append(item)
    if not items and skipped:
        raise CorpusParseError(f"no parseable feedback records in {path}")
    return items, skipped


def write_corpus(path: str | Path, items: Iterable[FeedbackItem]) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for item in items:
            handle.write(dump_record(item.to_record()) + "\n")


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield json.loads(line)
