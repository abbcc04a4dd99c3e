"""AudioSet-style ontology ingestion and tag-universe construction.

The ontology file is a JSON array of class objects; the tag universe is the
ordered subset of classes admitted to phrase matching after restriction
filtering. Matching downstream uses only the class `name`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Union

from .errors import EmptyUniverseError, OntologyFormatError, OntologyValidationError

DEFAULT_EXCLUDE_RESTRICTIONS = frozenset({"abstract"})

Source = Union[str, Path, BinaryIO, bytes]


@dataclass(frozen=True)
class AudioClass:
    """One ontology entry."""

    id: str
    name: str
    description: str = ""
    child_ids: tuple[str, ...] = ()
    restrictions: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "child_ids": list(self.child_ids),
            "restrictions": list(self.restrictions),
        }


@dataclass(frozen=True)
class TagUniverse:
    """Ordered, immutable set of classes admitted to matching."""

    classes: tuple[AudioClass, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.classes]

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.classes]


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def load_ontology(source: Source) -> list[AudioClass]:
    """Parse an ontology JSON array into classes, preserving file order.

    Raises OntologyFormatError for malformed JSON (message carries the byte
    offset) and OntologyValidationError for duplicate ids or child_ids that
    reference no class in the same file.
    """
    raw = _read_bytes(source)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise OntologyFormatError(
            f"malformed ontology JSON at byte offset {e.pos}: {e.msg}"
        ) from e
    if not isinstance(data, list):
        raise OntologyFormatError("ontology JSON must be an array of class objects")

    classes: list[AudioClass] = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise OntologyFormatError(f"ontology entry {i} is not an object")
        try:
            cid = entry["id"]
            name = entry["name"]
        except KeyError as e:
            raise OntologyFormatError(
                f"ontology entry {i} is missing required field {e.args[0]!r}"
            ) from e
        if not isinstance(cid, str) or not cid:
            raise OntologyValidationError(f"ontology entry {i} has an empty or non-string id")
        classes.append(
            AudioClass(
                id=cid,
                name=str(name),
                description=str(entry.get("description") or ""),
                child_ids=tuple(entry.get("child_ids") or ()),
                restrictions=tuple(entry.get("restrictions") or ()),
            )
        )

    seen: set[str] = set()
    for c in classes:
        if c.id in seen:
            raise OntologyValidationError(f"duplicate class id: {c.id}")
        seen.add(c.id)
    for c in classes:
        for child in c.child_ids:
            if child not in seen:
                raise OntologyValidationError(
                    f"class {c.id} references unknown child_id {child}"
                )
    return classes


def dump_ontology(classes: Iterable[AudioClass]) -> bytes:
    """Serialize classes back to the ontology JSON layout (round-trip stable)."""
    return json.dumps([c.to_dict() for c in classes], indent=2).encode("utf-8")


def tag_universe(
    classes: Iterable[AudioClass],
    exclude_restrictions: frozenset[str] | set[str] = DEFAULT_EXCLUDE_RESTRICTIONS,
) -> TagUniverse:
    """Filter classes by restriction and freeze the result, preserving order.

    A class is dropped iff it carries any excluded restriction. An empty
    result raises EmptyUniverseError: with no tags every score is undefined.
    """
    exclude = frozenset(exclude_restrictions)
    admitted = tuple(c for c in classes if not (set(c.restrictions) & exclude))
    if not admitted:
        raise EmptyUniverseError(
            f"no classes left after excluding restrictions {sorted(exclude)}"
        )
    return TagUniverse(classes=admitted)
