"""Structural code taxonomy: maps surface tokens to code-concept categories.

A taxonomy is an ordered list of named categories, each owning a disjoint set
of token strings. Anything not listed (identifiers, literals) is unmapped and
represented by ``None``.

The document format is JSON::

    {"version": "java-1.0", "categories": {"blocks": ["{", "}"], ...}}
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

from .errors import (
    EmptyCategoryError,
    EmptySequenceError,
    EmptyTokenError,
    OverlapError,
    ParseError,
)

#: Marker returned for tokens that belong to no category.
UNMAPPED = None

DEFAULT_TAXONOMY_ENV = "DOCODE_DEFAULT_TAXONOMY"


@dataclass(frozen=True)
class Taxonomy:
    categories: tuple[tuple[str, frozenset[str]], ...]
    version: str = "unversioned"
    _index: dict[str, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.categories:
            raise EmptyCategoryError("taxonomy declares no categories")
        index: dict[str, str] = {}
        seen_names = set()
        for name, tokens in self.categories:
            if not name or any(ch.isspace() for ch in name):
                raise ParseError(f"invalid category name {name!r}")
            if name in seen_names:
                raise ParseError(f"duplicate category {name!r}")
            seen_names.add(name)
            if not tokens:
                raise EmptyCategoryError(f"category {name!r} has no tokens")
            for tok in tokens:
                if tok in index:
                    raise OverlapError(
                        f"token {tok!r} listed in both {index[tok]!r} and {name!r}"
                    )
                index[tok] = name
        object.__setattr__(self, "_index", index)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.categories]

    def tokens_of(self, name: str) -> frozenset[str]:
        for cat, tokens in self.categories:
            if cat == name:
                return tokens
        raise KeyError(name)

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "categories": {name: sorted(tokens) for name, tokens in self.categories},
        }
        return json.dumps(doc, indent=2)


def _reject_duplicate_keys(pairs):
    keys = [k for k, _ in pairs]
    dupes = {k for k in keys if keys.count(k) > 1}
    if dupes:
        raise ParseError(f"duplicate keys in taxonomy document: {sorted(dupes)}")
    return dict(pairs)


def load_taxonomy(config_text: str) -> Taxonomy:
    """Parse and validate a taxonomy document.

    Raises ParseError for malformed documents, OverlapError when a token is
    claimed by two categories and EmptyCategoryError for empty categories or
    an empty category map.
    """
    try:
        doc = json.loads(config_text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ParseError(f"taxonomy is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("categories"), dict):
        raise ParseError('taxonomy must be an object with a "categories" object')
    version = doc.get("version", "unversioned")
    if not isinstance(version, str):
        raise ParseError('"version" must be a string')

    categories = []
    for name, tokens in doc["categories"].items():
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise ParseError(f"category {name!r} must map to a list of strings")
        cleaned = {t.strip() for t in tokens}
        if "" in cleaned:
            raise ParseError(f"category {name!r} contains an empty token")
        categories.append((name, frozenset(cleaned)))
    return Taxonomy(tuple(categories), version)


def default_taxonomy() -> Taxonomy:
    """The bundled Java taxonomy, or the file named by ``DOCODE_DEFAULT_TAXONOMY``."""
    override = os.environ.get(DEFAULT_TAXONOMY_ENV)
    if override:
        with open(override, encoding="utf-8") as fh:
            return load_taxonomy(fh.read())
    return load_taxonomy(bundled_taxonomy_text())


def bundled_taxonomy_text() -> str:
    return resources.files("docode").joinpath("data/default_taxonomy.json").read_text("utf-8")


def map_token(taxonomy: Taxonomy, token: str) -> str | None:
    """Category owning ``token`` (exact match after trimming), else ``None``."""
    key = token.strip()
    if not key:
        raise EmptyTokenError()
    return taxonomy._index.get(key, UNMAPPED)


def map_sequence(taxonomy: Taxonomy, tokens: Sequence[str]) -> list[str | None]:
    if len(tokens) == 0:
        raise EmptySequenceError("cannot map an empty token sequence")
    out = []
    for i, tok in enumerate(tokens):
        try:
            out.append(map_token(taxonomy, tok))
        except EmptyTokenError:
            raise EmptyTokenError(index=i) from None
    return out


def category_positions(taxonomy: Taxonomy, tokens: Iterable[str]) -> dict[str, list[int]]:
    """Token positions grouped by category, in taxonomy order. Unmapped tokens are skipped."""
    mapped = map_sequence(taxonomy, list(tokens))
    groups: dict[str, list[int]] = {}
    for i, cat in enumerate(mapped):
        if cat is not UNMAPPED:
            groups.setdefault(cat, []).append(i)
    return {name: groups[name] for name in taxonomy.names if name in groups}
