"""Prediction logs and parallel-corpora testbeds.

A prediction log is JSON Lines, one method per line::

    {"id": "m1-b", "pair_id": "m1", "arm": "treatment", "tokens": [...],
     "ntp": [...], "source": "..."}

Binary testbeds label each record with an ``arm``; continuous and discrete
testbeds carry a numeric ``dose``. Clone testbeds may omit the dose and carry
``source`` instead, in which case :func:`dose_clone_pairs` derives the dose
as the edit distance between the two clone siblings.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import (
    AlignmentError,
    ArmError,
    KindError,
    MissingSourceError,
    ParseError,
    ProbabilityRangeError,
    UnpairedError,
)

ARMS = ("treatment", "control")
KINDS = ("binary", "continuous", "discrete")


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    pair_id: str
    tokens: tuple[str, ...]
    ntp: tuple[float, ...]
    arm: str | None = None
    dose: float | None = None
    source: str | None = None

    def __post_init__(self):
        if len(self.tokens) == 0:
            raise AlignmentError(f"record {self.id!r} has no tokens")
        if len(self.tokens) != len(self.ntp):
            raise AlignmentError(
                f"record {self.id!r}: {len(self.tokens)} tokens but {len(self.ntp)} probabilities"
            )
        for p in self.ntp:
            if not (0.0 <= p <= 1.0):
                raise ProbabilityRangeError(f"record {self.id!r}: probability {p} outside [0, 1]")
        if self.arm is not None and self.arm not in ARMS:
            raise ArmError(f"record {self.id!r}: unknown arm {self.arm!r}")

    def to_json(self) -> dict:
        doc = {"id": self.id, "pair_id": self.pair_id}
        if self.arm is not None:
            doc["arm"] = self.arm
        if self.dose is not None:
            doc["dose"] = self.dose
        doc["tokens"] = list(self.tokens)
        doc["ntp"] = list(self.ntp)
        if self.source is not None:
            doc["source"] = self.source
        return doc


@dataclass(frozen=True)
class Testbed:
    records: tuple[PredictionRecord, ...]
    intervention_kind: str
    name: str = "testbed"
    #: True once doses were derived from clone siblings; units are then pairs.
    clone_pairs: bool = False

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.intervention_kind not in KINDS:
            raise KindError(f"unknown intervention kind {self.intervention_kind!r}")

    def __len__(self):
        return len(self.records)

    def needs_clone_doses(self) -> bool:
        return self.intervention_kind != "binary" and any(r.dose is None for r in self.records)


def _check_arm_or_dose(rec: PredictionRecord, kind: str, line: int | None):
    if kind == "binary":
        if rec.arm is None:
            raise ArmError(f"record {rec.id!r}: binary testbeds require an arm", line=line)
        if rec.dose is not None:
            raise ArmError(f"record {rec.id!r}: binary records cannot carry a dose", line=line)
    else:
        if rec.arm is not None:
            raise ArmError(f"record {rec.id!r}: {kind} records carry a dose, not an arm", line=line)
        if rec.dose is None:
            if rec.source is None:
                raise ArmError(
                    f"record {rec.id!r}: {kind} records need a dose or a source", line=line
                )
        elif not math.isfinite(rec.dose):
            raise ArmError(f"record {rec.id!r}: dose must be finite", line=line)


def _record_from_json(obj, line: int) -> PredictionRecord:
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object", line=line)
    for key in ("id", "pair_id", "tokens", "ntp"):
        if key not in obj:
            raise ParseError(f"missing field {key!r}", line=line)
    tokens, ntp = obj["tokens"], obj["ntp"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise ParseError('"tokens" must be a list of strings', line=line)
    if not isinstance(ntp, list) or not all(
        isinstance(p, (int, float)) and not isinstance(p, bool) for p in ntp
    ):
        raise ParseError('"ntp" must be a list of numbers', line=line)
    dose = obj.get("dose")
    if dose is not None and (isinstance(dose, bool) or not isinstance(dose, (int, float))):
        raise ArmError('"dose" must be a number', line=line)
    source = obj.get("source")
    if source is not None and not isinstance(source, str):
        raise ParseError('"source" must be a string', line=line)
    try:
        return PredictionRecord(
            id=str(obj["id"]),
            pair_id=str(obj["pair_id"]),
            tokens=tuple(tokens),
            ntp=tuple(float(p) for p in ntp),
            arm=obj.get("arm"),
            dose=None if dose is None else float(dose),
            source=source,
        )
    except (AlignmentError, ProbabilityRangeError, ArmError) as exc:
        raise type(exc)(str(exc), line=line) from None


def parse_prediction_log(stream: str | Iterable[str], kind: str, name: str = "testbed") -> Testbed:
    """Parse a JSONL prediction log into a validated :class:`Testbed`.

    ``stream`` is either the whole text or an iterable of lines (an open file
    works). Blank lines are skipped. Every error carries the 1-based line number.
    """
    if kind not in KINDS:
        raise KindError(f"unknown intervention kind {kind!r}")
    # only "\n" delimits records; splitlines() would also break on U+2028 etc.
    lines = stream.split("\n") if isinstance(stream, str) else stream
    records = []
    seen_ids = set()
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
        rec = _record_from_json(obj, lineno)
        _check_arm_or_dose(rec, kind, lineno)
        if rec.id in seen_ids:
            raise ParseError(f"duplicate record id {rec.id!r}", line=lineno)
        seen_ids.add(rec.id)
        records.append(rec)
    if not records:
        raise ParseError("prediction log contains no records")
    return Testbed(tuple(records), kind, name)


def dump_prediction_log(testbed: Testbed) -> str:
    """Serialise a testbed back to JSONL; :func:`parse_prediction_log` inverts it."""
    return "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in testbed.records)


def _group_by_pair(records: Sequence[PredictionRecord]) -> dict[str, list[PredictionRecord]]:
    groups: dict[str, list[PredictionRecord]] = defaultdict(list)
    for rec in records:
        groups[rec.pair_id].append(rec)
    return dict(sorted(groups.items()))


def pair_records(testbed: Testbed) -> list[tuple[PredictionRecord, PredictionRecord]]:
    """(treatment, control) tuples, one per pair id, sorted by pair id."""
    if testbed.intervention_kind != "binary":
        raise KindError(f"pairing requires a binary testbed, got {testbed.intervention_kind}")
    pairs = []
    dangling = []
    for pair_id, group in _group_by_pair(testbed.records).items():
        arms = {r.arm: r for r in group}
        if len(group) != 2 or set(arms) != set(ARMS):
            dangling.append(pair_id)
            continue
        pairs.append((arms["treatment"], arms["control"]))
    if dangling:
        raise UnpairedError(dangling)
    return pairs


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Minimum number of insertions, substitutions and deletions turning ``a`` into ``b``."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        current = [i]
        for j, y in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,  # deletion
                    current[j - 1] + 1,  # insertion
                    previous[j - 1] + (x != y),  # substitution
                )
            )
        previous = current
    return previous[-1]


def _edit_units(source: str, granularity: str) -> Sequence:
    if granularity == "char":
        return source
    if granularity == "token":
        from .covariates import lex_java

        return [t.text for t in lex_java(source) if t.kind != "comment"]
    raise ValueError(f"granularity must be 'char' or 'token', not {granularity!r}")


def dose_clone_pairs(
    testbed: Testbed, granularity: str = "char", normalized: bool = False
) -> Testbed:
    """Attach the edit distance between clone siblings as the dose of both records.

    Records are grouped by ``pair_id``; each group must hold exactly two
    records with source text. With ``normalized`` the distance is divided by
    the longer sequence's length.
    """
    records = []
    dangling = []
    for pair_id, group in _group_by_pair(testbed.records).items():
        if len(group) != 2:
            dangling.append(pair_id)
            continue
        for rec in group:
            if rec.source is None:
                raise MissingSourceError(f"record {rec.id!r} has no source text")
        first, second = sorted(group, key=lambda r: r.id)
        a = _edit_units(first.source, granularity)
        b = _edit_units(second.source, granularity)
        dose = float(levenshtein(a, b))
        if normalized:
            longest = max(len(a), len(b))
            dose = dose / longest if longest else 0.0
        records.extend(replace(r, arm=None, dose=dose) for r in (first, second))
    if dangling:
        raise UnpairedError(dangling)
    kind = "continuous" if testbed.intervention_kind == "binary" else testbed.intervention_kind
    return Testbed(tuple(records), kind, testbed.name, clone_pairs=True)


def clone_pairs(testbed: Testbed) -> list[tuple[PredictionRecord, PredictionRecord]]:
    """Sibling tuples of a clone testbed, ordered by pair id then record id."""
    out = []
    for pair_id, group in _group_by_pair(testbed.records).items():
        if len(group) != 2:
            raise UnpairedError([pair_id])
        first, second = sorted(group, key=lambda r: r.id)
        out.append((first, second))
    return out
