"""Domain types, the feature schema and the on-disk formats."""

from __future__ import annotations

import csv
import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import FormatError, ParamError, SelfPairError
from .similarity import METRIC_NAMES, make_scorer

N_FEATURES = 20

CORPUS_COLUMNS = (
    "record_id",
    "client_id",
    "invoice_number",
    "invoice_date",
    "supplier_id",
    "supplier_name",
    "amount_minor",
    "currency",
    "description",
)

# Fields a cleaned record must have non-empty.
REQUIRED_FIELDS = CORPUS_COLUMNS[1:]

# Names usable in a FeatureSchema; "amount" is the amount rendered as digits.
COMPARABLE_FIELDS = (
    "invoice_number",
    "invoice_date",
    "supplier_id",
    "supplier_name",
    "amount",
    "currency",
    "description",
    "client_id",
)


@dataclass(frozen=True)
class InvoiceRecord:
    record_id: int
    client_id: str
    invoice_number: str
    invoice_date: str
    supplier_id: str
    supplier_name: str
    amount_minor: int | None
    currency: str
    description: str

    def __post_init__(self):
        if self.amount_minor is not None and self.amount_minor < 0:
            raise ValueError(f"record {self.record_id}: negative amount")

    def field_value(self, name: str) -> str:
        if name == "amount":
            return "" if self.amount_minor is None else str(self.amount_minor)
        if name not in COMPARABLE_FIELDS:
            raise KeyError(name)
        return getattr(self, name)

    def missing_fields(self) -> list[str]:
        out = []
        for name in REQUIRED_FIELDS:
            value = getattr(self, name)
            if value is None or value == "":
                out.append(name)
        return out

    def to_row(self) -> dict[str, str]:
        row = {k: getattr(self, k) for k in CORPUS_COLUMNS}
        row["record_id"] = str(self.record_id)
        row["amount_minor"] = "" if self.amount_minor is None else str(self.amount_minor)
        return row

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "InvoiceRecord":
        try:
            amount = row["amount_minor"]
            return cls(
                record_id=int(row["record_id"]),
                client_id=row["client_id"],
                invoice_number=row["invoice_number"],
                invoice_date=row["invoice_date"],
                supplier_id=row["supplier_id"],
                supplier_name=row["supplier_name"],
                amount_minor=int(amount) if amount != "" else None,
                currency=row["currency"],
                description=row["description"],
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"bad corpus row {row!r}: {exc}") from exc


class Label(enum.Enum):
    DUPLICATE = "duplicate"
    NON_DUPLICATE = "non_duplicate"
    UNLABELED = "unlabeled"

    def as_int(self) -> int | None:
        return {Label.DUPLICATE: 1, Label.NON_DUPLICATE: 0}.get(self)

    @classmethod
    def from_int(cls, value: int | None) -> "Label":
        if value is None:
            return cls.UNLABELED
        if value in (0, 1):
            return cls.DUPLICATE if value == 1 else cls.NON_DUPLICATE
        raise FormatError(f"label must be 0, 1 or null, got {value!r}")


@dataclass(frozen=True)
class CandidatePair:
    left_id: int
    right_id: int
    label: Label = Label.UNLABELED

    def __post_init__(self):
        if self.left_id == self.right_id:
            raise SelfPairError(f"self pair ({self.left_id})")
        if self.left_id > self.right_id:
            raise ValueError("CandidatePair must be canonical; use canonicalize_pair")

    @property
    def key(self) -> tuple[int, int]:
        return (self.left_id, self.right_id)

    def with_label(self, label: Label) -> "CandidatePair":
        return CandidatePair(self.left_id, self.right_id, label)

    def to_dict(self) -> dict[str, Any]:
        return {"left": self.left_id, "right": self.right_id, "label": self.label.as_int()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CandidatePair":
        return cls(int(d["left"]), int(d["right"]), Label.from_int(d.get("label")))


def canonicalize_pair(a: int, b: int, label: Label = Label.UNLABELED) -> CandidatePair:
    if a == b:
        raise SelfPairError(f"self pair ({a})")
    return CandidatePair(min(a, b), max(a, b), label)


@dataclass(frozen=True)
class FeatureVector:
    """Similarity scores for one candidate pair, in schema order."""

    pair: CandidatePair
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(self.values)}")
        for v in self.values:
            if not 0.0 <= v <= 1.0:  # also rejects NaN
                raise ValueError(f"feature value {v} outside [0, 1]")

    @property
    def label(self) -> int | None:
        return self.pair.label.as_int()

    def to_dict(self) -> dict[str, Any]:
        return {
            "left": self.pair.left_id,
            "right": self.pair.right_id,
            "label": self.label,
            "features": list(self.values),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FeatureVector":
        try:
            return cls(CandidatePair.from_dict(d), tuple(d["features"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad feature record: {exc}") from exc


@dataclass(frozen=True)
class SchemaEntry:
    field: str
    metric: str
    params: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"field": self.field, "metric": self.metric, "params": dict(self.params)}

    def __hash__(self):
        return hash((self.field, self.metric, json.dumps(self.params, sort_keys=True)))


@dataclass(frozen=True)
class FeatureSchema:
    entries: tuple[SchemaEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) != N_FEATURES:
            raise ParamError(f"schema must have {N_FEATURES} entries, got {len(self.entries)}")
        for e in self.entries:
            if e.metric not in METRIC_NAMES:
                raise ParamError(f"unknown metric {e.metric!r}")
            if e.field not in COMPARABLE_FIELDS:
                raise ParamError(f"unknown field {e.field!r}")
            make_scorer(e.metric, e.params)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i: int) -> SchemaEntry:
        return self.entries[i]

    def to_list(self) -> list[dict[str, Any]]:
        return [e.to_dict() for e in self.entries]

    @classmethod
    def from_list(cls, items: list[dict[str, Any]]) -> "FeatureSchema":
        try:
            return cls(tuple(SchemaEntry(d["field"], d["metric"], dict(d.get("params", {}))) for d in items))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad schema: {exc}") from exc

    def digest(self) -> str:
        blob = json.dumps(self.to_list(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def default_schema() -> FeatureSchema:
    e = SchemaEntry
    entries = [
        e("invoice_number", "jaro"),
        e("invoice_number", "jaro_winkler"),
        e("invoice_number", "levenshtein"),
        e("invoice_number", "damerau_levenshtein"),
        e("invoice_number", "ngram", {"n": 2}),
        e("invoice_number", "ngram", {"n": 3}),
        e("invoice_number", "ngram", {"n": 4}),
        e("invoice_number", "longest_common_substring"),
        e("invoice_number", "binary"),
        e("supplier_name", "jaro_winkler"),
        e("supplier_name", "levenshtein"),
        e("supplier_name", "ngram", {"n": 3}),
        e("supplier_name", "monge_elkan", {"inner": "jaro_winkler"}),
        e("supplier_id", "binary"),
        e("supplier_id", "levenshtein"),
        e("invoice_date", "binary"),
        e("invoice_date", "levenshtein"),
        e("amount", "binary"),
        e("amount", "levenshtein"),
        e("description", "monge_elkan", {"inner": "levenshtein"}),
    ]
    return FeatureSchema(tuple(entries))


# --- file formats -----------------------------------------------------------


def read_corpus(path: str | Path) -> list[InvoiceRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CORPUS_COLUMNS:
            raise FormatError(f"{path}: unexpected header {reader.fieldnames}")
        records = [InvoiceRecord.from_row(row) for row in reader]
    ids = [r.record_id for r in records]
    if len(set(ids)) != len(ids):
        raise FormatError(f"{path}: duplicate record_id values")
    return records


def write_corpus(path: str | Path, records: Iterable[InvoiceRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CORPUS_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow(r.to_row())


def write_pairs(path: str | Path, pairs: Iterable[CandidatePair]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["left_id", "right_id", "label"])
        for p in pairs:
            lab = p.label.as_int()
            w.writerow([p.left_id, p.right_id, "" if lab is None else lab])


def read_pairs(path: str | Path) -> list[CandidatePair]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                lab = row.get("label", "")
                out.append(CandidatePair(int(row["left_id"]), int(row["right_id"]),
                                         Label.from_int(int(lab) if lab not in ("", None) else None)))
            except (KeyError, ValueError) as exc:
                raise FormatError(f"{path}: bad pair row {row!r}") from exc
    return out


def write_features(path: str | Path, vectors: Iterable[FeatureVector]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in vectors:
            fh.write(json.dumps(v.to_dict(), separators=(",", ":")) + "\n")


def iter_features(path: str | Path) -> Iterator[FeatureVector]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            yield FeatureVector.from_dict(d)


def read_features(path: str | Path) -> list[FeatureVector]:
    return list(iter_features(path))


def write_schema(path: str | Path, schema: FeatureSchema) -> None:
    Path(path).write_text(json.dumps(schema.to_list(), indent=2) + "\n", encoding="utf-8")


def read_schema(path: str | Path) -> FeatureSchema:
    try:
        items = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return FeatureSchema.from_list(items)
