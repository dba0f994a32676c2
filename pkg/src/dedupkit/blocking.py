"""Value-equality blocking, candidate pairs and pair featurization."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import (
    COMPARABLE_FIELDS,
    CandidatePair,
    FeatureSchema,
    FeatureVector,
    InvoiceRecord,
)
from .errors import ConfigError, FormatError, MissingRecordError
from .similarity import make_scorer

TRANSFORMS = ("exact", "digits_only", "prefix", "normalized_lower")


@dataclass(frozen=True)
class BlockingKey:
    field: str
    transform: str = "exact"
    k: int | None = None

    def __post_init__(self):
        if self.field not in COMPARABLE_FIELDS:
            raise ConfigError(f"unknown blocking field {self.field!r}")
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"unknown transform {self.transform!r}")
        if self.transform == "prefix":
            if self.k is None or self.k < 1:
                raise ConfigError("prefix transform needs k >= 1")
        elif self.k is not None:
            raise ConfigError(f"k only applies to the prefix transform, not {self.transform}")

    def apply(self, value: str) -> str:
        if self.transform == "exact":
            return value
        if self.transform == "digits_only":
            return "".join(c for c in value if c.isdigit())
        if self.transform == "prefix":
            return value[: self.k]
        return " ".join(value.lower().split())

    @property
    def name(self) -> str:
        suffix = f"({self.k})" if self.transform == "prefix" else ""
        return f"{self.field}/{self.transform}{suffix}"

    def to_dict(self) -> dict:
        d = {"field": self.field, "transform": self.transform}
        if self.k is not None:
            d["k"] = self.k
        return d


@dataclass(frozen=True)
class BlockingConfig:
    """Blocking keys; ``within_client`` keeps blocks from spanning clients."""

    keys: tuple[BlockingKey, ...]
    within_client: bool = True

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(self.keys))
        if not self.keys:
            raise ConfigError("blocking config needs at least one key")

    def to_dict(self) -> dict:
        return {"keys": [k.to_dict() for k in self.keys], "within_client": self.within_client}

    @classmethod
    def from_dict(cls, d: Mapping) -> "BlockingConfig":
        try:
            keys = tuple(BlockingKey(**k) for k in d["keys"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad blocking config: {exc}") from exc
        return cls(keys, bool(d.get("within_client", True)))


def default_blocking_config() -> BlockingConfig:
    return BlockingConfig(
        (
            BlockingKey("supplier_id"),
            BlockingKey("invoice_number", "digits_only"),
            BlockingKey("invoice_date"),
        )
    )


def read_blocking_config(path: str | Path) -> BlockingConfig:
    try:
        return BlockingConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class Block:
    key_value: str
    member_ids: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ids = self.member_ids
        if not ids or any(a >= b for a, b in zip(ids, ids[1:])):
            raise ValueError("block members must be non-empty and strictly increasing")


def build_blocks(corpus: Iterable[InvoiceRecord], config: BlockingConfig) -> list[Block]:
    """One block per (key, transformed value). Records whose transformed value
    is empty are not blocked on that key."""
    records = list(corpus)
    blocks: list[Block] = []
    for key in config.keys:
        groups: dict[tuple[str, str], list[int]] = {}
        for r in records:
            value = key.apply(r.field_value(key.field))
            if not value:
                continue
            scope = r.client_id if config.within_client else ""
            groups.setdefault((scope, value), []).append(r.record_id)
        for (scope, value) in sorted(groups):
            label = f"{key.name}={value}" if not config.within_client else f"{scope}|{key.name}={value}"
            blocks.append(Block(label, tuple(sorted(groups[(scope, value)]))))
    return blocks


def candidate_pairs(blocks: Iterable[Block]) -> list[CandidatePair]:
    keys = set()
    for b in blocks:
        keys.update(combinations(b.member_ids, 2))
    return [CandidatePair(a, b) for a, b in sorted(keys)]


def pair_reduction_ratio(n_records: int, n_pairs: int) -> float:
    if n_records < 2:
        raise ConfigError("need at least two records")
    return 1.0 - n_pairs / (n_records * (n_records - 1) / 2)


class Featurizer:
    """Applies a schema to record pairs. Field values are extracted once per
    record, scorers are resolved once per schema entry."""

    def __init__(self, records: Iterable[InvoiceRecord], schema: FeatureSchema):
        self.schema = schema
        self._fields = sorted({e.field for e in schema.entries})
        self._values = {
            r.record_id: {f: r.field_value(f) for f in self._fields} for r in records
        }
        self._plan = [(e.field, make_scorer(e.metric, e.params)) for e in schema.entries]

    def __call__(self, pair: CandidatePair) -> FeatureVector:
        try:
            left, right = self._values[pair.left_id], self._values[pair.right_id]
        except KeyError as exc:
            raise MissingRecordError(f"record {exc.args[0]} not in corpus") from None
        values = []
        for f, scorer in self._plan:
            a, b = left[f], right[f]
            values.append(1.0 if a == b else scorer(a, b))
        return FeatureVector(pair, tuple(values))


def featurize(pair: CandidatePair, corpus: Mapping[int, InvoiceRecord] | Sequence[InvoiceRecord],
              schema: FeatureSchema) -> FeatureVector:
    records = corpus.values() if isinstance(corpus, Mapping) else corpus
    return Featurizer(records, schema)(pair)


_worker: Featurizer | None = None


def _init_worker(records, schema):
    global _worker
    _worker = Featurizer(records, schema)


def _work(chunk):
    return [_worker(p) for p in chunk]


def featurize_all(pairs: Sequence[CandidatePair], records: Sequence[InvoiceRecord],
                  schema: FeatureSchema, threads: int = 1) -> list[FeatureVector]:
    """Featurize many pairs. Output order follows ``pairs`` regardless of
    worker count."""
    if threads <= 1 or len(pairs) < 1000:
        fz = Featurizer(records, schema)
        return [fz(p) for p in pairs]
    size = -(-len(pairs) // (threads * 4))
    chunks = [pairs[i:i + size] for i in range(0, len(pairs), size)]
    with ProcessPoolExecutor(threads, initializer=_init_worker, initargs=(list(records), schema)) as ex:
        out = []
        for part in ex.map(_work, chunks):
            out.extend(part)
    return out
