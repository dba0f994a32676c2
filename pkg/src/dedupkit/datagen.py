"""Seeded synthetic invoice corpora with injected near-duplicates.

Each client gets its own supplier pool, date range and random stream. A
fraction of every client's rows are perturbed copies of other rows; the
generator records each original/copy pair as ground truth.

Supplier pool size and date span are tuned per client so that, after the
default blocking, the expected number of non-duplicate candidate pairs is
about ``target_pair_imbalance`` times the number of duplicates.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
import random
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .core import CandidatePair, InvoiceRecord, Label, canonicalize_pair
from .errors import ConfigError, FormatError
from .seeding import derive_seed

PERTURBATIONS = (
    "char_typo",
    "adjacent_transposition",
    "digit_change",
    "date_shift_days",
    "amount_scale",
    "whitespace_noise",
    "case_flip",
)

DEFAULT_WEIGHTS = {
    "char_typo": 0.25,
    "adjacent_transposition": 0.15,
    "digit_change": 0.15,
    "date_shift_days": 0.10,
    "amount_scale": 0.10,
    "whitespace_noise": 0.125,
    "case_flip": 0.125,
}

REMOVAL_BUDGET = 0.01

_ADJECTIVES = (
    "Northern", "Southern", "Eastern", "Western", "Central", "Royal", "Global", "United",
    "Premier", "Allied", "Coastal", "Highland", "Metro", "Pioneer", "Summit", "Crown",
    "Silver", "Golden", "Green", "Blue", "Rapid", "Prime", "Atlas", "Apex", "Vector",
    "Harbour", "Valley", "Castle", "Bridge", "Oak", "Cedar", "Granite", "Iron", "Swift",
)
_NOUNS = (
    "Steel", "Logistics", "Office", "Catering", "Print", "Facilities", "Cleaning",
    "Engineering", "Software", "Transport", "Energy", "Water", "Security", "Media",
    "Supplies", "Packaging", "Electrical", "Plumbing", "Medical", "Foods", "Fuels",
    "Systems", "Consulting", "Couriers", "Hardware", "Timber", "Textiles", "Chemicals",
)
_SUFFIXES = ("Ltd", "Limited", "PLC", "LLP", "Group", "& Co", "Services", "Holdings", "Inc")
_DESCRIPTION_WORDS = (
    "monthly", "service", "charge", "delivery", "consumables", "maintenance", "contract",
    "licence", "renewal", "repairs", "parts", "labour", "hire", "equipment", "stationery",
    "fuel", "cleaning", "catering", "consultancy", "support", "subscription", "freight",
    "installation", "inspection", "materials", "training", "rental", "software", "hardware",
    "utilities", "postage", "printing", "security", "waste", "disposal", "travel",
)
_MONTHS = ("jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec")
_PREFIXES = ("INV-", "", "IN", "#", "A/", "SI", "INV/", "")
_CURRENCIES = ("GBP", "EUR", "USD")


@dataclass
class GenConfig:
    n_clients: int = 5
    invoices_per_client: int = 2000
    duplicate_fraction: float = 0.05
    perturbation_weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    target_pair_imbalance: float = 100.0
    missing_field_fraction: float = 0.005
    seed: int = 42
    start_date: str = "2019-01-01"

    def validate(self) -> None:
        if self.n_clients < 1 or self.invoices_per_client < 2:
            raise ConfigError("need at least one client and two invoices per client")
        if not 0.0 <= self.duplicate_fraction < 0.5:
            raise ConfigError("duplicate_fraction must lie in [0, 0.5)")
        if not 0.0 <= self.missing_field_fraction <= 1.0:
            raise ConfigError("missing_field_fraction must lie in [0, 1]")
        if self.target_pair_imbalance < 0:
            raise ConfigError("target_pair_imbalance must be non-negative")
        unknown = set(self.perturbation_weights) - set(PERTURBATIONS)
        if unknown:
            raise ConfigError(f"unknown perturbations {sorted(unknown)}")
        w = self.perturbation_weights.values()
        if any(not 0.0 <= p <= 1.0 for p in w) or not math.isclose(sum(w), 1.0, abs_tol=1e-9):
            raise ConfigError("perturbation weights must be probabilities summing to 1")
        try:
            dt.date.fromisoformat(self.start_date)
        except ValueError as exc:
            raise ConfigError(f"bad start_date {self.start_date!r}") from exc

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown GenConfig keys {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class GroundTruth:
    pairs: frozenset[tuple[int, int]]
    perturbations: dict[tuple[int, int], tuple[str, ...]] = field(default_factory=dict, compare=False)

    def __contains__(self, pair) -> bool:
        key = pair.key if isinstance(pair, CandidatePair) else tuple(pair)
        return key in self.pairs

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class PoolSizes:
    suppliers: int
    days: int
    expected_candidate_pairs: float


def tune_pool_sizes(n_rows: int, n_duplicates: int, target_imbalance: float) -> PoolSizes:
    """Choose supplier and day pool sizes for one client.

    Records pick a supplier and a day uniformly, so a pair of records shares
    either key with probability ``2x - x**2`` where ``x = 1/pool``. Solving
    for the target candidate-pair count gives ``x``.
    """
    all_pairs = n_rows * (n_rows - 1) / 2
    if n_duplicates == 0:
        pool = max(1, n_rows // 5)
        x = 1.0 / pool
        return PoolSizes(pool, pool, all_pairs * (2 * x - x * x))
    wanted = (target_imbalance + 1.0) * n_duplicates
    if wanted > all_pairs:
        raise ConfigError(
            f"imbalance {target_imbalance} infeasible: {n_rows} rows give at most "
            f"{int(all_pairs)} pairs but {int(wanted)} are needed"
        )
    x = 1.0 - math.sqrt(1.0 - wanted / all_pairs)
    pool = max(1, round(1.0 / x))
    x = 1.0 / pool
    return PoolSizes(pool, pool, all_pairs * (2 * x - x * x))


@dataclass
class _Supplier:
    supplier_id: str
    name: str
    prefix: str
    width: int
    counter: int
    typical_amount: int
    recurring: bool
    description: str


def _make_suppliers(rng: random.Random, count: int) -> list[_Supplier]:
    ids = rng.sample(range(10000, 100000), count)
    out = []
    for sid in ids:
        words = [rng.choice(_ADJECTIVES), rng.choice(_NOUNS)]
        if rng.random() < 0.4:
            words.append(rng.choice(_NOUNS))
        words.append(rng.choice(_SUFFIXES))
        typical = int(math.exp(rng.uniform(math.log(1_000), math.log(5_000_000))))
        n_desc = rng.randint(2, 4)
        out.append(
            _Supplier(
                supplier_id=f"S{sid}",
                name=" ".join(words),
                prefix=rng.choice(_PREFIXES),
                width=rng.choice((5, 6, 7)),
                counter=rng.randint(100, 90000),
                typical_amount=typical,
                recurring=rng.random() < 0.3,
                description=" ".join(rng.sample(_DESCRIPTION_WORDS, n_desc)),
            )
        )
    return out


def _base_invoice(rng: random.Random, sup: _Supplier, day0: dt.date, n_days: int,
                  client_id: str, currency: str) -> InvoiceRecord:
    sup.counter += rng.randint(1, 3)
    number = f"{sup.prefix}{sup.counter:0{sup.width}d}"
    date = day0 + dt.timedelta(days=rng.randrange(n_days))
    if sup.recurring:
        amount = sup.typical_amount
        description = sup.description
    else:
        amount = max(1, int(sup.typical_amount * math.exp(rng.gauss(0.0, 0.6))))
        words = sup.description.split()[:1] + rng.sample(_DESCRIPTION_WORDS, rng.randint(1, 3))
        if rng.random() < 0.5:
            words.append(rng.choice(_MONTHS))
        description = " ".join(words)
    return InvoiceRecord(
        record_id=0,
        client_id=client_id,
        invoice_number=number,
        invoice_date=date.isoformat(),
        supplier_id=sup.supplier_id,
        supplier_name=sup.name,
        amount_minor=amount,
        currency=currency,
        description=description,
    )


# --- perturbations ----------------------------------------------------------

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _typo(rng: random.Random, s: str) -> str:
    if not s:
        return s
    pos = rng.randrange(1, len(s)) if len(s) > 1 else 0
    ch = s[pos]
    op = rng.random()
    if ch.isdigit():
        repl = rng.choice([d for d in "0123456789" if d != ch])
    else:
        pool = _LETTERS.upper() if ch.isupper() else _LETTERS
        repl = rng.choice([c for c in pool if c != ch])
    if op < 0.6:
        return s[:pos] + repl + s[pos + 1:]
    if op < 0.8 and len(s) > 1:
        return s[:pos] + s[pos + 1:]
    return s[:pos] + repl + s[pos:]


def _transpose(rng: random.Random, s: str, tokens: bool) -> str:
    words = s.split(" ")
    if tokens and len(words) > 1:
        i = rng.randrange(len(words) - 1)
        words[i], words[i + 1] = words[i + 1], words[i]
        return " ".join(words)
    spots = [i for i in range(len(s) - 1) if s[i] != s[i + 1]]
    if not spots:
        return s
    i = rng.choice(spots)
    return s[:i] + s[i + 1] + s[i] + s[i + 2:]


def _digit_change(rng: random.Random, s: str) -> str:
    spots = [i for i, c in enumerate(s) if c.isdigit()]
    if not spots:
        return _typo(rng, s)
    i = rng.choice(spots)
    return s[:i] + rng.choice([d for d in "0123456789" if d != s[i]]) + s[i + 1:]


def _whitespace(rng: random.Random, s: str) -> str:
    r = rng.random()
    if r < 0.3:
        return s + " "
    if r < 0.5:
        return " " + s
    if " " in s and r < 0.8:
        i = s.index(" ")
        return s[:i] + " " + s[i:]
    i = rng.randrange(1, len(s)) if len(s) > 1 else len(s)
    return s[:i] + " " + s[i:]


def _case_flip(rng: random.Random, s: str) -> str:
    options = [v for v in (s.lower(), s.upper(), s.title(), s.swapcase()) if v != s]
    return rng.choice(options) if options else s


_AMOUNT_FACTORS = (10.0, 100.0, 0.1, 0.01, 1.2, 1 / 1.2)


def perturb(rng: random.Random, rec: InvoiceRecord, kind: str) -> tuple[InvoiceRecord, str]:
    """Apply one perturbation of ``kind``; returns the new record and a log tag."""
    if kind == "char_typo":
        f = rng.choices(("invoice_number", "supplier_name", "description", "supplier_id"),
                        weights=(0.4, 0.25, 0.25, 0.1))[0]
        return replace(rec, **{f: _typo(rng, getattr(rec, f))}), f"{kind}:{f}"
    if kind == "adjacent_transposition":
        f = rng.choice(("invoice_number", "supplier_name", "description"))
        new = _transpose(rng, getattr(rec, f), tokens=(f == "description" and rng.random() < 0.5))
        return replace(rec, **{f: new}), f"{kind}:{f}"
    if kind == "digit_change":
        return replace(rec, invoice_number=_digit_change(rng, rec.invoice_number)), f"{kind}:invoice_number"
    if kind == "date_shift_days":
        shift = rng.choice([-1, 1]) * rng.randint(1, 10)
        d = dt.date.fromisoformat(rec.invoice_date) + dt.timedelta(days=shift)
        return replace(rec, invoice_date=d.isoformat()), f"{kind}:invoice_date"
    if kind == "amount_scale":
        amount = rec.amount_minor or 0
        new = int(round(amount * rng.choice(_AMOUNT_FACTORS)))
        if new == amount or new <= 0:
            new = amount * 10 if amount else 1
        return replace(rec, amount_minor=new), f"{kind}:amount"
    if kind == "whitespace_noise":
        f = rng.choice(("invoice_number", "supplier_name", "description"))
        return replace(rec, **{f: _whitespace(rng, getattr(rec, f))}), f"{kind}:{f}"
    if kind == "case_flip":
        f = rng.choice(("invoice_number", "supplier_name", "description"))
        return replace(rec, **{f: _case_flip(rng, getattr(rec, f))}), f"{kind}:{f}"
    raise ConfigError(f"unknown perturbation {kind!r}")


def make_duplicate(rng: random.Random, rec: InvoiceRecord,
                   weights: dict[str, float]) -> tuple[InvoiceRecord, tuple[str, ...]]:
    kinds = [k for k in PERTURBATIONS if weights.get(k, 0.0) > 0]
    probs = [weights[k] for k in kinds]
    copy, log = rec, []
    for _ in range(rng.randint(1, 3)):
        copy, tag = perturb(rng, copy, rng.choices(kinds, weights=probs)[0])
        log.append(tag)
    while replace(copy, record_id=rec.record_id) == rec:
        copy, tag = perturb(rng, copy, rng.choices(kinds, weights=probs)[0])
        log.append(tag)
    return copy, tuple(log)


_BLANKABLE = ("invoice_number", "invoice_date", "supplier_id", "supplier_name",
              "amount_minor", "currency", "description")


def _blank_one(rng: random.Random, rec: InvoiceRecord) -> InvoiceRecord:
    f = rng.choice(_BLANKABLE)
    return replace(rec, **{f: None if f == "amount_minor" else ""})


def generate_corpus(config: GenConfig) -> tuple[list[InvoiceRecord], GroundTruth]:
    config.validate()
    day0 = dt.date.fromisoformat(config.start_date)
    records: list[InvoiceRecord] = []
    truth: dict[tuple[int, int], tuple[str, ...]] = {}
    next_id = 1
    n = config.invoices_per_client
    n_dup = round(config.duplicate_fraction * n)
    pools = tune_pool_sizes(n, n_dup, config.target_pair_imbalance)

    for c in range(config.n_clients):
        rng = random.Random(derive_seed(config.seed, "client", c))
        client_id = f"C{c + 1:02d}"
        currency = rng.choice(_CURRENCIES)
        suppliers = _make_suppliers(rng, pools.suppliers)
        base = [
            _base_invoice(rng, rng.choice(suppliers), day0, pools.days, client_id, currency)
            for _ in range(n - n_dup)
        ]
        originals = rng.sample(range(len(base)), n_dup)
        rows: list[tuple[InvoiceRecord, int | None, tuple[str, ...]]] = [(r, None, ()) for r in base]
        for i in originals:
            copy, log = make_duplicate(rng, base[i], config.perturbation_weights)
            rows.append((copy, i, log))
        order = list(range(len(rows)))
        rng.shuffle(order)
        id_of = {}
        placed = []
        for old in order:
            id_of[old] = next_id
            placed.append(replace(rows[old][0], record_id=next_id))
            next_id += 1
        for old, (_, orig, log) in enumerate(rows):
            if orig is not None:
                truth[canonicalize_pair(id_of[old], id_of[orig]).key] = log
        n_blank = round(config.missing_field_fraction * len(placed))
        for pos in sorted(rng.sample(range(len(placed)), n_blank)):
            placed[pos] = _blank_one(rng, placed[pos])
        records.extend(placed)

    return records, GroundTruth(frozenset(truth), truth)


# --- cleaning & labelling ---------------------------------------------------


@dataclass(frozen=True)
class CleaningReport:
    n_input: int
    n_removed: int
    removal_fraction: float
    over_budget: bool
    removed_ids: tuple[int, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["removed_ids"] = list(self.removed_ids)
        return d


def clean_corpus(records: Iterable[InvoiceRecord]) -> tuple[list[InvoiceRecord], CleaningReport]:
    """Drop records with any empty required field.

    Warns when the removed share reaches the 1% budget.
    """
    records = list(records)
    kept, removed = [], []
    for r in records:
        (removed if r.missing_fields() else kept).append(r)
    frac = len(removed) / len(records) if records else 0.0
    over = frac >= REMOVAL_BUDGET
    if over:
        warnings.warn(f"cleaning removed {frac:.2%} of records (budget {REMOVAL_BUDGET:.0%})")
    return kept, CleaningReport(len(records), len(removed), frac, over,
                                tuple(r.record_id for r in removed))


@dataclass(frozen=True)
class RecallReport:
    n_truth: int
    n_found: int
    n_lost_to_cleaning: int
    recall: float
    missed: tuple[tuple[int, int], ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["missed"] = [list(p) for p in self.missed]
        return d


def label_pairs(pairs: Iterable[CandidatePair], truth: GroundTruth,
                present_ids: Iterable[int] | None = None) -> tuple[list[CandidatePair], RecallReport]:
    """Label candidate pairs from ground truth and measure blocking recall.

    Truth pairs touching an id outside ``present_ids`` (removed by cleaning)
    are left out of the recall denominator and counted separately.
    """
    labeled = [
        p.with_label(Label.DUPLICATE if p.key in truth.pairs else Label.NON_DUPLICATE) for p in pairs
    ]
    found = {p.key for p in labeled if p.label is Label.DUPLICATE}
    if present_ids is None:
        reachable = set(truth.pairs)
    else:
        ids = set(present_ids)
        reachable = {p for p in truth.pairs if p[0] in ids and p[1] in ids}
    missed = tuple(sorted(reachable - found))
    recall = len(found) / len(reachable) if reachable else 1.0
    report = RecallReport(len(reachable), len(found), len(truth.pairs) - len(reachable), recall, missed)
    return labeled, report


def write_truth(path: str | Path, truth: GroundTruth) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["left_id", "right_id"])
        for left, right in sorted(truth.pairs):
            w.writerow([left, right])


def read_truth(path: str | Path) -> GroundTruth:
    pairs = set()
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            try:
                pairs.add(canonicalize_pair(int(row["left_id"]), int(row["right_id"])).key)
            except (KeyError, ValueError) as exc:
                raise FormatError(f"{path}: bad truth row {row!r}") from exc
    return GroundTruth(frozenset(pairs))
