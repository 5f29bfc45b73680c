"""Raw-record ingestion, cleansing, splitting, and descriptive statistics.

Records come from pre-scraped CSV files with the six-column header
``kost_name,kota,type_kos,area,facility_score,harga_nominal``. Everything
here is a pure function over immutable inputs.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import CsvSchemaError, EmptyDatasetError, SplitError

REQUIRED_COLUMNS = (
    "kost_name",
    "kota",
    "type_kos",
    "area",
    "facility_score",
    "harga_nominal",
)

# Some exports truncate the price header; both spellings are accepted.
_PRICE_ALIASES = ("harga_nominal", "harga_nomina")


@dataclass(frozen=True)
class RawRecord:
    """One boarding-house listing as scraped.

    ``facility_score`` and ``harga_nominal`` are None when the cell was
    empty or unparseable; ``malformed`` marks the unparseable case so a bad
    row is visible rather than silently dropped at parse time.
    """

    kost_name: str
    kota: str
    type_kos: str
    area: str
    facility_score: int | None
    harga_nominal: int | None
    malformed: bool = False

    def dedup_key(self) -> tuple[str, str, str]:
        """Two rows with the same key describe the same listing."""
        return (self.kost_name, self.kota, self.area)


@dataclass(frozen=True)
class Provenance:
    source: str
    rows_read: int
    kept: int
    duplicates_dropped: int
    nulls_dropped: int

    def __post_init__(self):
        if self.rows_read != self.kept + self.duplicates_dropped + self.nulls_dropped:
            raise ValueError("cleansing counters do not add up to rows_read")


@dataclass(frozen=True)
class CleanDataset:
    records: tuple[RawRecord, ...]
    provenance: Provenance

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must be in (0, 1), got {self.test_fraction}")


@dataclass(frozen=True)
class StatsReport:
    city_counts: dict[str, int]
    areas_per_city: dict[str, int]
    type_counts: dict[str, int]
    price_ranking: tuple[tuple[int, int], ...]
    total_records: int

    def as_dict(self) -> dict:
        return {
            "city_counts": dict(self.city_counts),
            "areas_per_city": dict(self.areas_per_city),
            "type_counts": dict(self.type_counts),
            "price_ranking": [list(pair) for pair in self.price_ranking],
            "total_records": self.total_records,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.as_dict(), indent=indent)


def _parse_int_cell(text: str) -> tuple[int | None, bool]:
    """Return (value, malformed). Empty cells are null, not malformed."""
    stripped = text.strip()
    if not stripped:
        return None, False
    try:
        return int(stripped, 10), False
    except ValueError:
        return None, True


def parse_raw_csv(source) -> list[RawRecord]:
    """Parse a UTF-8 CSV byte stream into raw records.

    Field values are preserved verbatim; numeric cells that do not parse
    as integers yield records flagged ``malformed``. Raises
    :class:`CsvSchemaError` when a required column is missing from the
    header.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    text = io.TextIOWrapper(source, encoding="utf-8", newline="")
    try:
        reader = csv.reader(text)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvSchemaError("empty input: no header row") from None

        index: dict[str, int] = {}
        for name in REQUIRED_COLUMNS[:-1]:
            if name not in header:
                raise CsvSchemaError(f"missing required column: {name}")
            index[name] = header.index(name)
        for alias in _PRICE_ALIASES:
            if alias in header:
                index["harga_nominal"] = header.index(alias)
                break
        else:
            raise CsvSchemaError("missing required column: harga_nominal")

        def cell(row, col):
            i = index[col]
            return row[i] if i < len(row) else ""

        records = []
        for row in reader:
            facility, fac_bad = _parse_int_cell(cell(row, "facility_score"))
            price, price_bad = _parse_int_cell(cell(row, "harga_nominal"))
            records.append(
                RawRecord(
                    kost_name=cell(row, "kost_name"),
                    kota=cell(row, "kota"),
                    type_kos=cell(row, "type_kos"),
                    area=cell(row, "area"),
                    facility_score=facility,
                    harga_nominal=price,
                    malformed=fac_bad or price_bad,
                )
            )
        return records
    finally:
        # hand the stream back to the caller instead of closing it when the
        # wrapper is garbage collected
        with contextlib.suppress(Exception):
            text.detach()


def read_raw_csv(path) -> list[RawRecord]:
    with open(path, "rb") as fh:
        return parse_raw_csv(fh)


def _is_null(record: RawRecord) -> bool:
    if not record.kost_name.strip():
        return True
    if not record.kota.strip() or not record.type_kos.strip() or not record.area.strip():
        return True
    if record.malformed:
        return True
    if record.facility_score is None or record.facility_score < 0:
        return True
    if record.harga_nominal is None or record.harga_nominal <= 0:
        return True
    return False


def cleanse(records, source: str = "<memory>") -> CleanDataset:
    """Deduplicate and null-filter raw records, preserving input order.

    Duplicates collapse to their first occurrence. A byte-identical repeat
    is always also a repeat of the (kost_name, kota, area) listing key, so
    one keep-first pass over that key performs both collapses. Null
    filtering runs after deduplication: empty fields, malformed numerics,
    non-positive prices, and negative facility scores are dropped.
    """
    records = list(records)
    rows_read = len(records)

    seen_keys: set[tuple[str, str, str]] = set()
    survivors = []
    duplicates = 0
    for record in records:
        key = record.dedup_key()
        if key in seen_keys:
            duplicates += 1
            continue
        seen_keys.add(key)
        survivors.append(record)

    kept = []
    nulls = 0
    for record in survivors:
        if _is_null(record):
            nulls += 1
        else:
            kept.append(record)

    if not kept:
        raise EmptyDatasetError(f"no records survived cleansing of {source}")

    provenance = Provenance(
        source=source,
        rows_read=rows_read,
        kept=len(kept),
        duplicates_dropped=duplicates,
        nulls_dropped=nulls,
    )
    return CleanDataset(records=tuple(kept), provenance=provenance)


def split(data: CleanDataset, spec: SplitSpec) -> tuple[CleanDataset, CleanDataset]:
    """Deterministically shuffle and partition into train/test.

    The shuffled order is kept inside each side; the first
    ceil((1 - f) * n) shuffled records form the train side.
    """
    n = len(data.records)
    if n == 0:
        raise EmptyDatasetError("cannot split an empty dataset")
    # ceil((1-f)*n) computed as n - floor(f*n); the epsilon absorbs float
    # representation error when f*n lands on an integer.
    n_test = math.floor(spec.test_fraction * n + 1e-9)
    n_train = n - n_test
    if n_train == 0 or n_test == 0:
        raise SplitError(
            f"test_fraction {spec.test_fraction} leaves an empty side for {n} records"
        )

    perm = np.random.default_rng(spec.seed).permutation(n)
    train_records = tuple(data.records[i] for i in perm[:n_train])
    test_records = tuple(data.records[i] for i in perm[n_train:])

    def side(records):
        return CleanDataset(
            records=records,
            provenance=Provenance(
                source=data.provenance.source,
                rows_read=len(records),
                kept=len(records),
                duplicates_dropped=0,
                nulls_dropped=0,
            ),
        )

    return side(train_records), side(test_records)


def describe(data: CleanDataset, top_k: int = 25) -> StatsReport:
    """Compute the descriptive statistics report.

    ``price_ranking`` lists the ``top_k`` most frequent prices, most
    frequent first, ties broken by the lower price.
    """
    if len(data.records) == 0:
        raise EmptyDatasetError("describe requires a non-empty dataset")
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")

    city_counter = Counter(r.kota for r in data.records)
    type_counter = Counter(r.type_kos for r in data.records)
    areas: dict[str, set[str]] = {}
    for r in data.records:
        areas.setdefault(r.kota, set()).add(r.area)
    price_counter = Counter(r.harga_nominal for r in data.records)

    def by_count(counter):
        return dict(sorted(counter.items(), key=lambda kv: (-kv[1], kv[0])))

    city_counts = by_count(city_counter)
    ranking = sorted(price_counter.items(), key=lambda pc: (-pc[1], pc[0]))[:top_k]

    return StatsReport(
        city_counts=city_counts,
        areas_per_city={city: len(areas[city]) for city in city_counts},
        type_counts=by_count(type_counter),
        price_ranking=tuple((int(p), int(c)) for p, c in ranking),
        total_records=len(data.records),
    )


def write_clean_csv(data: CleanDataset, sink) -> None:
    """Write records back out in the canonical six-column CSV format."""
    close = False
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        sink = open(sink, "w", encoding="utf-8", newline="")
        close = True
    try:
        writer = csv.writer(sink)
        writer.writerow(REQUIRED_COLUMNS)
        for r in data.records:
            writer.writerow(
                [r.kost_name, r.kota, r.type_kos, r.area, r.facility_score, r.harga_nominal]
            )
    finally:
        if close:
            sink.close()
