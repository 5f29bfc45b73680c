"""Synthetic boarding-house corpus generator.

Produces a deterministic mirror corpus whose marginal distributions match
the reference production scrape at the canonical size of 1,205 rows: six
cities, 121 distinct areas split 23/7/24/23/15/29 across them, five
boarding types with fixed quotas, and exactly 68 listings at the modal
price of Rp 1.000.000. Prices follow

    city base + area offset + type offset + 75,000 * facility_score + noise

with Gaussian noise (sigma = 50,000), rounded to the nearest Rp 25.000.
For other row counts every quota scales by largest remainder.
"""

from __future__ import annotations

import csv
from collections import Counter

import numpy as np

from .dataset import RawRecord

REFERENCE_ROWS = 1205

CITIES = ("jogja", "malang", "jakarta", "surabaya", "semarang", "bandung")

# Row quotas at the reference size; also the proportional weights for
# other sizes.
CITY_ROW_WEIGHTS = {
    "jogja": 260,
    "malang": 125,
    "jakarta": 230,
    "surabaya": 235,
    "semarang": 150,
    "bandung": 205,
}

CITY_BASE_PRICE = {
    "jogja": 800_000,
    "malang": 650_000,
    "jakarta": 1_400_000,
    "surabaya": 1_000_000,
    "semarang": 700_000,
    "bandung": 900_000,
}

# Distinct-area quota per city is the length of its pool.
CITY_AREAS = {
    "jogja": (
        "depok", "sleman", "caturtunggal", "condongcatur", "umbulharjo",
        "gondokusuman", "mlati", "tegalrejo", "kotagede", "banguntapan",
        "wirobrajan", "ngaglik", "pakualaman", "mergangsan", "gamping",
        "godean", "kalasan", "berbah", "sewon", "kasihan", "danurejan",
        "jetis", "kraton",
    ),
    "malang": (
        "lowokwaru", "klojen", "blimbing", "sukun", "kedungkandang", "dau",
        "karangploso",
    ),
    "jakarta": (
        "tebet", "setiabudi", "menteng", "kebayoran baru", "kebayoran lama",
        "pancoran", "mampang prapatan", "pasar minggu", "cilandak",
        "jagakarsa", "kemang", "kuningan", "senayan", "cempaka putih",
        "kemayoran", "senen", "matraman", "pulogadung", "duren sawit",
        "kelapa gading", "grogol petamburan", "palmerah", "tanah abang",
        "pesanggrahan",
    ),
    "surabaya": (
        "rungkut", "gubeng", "sukolilo", "wonokromo", "tegalsari",
        "mulyorejo", "tambaksari", "sawahan", "genteng", "lakarsantri",
        "wiyung", "dukuh pakis", "gayungan", "jambangan", "karang pilang",
        "kenjeran", "krembangan", "semampir", "simokerto", "tandes",
        "tenggilis mejoyo", "wonocolo", "bulak",
    ),
    "semarang": (
        "tembalang", "banyumanik", "gajahmungkur", "candisari", "pedurungan",
        "gayamsari", "ngaliyan", "tugu", "genuk", "gunungpati",
        "semarang tengah", "semarang timur", "semarang barat",
        "semarang utara", "semarang selatan",
    ),
    "bandung": (
        "coblong", "dago", "cidadap", "sukasari", "sukajadi", "cicendo",
        "andir", "bandung wetan", "sumur bandung", "batununggal", "lengkong",
        "regol", "astanaanyar", "bojongloa kaler", "bojongloa kidul",
        "babakan ciparay", "bandung kulon", "cibeunying kaler",
        "cibeunying kidul", "kiaracondong", "arcamanik", "antapani",
        "mandalajati", "ujungberung", "cibiru", "panyileukan", "gedebage",
        "rancasari", "buahbatu",
    ),
}

# (label, reference-count weight, price offset in IDR)
TYPE_QUOTAS = (
    ("Campur", 511, 0),
    ("Putri", 441, 50_000),
    ("Putra", 214, -25_000),
    ("Putri Eksklusif", 23, 250_000),
    ("Putra Eksklusif", 16, 200_000),
)

FACILITY_PRICE_STEP = 75_000
NOISE_SIGMA = 50_000
PRICE_GRID = 25_000
MIN_PRICE = 150_000
MAX_FACILITY_SCORE = 10

MODAL_PRICE = 1_000_000
MODAL_COUNT_REFERENCE = 68

AREA_OFFSET_GRID = tuple(range(-60_000, 60_001, 15_000))

_NAME_FIRST = (
    "Pondok", "Griya", "Wisma", "Omah", "Graha", "Puri", "Asrama",
    "Saung", "Balai", "Pavilun",
)
_NAME_SECOND = (
    "Nirwana", "Harmoni", "Melati", "Anggrek", "Cemara", "Kenanga",
    "Mawar", "Flamboyan", "Dahlia", "Cendana", "Teratai", "Bougenvil",
)
_TYPE_SUFFIXES = "BCDEFGHIJKLMNOPQRSTUVWXYZ"


def _largest_remainder(weights: list[int], total: int) -> list[int]:
    """Integer quotas proportional to weights, summing exactly to total."""
    weight_sum = sum(weights)
    base = [w * total // weight_sum for w in weights]
    remainders = [(-(w * total % weight_sum), i) for i, w in enumerate(weights)]
    for _, i in sorted(remainders)[: total - sum(base)]:
        base[i] += 1
    return base


def _force_modal_plateau(prices: np.ndarray, rows: int) -> None:
    """Pin the modal price: exactly the scaled count of rows at MODAL_PRICE.

    The rows already closest to the modal price are snapped onto it, so the
    adjustment stays inside the noise scale. Every other price value is then
    kept strictly below the plateau count so the mode is unambiguous.
    """
    target = int(round(MODAL_COUNT_REFERENCE * rows / REFERENCE_ROWS))
    if target <= 0:
        return
    target = min(target, rows)
    order = np.argsort(np.abs(prices - MODAL_PRICE), kind="stable")
    plateau = set(int(i) for i in order[:target])
    prices[order[:target]] = MODAL_PRICE
    if target < 2:
        return

    counts = Counter(int(prices[i]) for i in range(rows) if i not in plateau)
    for value in sorted(counts):
        limit = 0 if value == MODAL_PRICE else target - 1
        if counts[value] <= limit:
            continue
        holders = [i for i in range(rows) if i not in plateau and int(prices[i]) == value]
        for i in holders[limit:]:
            step = 1
            while True:
                candidate = value + step * PRICE_GRID
                if candidate != MODAL_PRICE and counts[candidate] < target - 1:
                    break
                step += 1
            prices[i] = candidate
            counts[candidate] += 1
            counts[value] -= 1


def generate_corpus(seed: int, rows: int) -> list[RawRecord]:
    """Generate a cleansing-stable corpus of ``rows`` records.

    Deterministic per seed; listing names are unique per (city, area) so a
    cleanse pass keeps every generated row.
    """
    if rows < 1:
        raise ValueError(f"rows must be >= 1, got {rows}")
    rng = np.random.default_rng(seed)

    # Area price offsets, drawn once per (city, area) in fixed pool order.
    area_offsets = {}
    for city in CITIES:
        pool = CITY_AREAS[city]
        picks = rng.integers(0, len(AREA_OFFSET_GRID), size=len(pool))
        for area, pick in zip(pool, picks):
            area_offsets[(city, area)] = AREA_OFFSET_GRID[pick]

    city_quota = _largest_remainder([CITY_ROW_WEIGHTS[c] for c in CITIES], rows)
    city_idx = np.repeat(np.arange(len(CITIES)), city_quota)
    rng.shuffle(city_idx)

    type_quota = _largest_remainder([q for _, q, _ in TYPE_QUOTAS], rows)
    type_idx = np.repeat(np.arange(len(TYPE_QUOTAS)), type_quota)
    rng.shuffle(type_idx)

    facility_scores = rng.integers(0, MAX_FACILITY_SCORE + 1, size=rows)
    noise = rng.normal(0.0, NOISE_SIGMA, size=rows)

    # Every city covers its whole area pool before areas start repeating.
    areas: list[str] = [""] * rows
    for c, city in enumerate(CITIES):
        row_ids = np.flatnonzero(city_idx == c)
        pool = CITY_AREAS[city]
        fills = rng.integers(0, len(pool), size=max(0, len(row_ids) - len(pool)))
        for j, i in enumerate(row_ids):
            areas[i] = pool[j] if j < len(pool) else pool[fills[j - len(pool)]]

    first_picks = rng.integers(0, len(_NAME_FIRST), size=rows)
    second_picks = rng.integers(0, len(_NAME_SECOND), size=rows)

    prices = np.empty(rows, dtype=np.int64)
    for i in range(rows):
        city = CITIES[city_idx[i]]
        _, _, type_offset = TYPE_QUOTAS[type_idx[i]]
        raw = (
            CITY_BASE_PRICE[city]
            + area_offsets[(city, areas[i])]
            + type_offset
            + FACILITY_PRICE_STEP * int(facility_scores[i])
            + noise[i]
        )
        snapped = int(round(raw / PRICE_GRID)) * PRICE_GRID
        prices[i] = max(MIN_PRICE, snapped)

    _force_modal_plateau(prices, rows)

    records = []
    used_names: set[tuple[str, str, str]] = set()
    for i in range(rows):
        city = CITIES[city_idx[i]]
        area = areas[i]
        type_label = TYPE_QUOTAS[type_idx[i]][0]
        name = (
            f"Kost {_NAME_FIRST[first_picks[i]]} {_NAME_SECOND[second_picks[i]]} "
            f"{area.title()} {city.title()}"
        )
        candidate = name
        suffix = 0
        while (candidate, city, area) in used_names:
            candidate = f"{name} Tipe {_TYPE_SUFFIXES[suffix % len(_TYPE_SUFFIXES)]}"
            if suffix >= len(_TYPE_SUFFIXES):
                candidate += str(suffix // len(_TYPE_SUFFIXES) + 1)
            suffix += 1
        used_names.add((candidate, city, area))
        records.append(
            RawRecord(
                kost_name=candidate,
                kota=city,
                type_kos=type_label,
                area=area,
                facility_score=int(facility_scores[i]),
                harga_nominal=int(prices[i]),
            )
        )
    return records


def area_offset_table(seed: int) -> dict[tuple[str, str], int]:
    """Re-derive the per-(city, area) offsets for a seed.

    Offsets are the first draws from the generator's stream, so replaying
    just that prefix reproduces them exactly.
    """
    rng = np.random.default_rng(seed)
    offsets = {}
    for city in CITIES:
        pool = CITY_AREAS[city]
        picks = rng.integers(0, len(AREA_OFFSET_GRID), size=len(pool))
        for area, pick in zip(pool, picks):
            offsets[(city, area)] = AREA_OFFSET_GRID[pick]
    return offsets


def formula_price(record: RawRecord, offsets: dict[tuple[str, str], int]) -> float:
    """Noise-free price the generator's formula assigns to a record."""
    type_offset = next(off for label, _, off in TYPE_QUOTAS if label == record.type_kos)
    return float(
        CITY_BASE_PRICE[record.kota]
        + offsets[(record.kota, record.area)]
        + type_offset
        + FACILITY_PRICE_STEP * record.facility_score
    )


def write_raw_csv(records: list[RawRecord], sink) -> None:
    """Write generated records in the raw six-column CSV format."""
    close = False
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        sink = open(sink, "w", encoding="utf-8", newline="")
        close = True
    try:
        writer = csv.writer(sink)
        writer.writerow(
            ("kost_name", "kota", "type_kos", "area", "facility_score", "harga_nominal")
        )
        for r in records:
            writer.writerow(
                [r.kost_name, r.kota, r.type_kos, r.area, r.facility_score, r.harga_nominal]
            )
    finally:
        if close:
            sink.close()
