"""Feature pipeline: per-column integer vocabularies + frozen normalization.

The fitted encoder mirrors the first two (non-trainable) stages of the
deployed network: each categorical column is mapped to an integer index
(0 is reserved for out-of-vocabulary values), then all four encoded
columns are standardized with the training set's mean and population
variance. For four features the normalization state is 2*4+1 = 9 stored
scalars (means, variances, fitted row count).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import CleanDataset
from .errors import EmptyDatasetError

CATEGORICAL_COLUMNS = ("kota", "type_kos", "area")
FEATURE_COLUMNS = ("kota", "type_kos", "area", "facility_score")

# Added inside the square root when standardizing; keeps zero-variance
# columns from dividing by zero and is part of the serialized contract.
NORM_EPSILON = 1e-7


@dataclass(frozen=True)
class ColumnSchema:
    """Fixed feature layout: three categoricals then one numeric column."""

    columns: tuple[tuple[str, str], ...] = (
        ("kota", "categorical"),
        ("type_kos", "categorical"),
        ("area", "categorical"),
        ("facility_score", "numeric"),
    )

    def __post_init__(self):
        names = tuple(name for name, _ in self.columns)
        if names != FEATURE_COLUMNS:
            raise ValueError(f"unsupported column layout: {names}")


@dataclass(frozen=True)
class Vocabulary:
    """First-seen ordered token list; lookup maps unknown tokens to 0."""

    tokens: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be distinct")
        object.__setattr__(
            self, "_index", {tok: i + 1 for i, tok in enumerate(self.tokens)}
        )

    @classmethod
    def from_values(cls, values) -> "Vocabulary":
        seen: dict[str, None] = {}
        for v in values:
            seen.setdefault(v)
        return cls(tokens=tuple(seen))

    def lookup(self, token: str) -> int:
        return self._index.get(token, 0)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class NormalizationStats:
    means: np.ndarray
    variances: np.ndarray
    count: int

    def __post_init__(self):
        if self.means.shape != self.variances.shape:
            raise ValueError("means and variances must have matching shapes")
        if np.any(self.variances < 0):
            raise ValueError("variances must be non-negative")

    @property
    def stored_scalars(self) -> int:
        return self.means.size + self.variances.size + 1


@dataclass(frozen=True)
class FeatureEncoder:
    schema: ColumnSchema
    vocabularies: dict[str, Vocabulary]
    norm: NormalizationStats

    def __post_init__(self):
        missing = [c for c in CATEGORICAL_COLUMNS if c not in self.vocabularies]
        if missing:
            raise ValueError(f"encoder is missing vocabularies for: {missing}")

    @property
    def n_features(self) -> int:
        return len(self.schema.columns)


def _raw_matrix(enc_vocabs: dict[str, Vocabulary], data: CleanDataset) -> np.ndarray:
    raw = np.empty((len(data.records), len(FEATURE_COLUMNS)), dtype=np.float64)
    kota, type_kos, area = (enc_vocabs[c] for c in CATEGORICAL_COLUMNS)
    for i, r in enumerate(data.records):
        raw[i, 0] = kota.lookup(r.kota)
        raw[i, 1] = type_kos.lookup(r.type_kos)
        raw[i, 2] = area.lookup(r.area)
        raw[i, 3] = float(r.facility_score)
    return raw


def fit_encoder(train: CleanDataset) -> FeatureEncoder:
    """Fit vocabularies and normalization statistics on the training set.

    Vocabularies are built in first-seen order; normalization uses the
    population variance of the integer-encoded training matrix.
    """
    if len(train.records) == 0:
        raise EmptyDatasetError("cannot fit an encoder on an empty dataset")

    vocabularies = {
        "kota": Vocabulary.from_values(r.kota for r in train.records),
        "type_kos": Vocabulary.from_values(r.type_kos for r in train.records),
        "area": Vocabulary.from_values(r.area for r in train.records),
    }
    raw = _raw_matrix(vocabularies, train)
    norm = NormalizationStats(
        means=raw.mean(axis=0),
        variances=raw.var(axis=0),
        count=len(train.records),
    )
    return FeatureEncoder(schema=ColumnSchema(), vocabularies=vocabularies, norm=norm)


def _standardize(raw: np.ndarray, norm: NormalizationStats) -> np.ndarray:
    scale = np.sqrt(norm.variances + NORM_EPSILON)
    out = (raw - norm.means) / scale
    # A zero-variance column carries no information; it maps to 0 exactly,
    # including for values never seen in training.
    return np.where(norm.variances == 0.0, 0.0, out)


def encode_row(
    enc: FeatureEncoder, kota: str, type_kos: str, area: str, facility_score: int
) -> np.ndarray:
    """Encode one input as a 4-vector; unknown categories hit index 0."""
    raw = np.array(
        [
            float(enc.vocabularies["kota"].lookup(kota)),
            float(enc.vocabularies["type_kos"].lookup(type_kos)),
            float(enc.vocabularies["area"].lookup(area)),
            float(facility_score),
        ],
        dtype=np.float64,
    )
    return _standardize(raw, enc.norm)


def encode_matrix(enc: FeatureEncoder, data: CleanDataset) -> tuple[np.ndarray, np.ndarray]:
    """Encode a dataset into (X, y): an n-by-4 matrix and a price vector."""
    if len(data.records) == 0:
        raise EmptyDatasetError("cannot encode an empty dataset")
    raw = _raw_matrix(enc.vocabularies, data)
    X = _standardize(raw, enc.norm)
    y = np.array([float(r.harga_nominal) for r in data.records], dtype=np.float64)
    return np.ascontiguousarray(X), y
