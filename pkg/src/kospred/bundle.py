"""The .kosm deployment bundle: encoder + network + client metadata.

A .kosm file is fully self-contained: loading one requires nothing from
training time. Byte layout (everything little-endian, strings are a u32
byte length followed by UTF-8 bytes; see docs/kosm-format.md):

    magic "KOSM", version u32, then five sections in fixed order —
    schema (column layout, run metadata, city->area map),
    vocabularies, normalization, facility_catalog, layers.

Weights and biases narrow to 32-bit floats on export; everything else
keeps full precision.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .dataset import CleanDataset
from .encoding import (
    CATEGORICAL_COLUMNS,
    ColumnSchema,
    FeatureEncoder,
    NormalizationStats,
    Vocabulary,
    encode_row,
)
from .errors import (
    BundleCorruptError,
    BundleFormatError,
    BundleVersionError,
)
from .neuralnet import LINEAR, RELU, ArchSpec, DenseLayer, MLPModel, forward

KOSM_MAGIC = b"KOSM"
KOSM_VERSION = 1

FIXED_TIMESTAMP = "1970-01-01T00:00:00Z"

# Ships inside every bundle so clients and model can never disagree on
# how a facility list becomes a facility score.
DEFAULT_FACILITY_CATALOG = (
    "wifi",
    "ac",
    "kamar mandi dalam",
    "kasur",
    "lemari",
    "meja belajar",
    "parkir motor",
    "dapur bersama",
    "penjaga kos",
    "laundry",
)

_KIND_CODES = {"categorical": 0, "numeric": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_ACTIVATION_CODES = {RELU: 0, LINEAR: 1}
_ACTIVATION_NAMES = {v: k for k, v in _ACTIVATION_CODES.items()}


@dataclass(frozen=True)
class BundleMetadata:
    format_version: int = KOSM_VERSION
    created_at: str = FIXED_TIMESTAMP
    training_seed: int = 0
    arch_summary: str = ""
    train_mae: float = float("nan")
    val_mae: float = float("nan")


@dataclass
class ModelBundle:
    encoder: FeatureEncoder
    model: MLPModel
    metadata: BundleMetadata
    facility_catalog: tuple[str, ...] = DEFAULT_FACILITY_CATALOG
    areas_by_city: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.model.arch.input_dim != self.encoder.n_features:
            raise ValueError(
                f"model expects {self.model.arch.input_dim} inputs but the "
                f"encoder produces {self.encoder.n_features}"
            )


@dataclass(frozen=True)
class Prediction:
    price_idr: float  # clamped at 0
    raw_price: float  # unclamped head output, for diagnostics
    display_price: int  # rounded to the nearest Rp 1.000
    facility_score_used: int
    unknown_facilities: tuple[str, ...]
    oov_fields: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "price_idr": self.price_idr,
            "raw_price": self.raw_price,
            "display_price": self.display_price,
            "facility_score_used": self.facility_score_used,
            "unknown_facilities": list(self.unknown_facilities),
            "oov_fields": list(self.oov_fields),
        }


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def areas_by_city_from(data: CleanDataset) -> dict[str, tuple[str, ...]]:
    """First-seen city -> areas map, for the client's dependent dropdowns."""
    seen: dict[str, dict[str, None]] = {}
    for r in data.records:
        seen.setdefault(r.kota, {}).setdefault(r.area)
    return {city: tuple(areas) for city, areas in seen.items()}


def predict(
    bundle: ModelBundle,
    kota: str,
    area: str,
    type_kos: str,
    facilities: list[str] | tuple[str, ...] = (),
) -> Prediction:
    """Price a hypothetical listing; pure function of (bundle, inputs).

    The facility score counts the distinct requested facility names that
    exist in the bundle's catalog; unknown names are reported back, never
    an error. Unknown categorical values go through the out-of-vocabulary
    index.
    """
    distinct: dict[str, None] = {}
    for name in facilities:
        distinct.setdefault(name)
    catalog = set(bundle.facility_catalog)
    known = [name for name in distinct if name in catalog]
    unknown = tuple(name for name in distinct if name not in catalog)

    oov = tuple(
        column
        for column, value in (("kota", kota), ("type_kos", type_kos), ("area", area))
        if bundle.encoder.vocabularies[column].lookup(value) == 0
    )

    x = encode_row(bundle.encoder, kota, type_kos, area, len(known))
    raw = float(forward(bundle.model, x[None, :])[0])
    price = max(0.0, raw)
    display = int(math.floor(price / 1000.0 + 0.5)) * 1000
    return Prediction(
        price_idr=price,
        raw_price=raw,
        display_price=display,
        facility_score_used=len(known),
        unknown_facilities=unknown,
        oov_fields=oov,
    )


# --- binary writer ---------------------------------------------------------


class _Writer:
    def __init__(self):
        self.buf = bytearray()

    def u8(self, v: int):
        self.buf += struct.pack("<B", v)

    def u32(self, v: int):
        self.buf += struct.pack("<I", v)

    def u64(self, v: int):
        self.buf += struct.pack("<Q", v)

    def f64(self, v: float):
        self.buf += struct.pack("<d", v)

    def string(self, s: str):
        raw = s.encode("utf-8")
        self.u32(len(raw))
        self.buf += raw

    def f32_array(self, arr: np.ndarray):
        self.buf += np.ascontiguousarray(arr, dtype="<f4").tobytes()

    def f64_array(self, arr: np.ndarray):
        self.buf += np.ascontiguousarray(arr, dtype="<f8").tobytes()


def export_lite(bundle: ModelBundle, sink) -> int:
    """Serialize the bundle; returns the byte count written.

    Identical bundles serialize to identical bytes; use a fixed
    ``metadata.created_at`` for reproducible files.
    """
    w = _Writer()
    w.buf += KOSM_MAGIC
    w.u32(KOSM_VERSION)

    # schema
    columns = bundle.encoder.schema.columns
    w.u32(len(columns))
    for name, kind in columns:
        w.string(name)
        w.u8(_KIND_CODES[kind])
    meta = bundle.metadata
    w.string(meta.created_at)
    w.u64(meta.training_seed)
    w.string(meta.arch_summary)
    w.f64(meta.train_mae)
    w.f64(meta.val_mae)
    w.u32(len(bundle.areas_by_city))
    for city, areas in bundle.areas_by_city.items():
        w.string(city)
        w.u32(len(areas))
        for area in areas:
            w.string(area)

    # vocabularies
    w.u32(len(CATEGORICAL_COLUMNS))
    for column in CATEGORICAL_COLUMNS:
        vocab = bundle.encoder.vocabularies[column]
        w.string(column)
        w.u32(len(vocab.tokens))
        for token in vocab.tokens:
            w.string(token)

    # normalization
    norm = bundle.encoder.norm
    w.u32(norm.means.size)
    w.f64_array(norm.means)
    w.f64_array(norm.variances)
    w.u64(norm.count)

    # facility catalog
    w.u32(len(bundle.facility_catalog))
    for name in bundle.facility_catalog:
        w.string(name)

    # layers
    w.u32(len(bundle.model.layers))
    for layer in bundle.model.layers:
        in_dim, out_dim = layer.weights.shape
        w.u32(in_dim)
        w.u32(out_dim)
        w.u8(_ACTIVATION_CODES[layer.activation])
        w.f32_array(layer.weights)
        w.f32_array(layer.bias)

    data = bytes(w.buf)
    close = False
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        sink = open(sink, "wb")
        close = True
    try:
        sink.write(data)
    finally:
        if close:
            sink.close()
    return len(data)


# --- binary reader ---------------------------------------------------------


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.section = "header"

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if n < 0 or n > self.remaining:
            raise BundleCorruptError(f"section {self.section} is truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BundleCorruptError(
                f"section {self.section} holds an invalid UTF-8 string"
            ) from exc

    def f32_array(self, count: int, shape) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)

    def f64_array(self, count: int) -> np.ndarray:
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").copy()


def load_lite(source) -> ModelBundle:
    """Parse a .kosm byte stream into a ready-to-predict bundle.

    Never crashes on arbitrary bytes: any malformed input raises a typed
    bundle error naming the offending section.
    """
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()

    r = _Reader(data)
    if r.remaining < 4 or r.take(4) != KOSM_MAGIC:
        raise BundleFormatError("not a .kosm file (bad magic)")
    version = r.u32()
    if version != KOSM_VERSION:
        raise BundleVersionError(f"unsupported .kosm version {version}")

    r.section = "schema"
    n_columns = r.u32()
    columns = []
    for _ in range(n_columns):
        name = r.string()
        code = r.u8()
        if code not in _KIND_NAMES:
            raise BundleCorruptError(f"section schema: unknown column kind {code}")
        columns.append((name, _KIND_NAMES[code]))
    try:
        schema = ColumnSchema(columns=tuple(columns))
    except ValueError as exc:
        raise BundleCorruptError(f"section schema: {exc}") from exc
    metadata = BundleMetadata(
        format_version=version,
        created_at=r.string(),
        training_seed=r.u64(),
        arch_summary=r.string(),
        train_mae=r.f64(),
        val_mae=r.f64(),
    )
    areas_by_city = {}
    for _ in range(r.u32()):
        city = r.string()
        areas_by_city[city] = tuple(r.string() for _ in range(r.u32()))

    r.section = "vocabularies"
    vocabularies = {}
    for _ in range(r.u32()):
        column = r.string()
        tokens = tuple(r.string() for _ in range(r.u32()))
        try:
            vocabularies[column] = Vocabulary(tokens=tokens)
        except ValueError as exc:
            raise BundleCorruptError(f"section vocabularies: {exc}") from exc
    missing = [c for c in CATEGORICAL_COLUMNS if c not in vocabularies]
    if missing:
        raise BundleCorruptError(f"section vocabularies: missing {missing}")

    r.section = "normalization"
    n_features = r.u32()
    if n_features != len(columns):
        raise BundleCorruptError(
            f"section normalization: {n_features} features for {len(columns)} columns"
        )
    means = r.f64_array(n_features)
    variances = r.f64_array(n_features)
    count = r.u64()
    try:
        norm = NormalizationStats(means=means, variances=variances, count=count)
    except ValueError as exc:
        raise BundleCorruptError(f"section normalization: {exc}") from exc

    r.section = "facility_catalog"
    facility_catalog = tuple(r.string() for _ in range(r.u32()))

    r.section = "layers"
    n_layers = r.u32()
    if n_layers < 1:
        raise BundleCorruptError("section layers: a bundle needs at least one layer")
    layers = []
    dims = []
    for i in range(n_layers):
        in_dim = r.u32()
        out_dim = r.u32()
        if in_dim < 1 or out_dim < 1:
            raise BundleCorruptError(f"section layers: layer {i} has empty dims")
        code = r.u8()
        if code not in _ACTIVATION_NAMES:
            raise BundleCorruptError(f"section layers: unknown activation {code}")
        weights = r.f32_array(in_dim * out_dim, (in_dim, out_dim))
        bias = r.f32_array(out_dim, (out_dim,))
        layers.append(DenseLayer(weights=weights, bias=bias, activation=_ACTIVATION_NAMES[code]))
        dims.append((in_dim, out_dim))

    if r.remaining:
        raise BundleCorruptError(f"{r.remaining} trailing bytes after the layers section")

    for i in range(1, n_layers):
        if dims[i][0] != dims[i - 1][1]:
            raise BundleCorruptError(
                f"section layers: layer {i} input {dims[i][0]} != previous output {dims[i-1][1]}"
            )
    if dims[0][0] != n_features:
        raise BundleCorruptError(
            f"section layers: first layer expects {dims[0][0]} inputs, schema has {n_features}"
        )
    if dims[-1][1] != 1:
        raise BundleCorruptError("section layers: output layer must have width 1")
    if layers[-1].activation != LINEAR or any(
        l.activation != RELU for l in layers[:-1]
    ):
        raise BundleCorruptError("section layers: activation pattern must be relu*, linear")

    arch = ArchSpec(input_dim=n_features, hidden=tuple(d[1] for d in dims[:-1]))
    encoder = FeatureEncoder(schema=schema, vocabularies=vocabularies, norm=norm)
    model = MLPModel(arch=arch, layers=layers)
    return ModelBundle(
        encoder=encoder,
        model=model,
        metadata=metadata,
        facility_catalog=facility_catalog,
        areas_by_city=areas_by_city,
    )


# --- full-precision checkpoint ---------------------------------------------


def save_checkpoint(bundle: ModelBundle, sink, config: dict | None = None) -> None:
    """Write the training-time JSON checkpoint (full 64-bit weights)."""
    doc = {
        "format": "kospred-checkpoint",
        "version": 1,
        "arch": {
            "input_dim": bundle.model.arch.input_dim,
            "hidden": list(bundle.model.arch.hidden),
        },
        "config": config or {},
        "metadata": {
            "created_at": bundle.metadata.created_at,
            "training_seed": bundle.metadata.training_seed,
            "arch_summary": bundle.metadata.arch_summary,
            "train_mae": bundle.metadata.train_mae,
            "val_mae": bundle.metadata.val_mae,
        },
        "encoder": {
            "vocabularies": {
                c: list(bundle.encoder.vocabularies[c].tokens) for c in CATEGORICAL_COLUMNS
            },
            "normalization": {
                "means": bundle.encoder.norm.means.tolist(),
                "variances": bundle.encoder.norm.variances.tolist(),
                "count": bundle.encoder.norm.count,
            },
        },
        "facility_catalog": list(bundle.facility_catalog),
        "areas_by_city": {c: list(a) for c, a in bundle.areas_by_city.items()},
        "layers": [
            {
                "activation": layer.activation,
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
            }
            for layer in bundle.model.layers
        ],
    }
    close = False
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        sink = open(sink, "w", encoding="utf-8")
        close = True
    try:
        json.dump(doc, sink)
    finally:
        if close:
            sink.close()


def load_checkpoint(source) -> ModelBundle:
    """Rebuild a bundle from the JSON checkpoint."""
    close = False
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        source = open(source, "r", encoding="utf-8")
        close = True
    try:
        doc = json.load(source)
    finally:
        if close:
            source.close()
    if doc.get("format") != "kospred-checkpoint":
        raise BundleFormatError("not a kospred checkpoint document")

    try:
        arch = ArchSpec(
            input_dim=int(doc["arch"]["input_dim"]), hidden=tuple(doc["arch"]["hidden"])
        )
        layers = [
            DenseLayer(
                weights=np.array(spec["weights"], dtype=np.float64),
                bias=np.array(spec["bias"], dtype=np.float64),
                activation=spec["activation"],
            )
            for spec in doc["layers"]
        ]
        model = MLPModel(arch=arch, layers=layers)
        norm_doc = doc["encoder"]["normalization"]
        encoder = FeatureEncoder(
            schema=ColumnSchema(),
            vocabularies={
                c: Vocabulary(tokens=tuple(tokens))
                for c, tokens in doc["encoder"]["vocabularies"].items()
            },
            norm=NormalizationStats(
                means=np.array(norm_doc["means"], dtype=np.float64),
                variances=np.array(norm_doc["variances"], dtype=np.float64),
                count=int(norm_doc["count"]),
            ),
        )
        meta_doc = doc["metadata"]
        metadata = BundleMetadata(
            format_version=KOSM_VERSION,
            created_at=meta_doc["created_at"],
            training_seed=int(meta_doc["training_seed"]),
            arch_summary=meta_doc["arch_summary"],
            train_mae=float(meta_doc["train_mae"]),
            val_mae=float(meta_doc["val_mae"]),
        )
        return ModelBundle(
            encoder=encoder,
            model=model,
            metadata=metadata,
            facility_catalog=tuple(doc["facility_catalog"]),
            areas_by_city={c: tuple(a) for c, a in doc["areas_by_city"].items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"malformed checkpoint document: {exc}") from exc
