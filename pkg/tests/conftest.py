from __future__ import annotations

import pytest

from kospred.bundle import BundleMetadata, ModelBundle, areas_by_city_from
from kospred.dataset import RawRecord, SplitSpec, cleanse, split
from kospred.encoding import encode_matrix, fit_encoder
from kospred.neuralnet import ArchSpec, TrainConfig, train
from kospred.synth import generate_corpus


def record(
    name="Kost A",
    kota="surabaya",
    type_kos="putri",
    area="rungkut",
    facility_score=4,
    harga_nominal=1_500_000,
    malformed=False,
):
    return RawRecord(name, kota, type_kos, area, facility_score, harga_nominal, malformed)


def distinct_records(n, prefix="Kost"):
    """n valid records with distinct names so nothing collapses."""
    cities = ("surabaya", "jogja", "malang")
    areas = ("rungkut", "depok", "klojen")
    types = ("putri", "putra", "campur")
    return [
        record(
            name=f"{prefix} {i}",
            kota=cities[i % 3],
            type_kos=types[i % 3],
            area=areas[(i // 3) % 3],
            facility_score=i % 8,
            harga_nominal=500_000 + 50_000 * (i % 11),
        )
        for i in range(n)
    ]


@pytest.fixture(scope="session")
def mirror_corpus():
    return generate_corpus(7, 1205)


@pytest.fixture(scope="session")
def trained_bundle():
    """Small but real bundle shared by bundle/service tests."""
    data = cleanse(generate_corpus(11, 400), source="fixture")
    train_ds, test_ds = split(data, SplitSpec(0.2, 3))
    encoder = fit_encoder(train_ds)
    X_train, y_train = encode_matrix(encoder, train_ds)
    X_test, y_test = encode_matrix(encoder, test_ds)
    cfg = TrainConfig(epochs=30, batch_size=32, seed=5)
    model, history = train(ArchSpec(hidden=(32, 16)), X_train, y_train, X_test, y_test, cfg)
    return ModelBundle(
        encoder=encoder,
        model=model,
        metadata=BundleMetadata(
            training_seed=5,
            arch_summary=model.arch.summary,
            train_mae=history.train_mae[-1],
            val_mae=history.val_mae[-1],
        ),
        areas_by_city=areas_by_city_from(train_ds),
    )
