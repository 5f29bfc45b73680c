import numpy as np
import pytest
from hypothesis import given, strategies as st

from kospred.dataset import CleanDataset, Provenance, cleanse
from kospred.encoding import (
    NORM_EPSILON,
    Vocabulary,
    encode_matrix,
    encode_row,
    fit_encoder,
)
from kospred.errors import EmptyDatasetError

from conftest import distinct_records, record


class TestVocabulary:
    def test_first_seen_order(self):
        vocab = Vocabulary.from_values(["surabaya", "surabaya", "malang"])
        assert vocab.tokens == ("surabaya", "malang")
        assert vocab.lookup("surabaya") == 1
        assert vocab.lookup("malang") == 2

    def test_unknown_maps_to_zero(self):
        vocab = Vocabulary.from_values(["surabaya"])
        assert vocab.lookup("atlantis") == 0

    def test_duplicate_tokens_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(tokens=("a", "a"))

    @given(st.lists(st.text(max_size=8), max_size=40))
    def test_round_trip(self, values):
        vocab = Vocabulary.from_values(values)
        for token in vocab.tokens:
            assert vocab.tokens[vocab.lookup(token) - 1] == token


class TestFitEncoder:
    def test_vocabularies_from_train_only(self):
        records = [
            record(name="Kost 1", kota="surabaya"),
            record(name="Kost 2", kota="surabaya", area="gubeng"),
            record(name="Kost 3", kota="malang"),
        ]
        enc = fit_encoder(cleanse(records))
        assert enc.vocabularies["kota"].tokens == ("surabaya", "malang")

    def test_nine_stored_scalars(self):
        enc = fit_encoder(cleanse(distinct_records(8)))
        assert enc.norm.stored_scalars == 9

    def test_single_row_degenerate_variance(self):
        enc = fit_encoder(cleanse([record()]))
        assert np.all(enc.norm.variances == 0.0)
        assert enc.norm.count == 1

    def test_empty_train_rejected(self):
        empty = CleanDataset(records=(), provenance=Provenance("x", 0, 0, 0, 0))
        with pytest.raises(EmptyDatasetError):
            fit_encoder(empty)

    def test_population_variance(self):
        # kota indices over 4 rows: [1, 1, 2, 2] -> population var 0.25
        records = [
            record(name="Kost 1", kota="a"),
            record(name="Kost 2", kota="a"),
            record(name="Kost 3", kota="b"),
            record(name="Kost 4", kota="b"),
        ]
        enc = fit_encoder(cleanse(records))
        assert enc.norm.variances[0] == pytest.approx(0.25)


class TestEncodeRow:
    def test_deterministic(self):
        enc = fit_encoder(cleanse(distinct_records(6)))
        a = encode_row(enc, "surabaya", "putri", "rungkut", 4)
        b = encode_row(enc, "surabaya", "putri", "rungkut", 4)
        assert np.array_equal(a, b)

    def test_unknown_city_uses_index_zero(self):
        enc = fit_encoder(cleanse(distinct_records(6)))
        got = encode_row(enc, "atlantis", "putri", "rungkut", 4)
        mean, var = enc.norm.means[0], enc.norm.variances[0]
        assert got[0] == (0.0 - mean) / np.sqrt(var + NORM_EPSILON)

    def test_facility_z_scores_match_hand_computation(self):
        # facility scores [4, 6, 8]: population z-scores are +-1.2247, 0
        records = [
            record(name=f"Kost {i}", facility_score=score)
            for i, score in enumerate([4, 6, 8])
        ]
        enc = fit_encoder(cleanse(records))
        column = [
            encode_row(enc, r.kota, r.type_kos, r.area, r.facility_score)[3]
            for r in records
        ]
        assert column == pytest.approx([-1.2247, 0.0, 1.2247], abs=1e-3)

    def test_zero_variance_column_maps_to_zero_exactly(self):
        enc = fit_encoder(cleanse([record()]))  # every column constant
        got = encode_row(enc, "surabaya", "putri", "rungkut", 4)
        assert np.all(got == 0.0)
        # even for a value never seen in training
        assert np.all(encode_row(enc, "atlantis", "x", "y", 99) == 0.0)

    def test_encoding_does_not_fit(self):
        enc = fit_encoder(cleanse(distinct_records(6)))
        before = enc.vocabularies["kota"].tokens
        encode_row(enc, "atlantis", "putri", "rungkut", 4)
        assert enc.vocabularies["kota"].tokens == before


class TestEncodeMatrix:
    def test_single_record_shapes(self):
        data = cleanse([record()])
        enc = fit_encoder(data)
        X, y = encode_matrix(enc, data)
        assert X.shape == (1, 4)
        assert y.shape == (1,)
        assert y[0] == 1_500_000.0

    def test_rows_match_encode_row_exactly(self):
        data = cleanse(distinct_records(17))
        enc = fit_encoder(data)
        X, _ = encode_matrix(enc, data)
        for i, r in enumerate(data.records):
            row = encode_row(enc, r.kota, r.type_kos, r.area, r.facility_score)
            assert np.array_equal(X[i], row)

    def test_fitted_set_is_standardized(self):
        data = cleanse(distinct_records(50))
        enc = fit_encoder(data)
        X, _ = encode_matrix(enc, data)
        assert np.abs(X.mean(axis=0)).max() < 1e-9
        # variance carries the epsilon bias var/(var + eps), so the
        # tolerance is looser than for the mean
        assert np.abs(X.var(axis=0) - 1.0).max() < 1e-6

    def test_permuting_rows_permutes_encoding(self):
        data = cleanse(distinct_records(11))
        enc = fit_encoder(data)
        X, y = encode_matrix(enc, data)
        perm = np.random.default_rng(0).permutation(len(data.records))
        shuffled = type(data)(
            records=tuple(data.records[i] for i in perm), provenance=data.provenance
        )
        Xp, yp = encode_matrix(enc, shuffled)
        assert np.array_equal(Xp, X[perm])
        assert np.array_equal(yp, y[perm])
