import numpy as np
import pytest

from kospred.errors import MorphismError
from kospred.nas import (
    SearchBudget,
    SearchSpace,
    deepen,
    random_arch,
    search,
    widen,
)
from kospred.neuralnet import (
    ArchSpec,
    TrainConfig,
    forward,
    init_model,
    layer_param_counts,
    train,
)


def probe_inputs(n=64, seed=0):
    return np.ascontiguousarray(np.random.default_rng(seed).normal(size=(n, 4)))


def make_training_data(n=120, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = 2.0 * X[:, 0] - X[:, 2] + rng.normal(0, 0.1, size=n) + 5.0
    return np.ascontiguousarray(X[: n // 2]), y[: n // 2], np.ascontiguousarray(
        X[n // 2 :]
    ), y[n // 2 :]


class TestSearchSpace:
    def test_reference_stack_is_in_default_space(self):
        assert SearchSpace().contains(ArchSpec(hidden=(256, 512, 128)))

    def test_bad_ranges_rejected(self):
        with pytest.raises(ValueError):
            SearchSpace(min_depth=0)
        with pytest.raises(ValueError):
            SearchSpace(width_choices=())


class TestRandomArch:
    def test_pinned_positions_force_the_reference_stack(self):
        space = SearchSpace(
            min_depth=3,
            max_depth=3,
            width_choices_per_layer=((256,), (512,), (128,)),
        )
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert random_arch(space, rng).hidden == (256, 512, 128)

    def test_singleton_space(self):
        space = SearchSpace(min_depth=1, max_depth=1, width_choices=(16,))
        assert random_arch(space, np.random.default_rng(1)).hidden == (16,)

    def test_deterministic_under_rng_state(self):
        space = SearchSpace()
        a = random_arch(space, np.random.default_rng(9))
        b = random_arch(space, np.random.default_rng(9))
        assert a == b

    def test_draws_stay_in_space(self):
        space = SearchSpace(min_depth=2, max_depth=4, width_choices=(16, 64))
        rng = np.random.default_rng(3)
        for _ in range(50):
            assert space.contains(random_arch(space, rng))


class TestWiden:
    def test_same_width_is_identity(self):
        model = init_model(ArchSpec(hidden=(8, 6)), seed=2)
        same = widen(model, 0, 8, np.random.default_rng(0))
        for a, b in zip(same.layers, model.layers):
            assert np.array_equal(a.weights, b.weights)
            assert np.array_equal(a.bias, b.bias)
        X = probe_inputs()
        assert np.array_equal(forward(same, X), forward(model, X))

    def test_function_preserved_within_1e9(self):
        model = init_model(ArchSpec(hidden=(8, 6)), seed=3)
        wide = widen(model, 0, 16, np.random.default_rng(4))
        X = probe_inputs()
        assert np.abs(forward(wide, X) - forward(model, X)).max() < 1e-9

    def test_param_count_grows_as_formula(self):
        # first hidden layer 256 -> 512: 4*256+256 = 1280 becomes 4*512+512 = 2560
        model = init_model(ArchSpec(hidden=(256, 32)), seed=0)
        assert layer_param_counts(model.arch)[0] == 1_280
        wide = widen(model, 0, 512, np.random.default_rng(0))
        assert layer_param_counts(wide.arch)[0] == 2_560

    def test_shrinking_rejected(self):
        model = init_model(ArchSpec(hidden=(8,)), seed=0)
        with pytest.raises(MorphismError):
            widen(model, 0, 4, np.random.default_rng(0))

    def test_bad_index_rejected(self):
        model = init_model(ArchSpec(hidden=(8,)), seed=0)
        with pytest.raises(MorphismError):
            widen(model, 1, 16, np.random.default_rng(0))

    def test_parent_untouched(self):
        model = init_model(ArchSpec(hidden=(8,)), seed=5)
        snapshot = [p.copy() for p in model.parameters()]
        widen(model, 0, 32, np.random.default_rng(1))
        for before, after in zip(snapshot, model.parameters()):
            assert np.array_equal(before, after)


class TestDeepen:
    def test_function_preserved_exactly_on_probes(self):
        model = init_model(ArchSpec(hidden=(8, 6)), seed=6)
        deep = deepen(model, 1)
        X = probe_inputs()
        assert np.abs(forward(deep, X) - forward(model, X)).max() < 1e-9

    def test_depth_grows_by_one_and_other_layers_untouched(self):
        model = init_model(ArchSpec(hidden=(8, 6)), seed=7)
        deep = deepen(model, 0)
        assert deep.arch.hidden == (8, 8, 6)
        assert np.array_equal(deep.layers[0].weights, model.layers[0].weights)
        assert np.array_equal(deep.layers[2].weights, model.layers[1].weights)
        assert np.array_equal(deep.layers[3].weights, model.layers[2].weights)

    def test_new_layer_parameter_formula(self):
        # width w contributes w^2 + w parameters
        model = init_model(ArchSpec(hidden=(128,)), seed=0)
        deep = deepen(model, 0)
        assert layer_param_counts(deep.arch)[1] == 128 * 128 + 128 == 16_512

    def test_insertion_outside_hidden_stack_rejected(self):
        model = init_model(ArchSpec(hidden=(8,)), seed=0)
        with pytest.raises(MorphismError):
            deepen(model, -1)
        with pytest.raises(MorphismError):
            deepen(model, 1)


class TestSearch:
    def test_degenerate_budget_returns_single_trial(self):
        Xt, yt, Xv, yv = make_training_data()
        budget = SearchBudget(n_random=1, n_morph=0, epochs_per_trial=5, seed=2)
        cfg = TrainConfig(batch_size=16, seed=2)
        best, trials = search(Xt, yt, Xv, yv, SearchSpace(), budget, cfg)
        assert len(trials) == 1
        assert best.arch == trials[0].arch

    def test_best_is_argmin_and_incumbent_monotone(self):
        Xt, yt, Xv, yv = make_training_data()
        budget = SearchBudget(n_random=3, n_morph=3, epochs_per_trial=4, seed=5)
        cfg = TrainConfig(batch_size=16, seed=5)
        best, trials = search(Xt, yt, Xv, yv, SearchSpace(), budget, cfg)
        maes = [t.val_mae for t in trials if t.val_mae is not None]
        running_best = np.minimum.accumulate(maes)
        assert np.all(np.diff(running_best) <= 0)
        pred = forward(best, Xv)
        assert float(np.abs(pred - yv).mean()) == pytest.approx(min(maes), rel=1e-9)

    def test_ledger_reproducible(self):
        Xt, yt, Xv, yv = make_training_data()
        budget = SearchBudget(n_random=2, n_morph=2, epochs_per_trial=3, seed=8)
        cfg = TrainConfig(batch_size=16, seed=8)
        _, first = search(Xt, yt, Xv, yv, SearchSpace(), budget, cfg)
        _, second = search(Xt, yt, Xv, yv, SearchSpace(), budget, cfg)
        assert [t.as_dict() for t in first] == [t.as_dict() for t in second]

    def test_architectures_stay_in_space(self):
        Xt, yt, Xv, yv = make_training_data()
        space = SearchSpace(min_depth=1, max_depth=3, width_choices=(8, 16, 32))
        budget = SearchBudget(n_random=3, n_morph=4, epochs_per_trial=2, seed=1)
        cfg = TrainConfig(batch_size=16, seed=1)
        best, trials = search(Xt, yt, Xv, yv, space, budget, cfg)
        assert space.contains(best.arch)
        for t in trials:
            assert space.contains(t.arch)

    def test_morphism_trials_record_parent(self):
        Xt, yt, Xv, yv = make_training_data()
        budget = SearchBudget(n_random=2, n_morph=2, epochs_per_trial=2, seed=3)
        cfg = TrainConfig(batch_size=16, seed=3)
        _, trials = search(Xt, yt, Xv, yv, SearchSpace(), budget, cfg)
        warm, morphs = trials[:2], trials[2:]
        assert all(t.parent is None and t.morphism is None for t in warm)
        for t in morphs:
            assert t.parent is not None
            assert t.morphism["kind"] in ("widen", "deepen")

    def test_unfinetuned_morphism_child_matches_parent_validation(self):
        # the function-preservation consequence: before any fine-tuning the
        # child scores exactly like its parent
        Xt, yt, Xv, yv = make_training_data()
        model, _ = train(
            ArchSpec(hidden=(8, 6)), Xt, yt, cfg=TrainConfig(epochs=5, batch_size=16, seed=4)
        )
        parent_mae = float(np.abs(forward(model, Xv) - yv).mean())
        child = widen(model, 0, 16, np.random.default_rng(2))
        child_mae = float(np.abs(forward(child, Xv) - yv).mean())
        assert child_mae == pytest.approx(parent_mae, rel=1e-6)
        deep_child = deepen(model, 1)
        deep_mae = float(np.abs(forward(deep_child, Xv) - yv).mean())
        assert deep_mae == pytest.approx(parent_mae, rel=1e-6)
