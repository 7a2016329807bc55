import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linelister.corpus import Vocabulary
from linelister.embeddings import (
    EmbeddingModel,
    HuffmanTree,
    SeedNotInVocabularyError,
    TrainingParams,
    build_negative_table,
    cosine,
    grow_seed,
    sghs_emission_probability,
    sghs_pair_gradient,
    sgns_pair_gradient,
    train,
)

EPS = 1e-5


def logsig(x):
    return -np.logaddexp(0.0, -x)


def sgns_objective(center, context, negatives):
    value = logsig(float(center @ context))
    for neg in negatives:
        value += logsig(-float(center @ neg))
    return float(value)


def sghs_objective(center, nodes, codes):
    value = 0.0
    for node, code in zip(nodes, codes):
        sign = 1.0 - 2.0 * code
        value += logsig(sign * float(center @ node))
    return float(value)


def numerical_gradient(objective, arrays):
    """Central finite differences of a scalar objective over a list of arrays."""
    grads = [np.zeros_like(a) for a in arrays]
    for a, g in zip(arrays, grads):
        flat_a, flat_g = a.ravel(), g.ravel()
        for i in range(flat_a.size):
            orig = flat_a[i]
            flat_a[i] = orig + EPS
            upper = objective(*arrays)
            flat_a[i] = orig - EPS
            lower = objective(*arrays)
            flat_a[i] = orig
            flat_g[i] = (upper - lower) / (2 * EPS)
    return grads


def max_relative_error(analytic, numerical):
    worst = 0.0
    for a, n in zip(analytic, numerical):
        if a.size == 0:
            continue
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def sgns_gradient_error(rng, n_negatives):
    center = rng.normal(0, 0.5, 10)
    context = rng.normal(0, 0.5, 10)
    negatives = rng.normal(0, 0.5, (n_negatives, 10))
    updated_c, updated_o, updated_n, _ = sgns_pair_gradient(
        center.copy(), context.copy(), negatives.copy(), 1.0
    )
    analytic = [updated_c - center, updated_o - context, updated_n - negatives]
    numerical = numerical_gradient(
        lambda c, o, n: sgns_objective(c, o, n), [center, context, negatives]
    )
    return max_relative_error(analytic, numerical)


def sghs_gradient_error(rng, path_length):
    center = rng.normal(0, 0.5, 10)
    nodes = rng.normal(0, 0.5, (path_length, 10))
    codes = rng.integers(0, 2, path_length).astype(np.uint8)
    updated_c, updated_n, _ = sghs_pair_gradient(center.copy(), nodes.copy(), codes, 1.0)
    analytic = [updated_c - center, updated_n - nodes]
    numerical = numerical_gradient(
        lambda c, n: sghs_objective(c, n, codes), [center, nodes]
    )
    return max_relative_error(analytic, numerical)


class TestSgnsGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        for trial in range(20):
            assert sgns_gradient_error(rng, n_negatives=trial % 5) < 1e-4

    def test_zero_learning_rate_is_identity(self):
        rng = np.random.default_rng(0)
        center = rng.normal(0, 1, 8)
        context = rng.normal(0, 1, 8)
        negatives = rng.normal(0, 1, (3, 8))
        c, o, n, _ = sgns_pair_gradient(center.copy(), context.copy(), negatives.copy(), 0.0)
        assert np.array_equal(c, center)
        assert np.array_equal(o, context)
        assert np.array_equal(n, negatives)

    def test_ascent_direction(self):
        rng = np.random.default_rng(1)
        vec = rng.normal(0, 1, 8)
        before = float(vec @ vec)
        c, o, _, _ = sgns_pair_gradient(vec.copy(), vec.copy(), np.zeros((0, 8)), 0.05)
        assert float(c @ o) > before

    def test_loss_is_negated_objective(self):
        rng = np.random.default_rng(2)
        center = rng.normal(0, 1, 6)
        context = rng.normal(0, 1, 6)
        negatives = rng.normal(0, 1, (2, 6))
        *_, loss = sgns_pair_gradient(center.copy(), context.copy(), negatives.copy(), 0.0)
        assert loss == pytest.approx(-sgns_objective(center, context, negatives))


class TestSghsGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(43)
        for trial in range(20):
            assert sghs_gradient_error(rng, path_length=1 + trial % 6) < 1e-4

    def test_empty_path_is_noop(self):
        center = np.ones(5)
        nodes = np.zeros((0, 5))
        c, n, loss = sghs_pair_gradient(center.copy(), nodes, np.zeros(0, dtype=np.uint8), 0.5)
        assert np.array_equal(c, center)
        assert loss == 0.0


def _random_sghs_model(rng, size, dim=6):
    vocabulary = Vocabulary(
        words=[f"w{i}" for i in range(size)],
        counts=[int(rng.integers(1, 50)) for _ in range(size)],
    )
    tree = HuffmanTree.from_vocabulary(vocabulary)
    return EmbeddingModel(
        vocabulary=vocabulary,
        input_vectors=rng.normal(0, 1, (size, dim)),
        output_vectors=rng.normal(0, 1, (max(size - 1, 0), dim)),
        variant="sghs",
        huffman=tree,
    )


class TestHuffman:
    @given(st.lists(st.integers(1, 1000), min_size=1, max_size=64))
    @settings(max_examples=80)
    def test_kraft_equality(self, counts):
        vocabulary = Vocabulary(
            words=[f"w{i}" for i in range(len(counts))], counts=counts
        )
        tree = HuffmanTree.from_vocabulary(vocabulary)
        assert math.fsum(2.0 ** -len(code) for code in tree.codes) == pytest.approx(1.0)

    def test_codes_are_prefix_free(self):
        vocabulary = Vocabulary(words=list("abcdef"), counts=[7, 5, 3, 2, 1, 1])
        tree = HuffmanTree.from_vocabulary(vocabulary)
        as_strings = ["".join(map(str, code)) for code in tree.codes]
        for i, code in enumerate(as_strings):
            for j, other in enumerate(as_strings):
                if i != j:
                    assert not other.startswith(code)

    def test_frequent_words_have_short_codes(self):
        vocabulary = Vocabulary(words=list("abcd"), counts=[100, 5, 4, 3])
        tree = HuffmanTree.from_vocabulary(vocabulary)
        assert len(tree.codes[0]) == min(len(c) for c in tree.codes)

    def test_emission_probabilities_sum_to_one(self):
        rng = np.random.default_rng(7)
        model = _random_sghs_model(rng, size=37)
        total = sum(
            sghs_emission_probability(model, "w3", word)
            for word in model.vocabulary.words
        )
        assert abs(total - 1.0) < 1e-9

    def test_single_word_vocabulary(self):
        rng = np.random.default_rng(8)
        model = _random_sghs_model(rng, size=1)
        assert sghs_emission_probability(model, "w0", "w0") == 1.0


class TestNegativeTable:
    def test_symmetric_counts(self):
        vocabulary = Vocabulary(words=["a", "b"], counts=[1, 1])
        sampler = build_negative_table(vocabulary)
        draws = sampler.sample(np.random.default_rng(0), 1_000_000)
        frequency = float(np.mean(draws == 0))
        assert abs(frequency - 0.5) / 0.5 < 0.02

    def test_power_law_ratio(self):
        vocabulary = Vocabulary(words=["a", "b"], counts=[16, 1])
        sampler = build_negative_table(vocabulary)
        draws = sampler.sample(np.random.default_rng(1), 1_000_000)
        count_a = int(np.sum(draws == 0))
        count_b = int(np.sum(draws == 1))
        assert abs(count_a / count_b - 8.0) / 8.0 < 0.02

    def test_single_word(self):
        vocabulary = Vocabulary(words=["only"], counts=[9])
        sampler = build_negative_table(vocabulary)
        draws = sampler.sample(np.random.default_rng(2), 1000)
        assert np.all(draws == 0)


class TestCosine:
    def test_self_similarity(self):
        v = np.array([1.0, 2.0, -3.0])
        assert cosine(v, v) == 1.0

    def test_opposite(self):
        v = np.array([1.0, 2.0, -3.0])
        assert cosine(v, -v) == -1.0

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cosine(np.zeros(3), np.ones(3))


def brute_force_neighbors(model, seed, k):
    """Exhaustive cosine scan written with plain Python arithmetic."""
    words = model.vocabulary.words
    seed_index = model.vocabulary.index(seed)
    seed_vec = [float(x) for x in model.input_vectors[seed_index]]
    seed_norm = math.sqrt(sum(x * x for x in seed_vec))
    scored = []
    for i, word in enumerate(words):
        if i == seed_index:
            continue
        vec = [float(x) for x in model.input_vectors[i]]
        norm = math.sqrt(sum(x * x for x in vec))
        sim = sum(a * b for a, b in zip(seed_vec, vec)) / (seed_norm * norm)
        scored.append((-sim, i, word))
    scored.sort()
    return [word for _, _, word in scored[:k]]


def _random_model(rng, size, dim):
    vocabulary = Vocabulary(
        words=[f"w{i}" for i in range(size)], counts=[1] * size
    )
    return EmbeddingModel(
        vocabulary=vocabulary,
        input_vectors=rng.normal(0, 1, (size, dim)),
        output_vectors=None,
    )


class TestGrowSeed:
    def test_k_zero_is_seed_only(self):
        model = _random_model(np.random.default_rng(0), 10, 4)
        result = grow_seed(model, "w3", 0)
        assert result.indicators == ("w3",)
        assert result.seed == "w3"

    def test_matches_brute_force(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            model = _random_model(rng, int(rng.integers(5, 80)), int(rng.integers(2, 12)))
            seed = model.vocabulary.words[int(rng.integers(len(model.vocabulary)))]
            result = grow_seed(model, seed, 5)
            assert list(result.indicators[1:]) == brute_force_neighbors(model, seed, 5)

    def test_ties_break_by_vocabulary_index(self):
        vocabulary = Vocabulary(words=["s", "far", "dup1", "dup2"], counts=[1] * 4)
        vectors = np.array(
            [[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [2.0, 0.0]]
        )
        model = EmbeddingModel(vocabulary, vectors, None)
        result = grow_seed(model, "s", 3)
        assert result.indicators == ("s", "dup1", "dup2", "far")

    def test_missing_seed_names_it(self):
        model = _random_model(np.random.default_rng(1), 5, 3)
        with pytest.raises(SeedNotInVocabularyError, match="zebra"):
            grow_seed(model, "zebra", 2)

    def test_feature_defaults_to_seed(self):
        model = _random_model(np.random.default_rng(2), 5, 3)
        assert grow_seed(model, "w1", 1).feature == "w1"
        assert grow_seed(model, "w1", 1, feature="onset_date").feature == "onset_date"


TOY_SENTENCES = [
    ["a", "x", "a", "x", "a", "x", "a", "x"],
    ["b", "y", "b", "y", "b", "y", "b", "y"],
    ["c", "z", "c", "z", "c", "z", "c", "z"],
    ["a", "x", "a", "x"],
]


def toy_vocabulary():
    import collections

    counter = collections.Counter(w for s in TOY_SENTENCES for w in s)
    return Vocabulary.from_counter(counter, min_count=1)


def pmi_top1(sentences, window, target):
    """Brute-force PMI ranking over symmetric co-occurrence counts."""
    import collections

    pair_counts = collections.Counter()
    word_counts = collections.Counter()
    total = 0
    for sentence in sentences:
        for i, w in enumerate(sentence):
            word_counts[w] += 1
            total += 1
            for j in range(max(0, i - window), min(len(sentence), i + window + 1)):
                if i != j:
                    pair_counts[(w, sentence[j])] += 1
    best = None
    for other in word_counts:
        if other == target:
            continue
        joint = pair_counts[(target, other)]
        if joint == 0:
            continue
        pmi = math.log(joint * total / (word_counts[target] * word_counts[other]))
        if best is None or pmi > best[0]:
            best = (pmi, other)
    return best[1]


class TestTraining:
    def test_toy_corpus_neighbors_match_pmi_oracle(self):
        params = TrainingParams(
            dimensionality=10, window=2, negative_samples=2, iterations=50,
            learning_rate=0.05, rng_seed=3,
        )
        model = train(TOY_SENTENCES, toy_vocabulary(), params, variant="sgns")
        for target in ("x", "y", "z", "a", "b", "c"):
            expected = pmi_top1(TOY_SENTENCES, window=2, target=target)
            assert grow_seed(model, target, 1).indicators[1] == expected

    def test_deterministic_across_runs(self):
        params = TrainingParams(dimensionality=8, iterations=3, rng_seed=11)
        first = train(TOY_SENTENCES, toy_vocabulary(), params, variant="sgns")
        second = train(TOY_SENTENCES, toy_vocabulary(), params, variant="sgns")
        assert np.array_equal(first.input_vectors, second.input_vectors)
        assert np.array_equal(first.output_vectors, second.output_vectors)

    @pytest.mark.parametrize("variant", ["sgns", "sghs"])
    def test_loss_improves(self, variant):
        params = TrainingParams(
            dimensionality=10, window=2, negative_samples=2, iterations=20,
            learning_rate=0.05, rng_seed=5,
        )
        model = train(TOY_SENTENCES, toy_vocabulary(), params, variant=variant)
        assert len(model.epoch_losses) == 20
        assert all(math.isfinite(loss) for loss in model.epoch_losses)
        assert model.epoch_losses[-1] < model.epoch_losses[0]

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            train(TOY_SENTENCES, Vocabulary(words=[], counts=[]), TrainingParams())

    def test_hogwild_mode_runs(self):
        params = TrainingParams(dimensionality=6, iterations=2, rng_seed=6)
        model = train(TOY_SENTENCES, toy_vocabulary(), params, workers=2)
        assert np.all(np.isfinite(model.input_vectors))

    def test_subsampling_runs(self):
        params = TrainingParams(dimensionality=6, iterations=2, subsample=0.01, rng_seed=7)
        model = train(TOY_SENTENCES, toy_vocabulary(), params)
        assert np.all(np.isfinite(model.input_vectors))


class TestModelPersistence:
    def test_save_load_round_trip(self, tmp_path):
        params = TrainingParams(dimensionality=7, iterations=2, rng_seed=9)
        model = train(TOY_SENTENCES, toy_vocabulary(), params)
        path = tmp_path / "model.txt"
        model.save(path)
        loaded = EmbeddingModel.load(path)
        assert loaded.vocabulary.words == model.vocabulary.words
        assert np.array_equal(loaded.input_vectors, model.input_vectors)
        assert grow_seed(loaded, "a", 3) == grow_seed(model, "a", 3)

    def test_header_format(self, tmp_path):
        model = _random_model(np.random.default_rng(3), 4, 2)
        path = tmp_path / "model.txt"
        model.save(path)
        assert path.read_text().splitlines()[0] == "4 2"


class TestTrainingParams:
    @pytest.mark.parametrize(
        "bad",
        [
            dict(dimensionality=0),
            dict(window=0),
            dict(iterations=0),
            dict(negative_samples=-1),
            dict(learning_rate=0.0),
        ],
    )
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            TrainingParams(**bad)

    def test_variant_presets(self):
        sgns = TrainingParams.sgns_defaults()
        assert (sgns.dimensionality, sgns.window, sgns.negative_samples, sgns.iterations) == (300, 5, 1, 2)
        sghs = TrainingParams.sghs_defaults()
        assert (sghs.dimensionality, sghs.window, sghs.iterations) == (600, 5, 5)

    def test_from_file(self, tmp_path):
        config = tmp_path / "train.cfg"
        config.write_text("dimensionality = 12\nwindow=3\nlearning_rate = 0.1\n# comment\n")
        params = TrainingParams.from_file(config)
        assert params.dimensionality == 12
        assert params.window == 3
        assert params.learning_rate == 0.1

    def test_from_file_rejects_unknown_key(self, tmp_path):
        config = tmp_path / "train.cfg"
        config.write_text("nonsense = 1\n")
        with pytest.raises(ValueError, match="nonsense"):
            TrainingParams.from_file(config)
