"""Skip-gram word embeddings trained from scratch, with the two classic
objectives: negative sampling (SGNS) and hierarchical softmax over a Huffman
tree (SGHS). Also the cosine-neighbour queries that grow a seed indicator into
an indicator set.

Vectors are float64 throughout so that models written as word2vec-style text
round-trip exactly and gradient checks against finite differences are sharp.
"""

from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .corpus import Vocabulary


class SeedNotInVocabularyError(ValueError):
    pass


@dataclass
class TrainingParams:
    """Knobs of the skip-gram trainers. ``negative_samples`` only applies to
    SGNS. The learning rate decays linearly from ``learning_rate`` down to
    ``min_learning_rate`` over all tokens x iterations."""

    dimensionality: int = 300
    window: int = 5
    negative_samples: int = 1
    iterations: int = 2
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    subsample: float = 0.0
    rng_seed: int = 1

    def __post_init__(self):
        if self.dimensionality < 1:
            raise ValueError("dimensionality must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.negative_samples < 0:
            raise ValueError("negative_samples must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.subsample < 0:
            raise ValueError("subsample must be >= 0")

    @classmethod
    def sgns_defaults(cls, **overrides) -> "TrainingParams":
        base = dict(dimensionality=300, window=5, negative_samples=1, iterations=2)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def sghs_defaults(cls, **overrides) -> "TrainingParams":
        base = dict(dimensionality=600, window=5, negative_samples=0, iterations=5)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_file(cls, path, **overrides) -> "TrainingParams":
        """Read ``key = value`` lines whose keys mirror the field names."""
        values: dict = {}
        valid = {f.name for f in fields(cls)}
        for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {line_no}: expected key = value")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in valid:
                raise ValueError(f"{path}: line {line_no}: unknown key {key!r}")
            hint = cls.__dataclass_fields__[key].type
            values[key] = float(raw) if "float" in hint else int(raw)
        values.update(overrides)
        return cls(**values)


@dataclass
class HuffmanTree:
    """Binary Huffman code built from vocabulary counts. ``codes[i]`` is the
    0/1 path of word i from the root, ``paths[i]`` the matching internal-node
    row ids (0..V-2)."""

    codes: list[np.ndarray]
    paths: list[np.ndarray]
    inner_count: int

    @classmethod
    def from_vocabulary(cls, vocabulary: Vocabulary) -> "HuffmanTree":
        size = len(vocabulary)
        if size == 0:
            raise ValueError("cannot build a Huffman tree over an empty vocabulary")
        # heap keys: (count, insertion order) so merges are deterministic
        heap: list[tuple[int, int, object]] = [
            (count, i, i) for i, count in enumerate(vocabulary.counts)
        ]
        heapq.heapify(heap)
        next_id = size
        while len(heap) > 1:
            c1, _, left = heapq.heappop(heap)
            c2, _, right = heapq.heappop(heap)
            heapq.heappush(heap, (c1 + c2, next_id, (left, right)))
            next_id += 1
        codes: list[np.ndarray] = [np.zeros(0, dtype=np.uint8)] * size
        paths: list[np.ndarray] = [np.zeros(0, dtype=np.int64)] * size
        _, _, root = heap[0]
        stack: list[tuple[object, list[int], list[int]]] = [(root, [], [])]
        inner_seen = 0
        while stack:
            node, code, path = stack.pop()
            if isinstance(node, int):
                codes[node] = np.asarray(code, dtype=np.uint8)
                paths[node] = np.asarray(path, dtype=np.int64)
                continue
            row = inner_seen
            inner_seen += 1
            left, right = node
            stack.append((left, code + [0], path + [row]))
            stack.append((right, code + [1], path + [row]))
        return cls(codes=codes, paths=paths, inner_count=inner_seen)


class NegativeSampler:
    """Draws word indices with probability proportional to count**0.75."""

    def __init__(self, vocabulary: Vocabulary, power: float = 0.75):
        if any(c <= 0 for c in vocabulary.counts):
            raise ValueError("all vocabulary counts must be positive")
        weights = np.asarray(vocabulary.counts, dtype=np.float64) ** power
        self.cumulative = np.cumsum(weights)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        draws = rng.random(size) * self.cumulative[-1]
        return np.searchsorted(self.cumulative, draws, side="right")


def build_negative_table(vocabulary: Vocabulary) -> NegativeSampler:
    return NegativeSampler(vocabulary)


@dataclass(eq=False)
class EmbeddingModel:
    """Trained embeddings. ``input_vectors`` holds one d-vector per word and is
    the only matrix consulted by neighbour queries; ``output_vectors`` are the
    context vectors (SGNS) or Huffman internal-node vectors (SGHS)."""

    vocabulary: Vocabulary
    input_vectors: np.ndarray
    output_vectors: np.ndarray | None
    variant: str = "sgns"
    huffman: HuffmanTree | None = None
    epoch_losses: list[float] = field(default_factory=list)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.vocabulary

    def vector(self, word: str) -> np.ndarray:
        key = word.lower()
        if key not in self.vocabulary:
            raise SeedNotInVocabularyError(f"word {key!r} not in vocabulary")
        return self.input_vectors[self.vocabulary.index(key)]

    def save(self, path) -> None:
        """Write word2vec text format: a "V d" header, then one line per word
        with its input vector. float64 repr round-trips exactly."""
        rows, dim = self.input_vectors.shape
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(f"{rows} {dim}\n")
            for word, vec in zip(self.vocabulary.words, self.input_vectors):
                handle.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")

    @classmethod
    def load(cls, path) -> "EmbeddingModel":
        """Read a word2vec text file. Counts and output vectors are not part of
        the format, so the result supports neighbour queries only."""
        with open(path, encoding="utf-8") as handle:
            header = handle.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: bad header, expected 'V d'")
            rows, dim = int(header[0]), int(header[1])
            words = []
            matrix = np.empty((rows, dim), dtype=np.float64)
            for i in range(rows):
                parts = handle.readline().rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    raise ValueError(f"{path}: row {i + 2} has {len(parts) - 1} values")
                words.append(parts[0])
                matrix[i] = [float(x) for x in parts[1:]]
        vocabulary = Vocabulary(words=words, counts=[1] * rows, min_count=1)
        return cls(vocabulary=vocabulary, input_vectors=matrix, output_vectors=None)


def _sigmoid(x):
    return np.piecewise(
        np.asarray(x, dtype=np.float64),
        [x >= 0],
        [lambda v: 1.0 / (1.0 + np.exp(-v)), lambda v: np.exp(v) / (1.0 + np.exp(v))],
    )


def sgns_pair_gradient(center_vec, context_vec, negative_vecs, learning_rate):
    """One negative-sampling update: an ascent step of size ``learning_rate``
    on log s(c.o) + sum_n log s(-c.n), where c is the center (input) vector,
    o the context (output) vector and n the negative output vectors.

    All arrays are updated in place and returned, followed by the pair's
    negative log-likelihood.
    """
    z_pos = float(center_vec @ context_vec)
    g_pos = float(_sigmoid(-z_pos))  # 1 - sigmoid(z_pos)
    z_neg = negative_vecs @ center_vec
    g_neg = -_sigmoid(z_neg)
    grad_center = g_pos * context_vec + negative_vecs.T @ g_neg
    grad_context = g_pos * center_vec
    grad_negative = np.outer(g_neg, center_vec)
    loss = float(np.logaddexp(0.0, -z_pos) + np.logaddexp(0.0, z_neg).sum())
    center_vec += learning_rate * grad_center
    context_vec += learning_rate * grad_context
    negative_vecs += learning_rate * grad_negative
    return center_vec, context_vec, negative_vecs, loss


def sghs_pair_gradient(center_vec, node_vecs, codes, learning_rate):
    """One hierarchical-softmax update: an ascent step on
    sum_j log s(sign_j * c.n_j) with sign_j = +1 for code bit 0 and -1 for
    code bit 1, over the Huffman path nodes of the predicted word.

    ``center_vec`` and ``node_vecs`` are updated in place and returned,
    followed by the pair's negative log-likelihood. An empty path (single-word
    vocabulary) is a no-op.
    """
    if len(codes) == 0:
        return center_vec, node_vecs, 0.0
    signs = 1.0 - 2.0 * np.asarray(codes, dtype=np.float64)
    z = node_vecs @ center_vec
    g = signs * _sigmoid(-signs * z)
    grad_center = node_vecs.T @ g
    grad_nodes = np.outer(g, center_vec)
    loss = float(np.logaddexp(0.0, -signs * z).sum())
    center_vec += learning_rate * grad_center
    node_vecs += learning_rate * grad_nodes
    return center_vec, node_vecs, loss


def sghs_emission_probability(model: EmbeddingModel, center_word: str, target_word: str) -> float:
    """Probability that the hierarchical softmax emits ``target_word`` from the
    center word's input vector; sums to 1 over the vocabulary."""
    if model.huffman is None or model.output_vectors is None:
        raise ValueError("model was not trained with the sghs variant")
    center = model.vector(center_word)
    target = model.vocabulary.index(target_word.lower())
    codes = model.huffman.codes[target]
    path = model.huffman.paths[target]
    if len(codes) == 0:
        return 1.0
    signs = 1.0 - 2.0 * codes.astype(np.float64)
    z = model.output_vectors[path] @ center
    return float(np.exp(-np.logaddexp(0.0, -signs * z).sum()))


def cosine(u, v) -> float:
    """Cosine similarity of two equal-dimension non-zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for zero vectors")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class IndicatorSet:
    """Seed word followed by its top-K cosine neighbours, for one feature."""

    feature: str
    seed: str
    indicators: tuple[str, ...]


def grow_seed(model: EmbeddingModel, seed: str, k: int, feature: str | None = None) -> IndicatorSet:
    """Expand a seed into the seed plus its K nearest vocabulary words by
    cosine over the input vectors (exact scan, descending similarity, ties by
    ascending vocabulary index)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    key = seed.lower()
    if key not in model.vocabulary:
        raise SeedNotInVocabularyError(f"seed {seed!r} is not in the vocabulary")
    name = feature if feature is not None else key
    seed_index = model.vocabulary.index(key)
    if k == 0:
        return IndicatorSet(feature=name, seed=key, indicators=(key,))
    matrix = model.input_vectors
    seed_vec = matrix[seed_index]
    seed_norm = np.linalg.norm(seed_vec)
    if seed_norm == 0.0:
        raise ValueError(f"seed {seed!r} has a zero vector")
    norms = np.linalg.norm(matrix, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = (matrix @ seed_vec) / (norms * seed_norm)
    sims = np.where(norms == 0.0, -np.inf, sims)
    sims[seed_index] = -np.inf
    order = np.lexsort((np.arange(len(sims)), -sims))
    top = [model.vocabulary.words[i] for i in order[:k]]
    return IndicatorSet(feature=name, seed=key, indicators=(key, *top))


def _encode_sentences(sentences, vocabulary: Vocabulary) -> list[list[int]]:
    encoded = []
    for sentence in sentences:
        row = [vocabulary.index(w) for w in (word.lower() for word in sentence)
               if w in vocabulary]
        if row:
            encoded.append(row)
    return encoded


def _keep_probabilities(vocabulary: Vocabulary, subsample: float) -> np.ndarray | None:
    if subsample <= 0:
        return None
    counts = np.asarray(vocabulary.counts, dtype=np.float64)
    threshold = subsample * counts.sum()
    keep = (np.sqrt(counts / threshold) + 1.0) * threshold / counts
    return np.minimum(keep, 1.0)


class _Trainer:
    def __init__(self, vocabulary, params, variant):
        self.vocabulary = vocabulary
        self.params = params
        self.variant = variant
        rng = np.random.default_rng(params.rng_seed)
        size, dim = len(vocabulary), params.dimensionality
        self.input_vectors = (rng.random((size, dim)) - 0.5) / dim
        if variant == "sgns":
            self.output_vectors = np.zeros((size, dim), dtype=np.float64)
            self.sampler = build_negative_table(vocabulary)
            self.huffman = None
        else:
            self.huffman = HuffmanTree.from_vocabulary(vocabulary)
            self.output_vectors = np.zeros((self.huffman.inner_count, dim), dtype=np.float64)
            self.sampler = None
        self.keep = _keep_probabilities(vocabulary, params.subsample)
        self.rng = rng

    def _alpha(self, processed: int, total: int) -> float:
        p = self.params
        return max(p.min_learning_rate, p.learning_rate * (1.0 - processed / total))

    def _train_pair(self, center: int, context: int, alpha: float) -> float:
        if self.variant == "sgns":
            k = self.params.negative_samples
            if k > 0 and len(self.vocabulary) > 1:
                negatives = self.sampler.sample(self.rng, k)
                while True:
                    clash = negatives == context
                    if not clash.any():
                        break
                    negatives[clash] = self.sampler.sample(self.rng, int(clash.sum()))
            else:
                negatives = np.zeros(0, dtype=np.int64)
            negative_rows = self.output_vectors[negatives]
            *_, loss = sgns_pair_gradient(
                self.input_vectors[center], self.output_vectors[context],
                negative_rows, alpha,
            )
            self.output_vectors[negatives] = negative_rows
            return loss
        path = self.huffman.paths[context]
        node_rows = self.output_vectors[path]
        *_, loss = sghs_pair_gradient(
            self.input_vectors[center], node_rows, self.huffman.codes[context], alpha,
        )
        self.output_vectors[path] = node_rows
        return loss

    def run(self, encoded: list[list[int]]) -> list[float]:
        params = self.params
        total = max(1, sum(len(s) for s in encoded) * params.iterations)
        processed = 0
        epoch_losses = []
        for _ in range(params.iterations):
            loss_sum, pair_count = 0.0, 0
            for sentence in encoded:
                if self.keep is not None:
                    sentence = [w for w in sentence
                                if self.rng.random() < self.keep[w]]
                n = len(sentence)
                for pos in range(n):
                    reach = int(self.rng.integers(1, params.window + 1))
                    lo = max(0, pos - reach)
                    hi = min(n, pos + reach + 1)
                    alpha = self._alpha(processed, total)
                    for other in range(lo, hi):
                        if other == pos:
                            continue
                        loss_sum += self._train_pair(sentence[pos], sentence[other], alpha)
                        pair_count += 1
                    processed += 1
            epoch_losses.append(loss_sum / max(1, pair_count))
        return epoch_losses


def train(
    sentences,
    vocabulary: Vocabulary,
    params: TrainingParams | None = None,
    variant: str = "sgns",
    workers: int = 1,
) -> EmbeddingModel:
    """Train skip-gram embeddings over lemma sentences.

    With ``workers=1`` training is deterministic: a fixed ``rng_seed``
    reproduces bit-identical vectors. ``workers > 1`` runs lock-free over
    shared matrices (hogwild); races are tolerated and reproducibility is not
    guaranteed, and per-epoch losses are not recorded.
    """
    if variant not in ("sgns", "sghs"):
        raise ValueError(f"unknown variant {variant!r} (want 'sgns' or 'sghs')")
    if len(vocabulary) == 0:
        raise ValueError("vocabulary is empty")
    if params is None:
        params = (TrainingParams.sgns_defaults() if variant == "sgns"
                  else TrainingParams.sghs_defaults())
    trainer = _Trainer(vocabulary, params, variant)
    encoded = _encode_sentences(sentences, vocabulary)
    if workers <= 1:
        epoch_losses = trainer.run(encoded)
    else:
        epoch_losses = []
        chunks = [encoded[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = []
            for worker_id, chunk in enumerate(chunks):
                shadow = _Trainer.__new__(_Trainer)
                shadow.__dict__.update(trainer.__dict__)
                shadow.rng = np.random.default_rng(params.rng_seed + 1 + worker_id)
                futures.append(pool.submit(shadow.run, chunk))
            for future in futures:
                future.result()
    return EmbeddingModel(
        vocabulary=vocabulary,
        input_vectors=trainer.input_vectors,
        output_vectors=trainer.output_vectors,
        variant=variant,
        huffman=trainer.huffman,
        epoch_losses=epoch_losses,
    )
