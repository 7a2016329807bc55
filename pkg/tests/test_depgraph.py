import itertools
import random

import pytest

from linelister.corpus import Token
from linelister.depgraph import (
    DependencyGraphError,
    build_graph,
    dependency_distance,
    neighbors,
    predecessors,
)

from helpers import bfs_distance, closure_ancestors, random_tree_tokens


def _find(sentence, surface):
    return next(t.index for t in sentence.tokens if t.surface == surface)


class TestGoldenParse:
    """Distances on the shipped sample bulletin's second and third sentences."""

    def test_onset_sentence_distances(self, sample_bulletin):
        sentence = sample_bulletin.sentences[1]
        graph = build_graph(sentence.tokens)
        symptoms = _find(sentence, "symptoms")
        admitted = _find(sentence, "admitted")
        june4 = _find(sentence, "4-June")
        june12 = _find(sentence, "12-June")
        assert dependency_distance(graph, symptoms, june4) == 3
        assert dependency_distance(graph, symptoms, june12) == 4
        assert dependency_distance(graph, admitted, june12) == 2
        assert dependency_distance(graph, admitted, june4) == 3

    def test_negation_sentence_adjacency(self, sample_bulletin):
        sentence = sample_bulletin.sentences[2]
        graph = build_graph(sentence.tokens)
        comorbidities = _find(sentence, "comorbidities")
        animals = _find(sentence, "animals")
        contact = _find(sentence, "contact")
        no_tokens = {t.index for t in sentence.tokens if t.surface == "no"}
        assert neighbors(graph, comorbidities) & no_tokens
        assert contact in predecessors(graph, animals)
        assert not (neighbors(graph, animals) & no_tokens)
        assert neighbors(graph, contact) & no_tokens


class TestBuildGraph:
    def test_single_token(self):
        graph = build_graph([Token(1, "word", "word", 0, "root")])
        assert graph.nodes == (1,)
        assert neighbors(graph, 1) == frozenset()

    def test_two_roots_rejected(self):
        tokens = [Token(1, "a", "a", 0, "root"), Token(2, "b", "b", 0, "root")]
        with pytest.raises(DependencyGraphError, match="root"):
            build_graph(tokens)

    def test_cycle_rejected(self):
        tokens = [
            Token(1, "a", "a", 0, "root"),
            Token(2, "b", "b", 3),
            Token(3, "c", "c", 2),
        ]
        with pytest.raises(DependencyGraphError, match="cycl"):
            build_graph(tokens)

    def test_edge_count(self):
        rng = random.Random(5)
        tokens = random_tree_tokens(rng, 9)
        graph = build_graph(tokens)
        assert sum(len(c) for c in graph.children.values()) == len(tokens) - 1


class TestQueries:
    def test_distance_zero_iff_same(self):
        rng = random.Random(11)
        tokens = random_tree_tokens(rng, 7)
        graph = build_graph(tokens)
        for t in tokens:
            assert dependency_distance(graph, t.index, t.index) == 0

    def test_unknown_token_rejected(self):
        graph = build_graph([Token(1, "a", "a", 0, "root")])
        with pytest.raises(DependencyGraphError, match="not in graph"):
            dependency_distance(graph, 1, 5)
        with pytest.raises(DependencyGraphError, match="not in graph"):
            neighbors(graph, 5)
        with pytest.raises(DependencyGraphError, match="not in graph"):
            predecessors(graph, 5)

    def test_leaf_neighbors_is_its_head(self):
        tokens = [
            Token(1, "root", "root", 0, "root"),
            Token(2, "mid", "mid", 1),
            Token(3, "leaf", "leaf", 2),
        ]
        graph = build_graph(tokens)
        assert neighbors(graph, 3) == frozenset({2})

    def test_root_has_no_predecessors(self):
        rng = random.Random(3)
        tokens = random_tree_tokens(rng, 8)
        graph = build_graph(tokens)
        assert predecessors(graph, graph.root) == frozenset()

    def test_distance_matches_bfs_oracle(self):
        rng = random.Random(17)
        for _ in range(60):
            tokens = random_tree_tokens(rng, rng.randint(2, 12))
            graph = build_graph(tokens)
            for a, b in itertools.combinations([t.index for t in tokens], 2):
                assert dependency_distance(graph, a, b) == bfs_distance(tokens, a, b)

    def test_distance_symmetric_and_triangle(self):
        rng = random.Random(23)
        tokens = random_tree_tokens(rng, 10)
        graph = build_graph(tokens)
        ids = [t.index for t in tokens]
        for a, b in itertools.combinations(ids, 2):
            assert dependency_distance(graph, a, b) == dependency_distance(graph, b, a)
        for a, b, c in itertools.permutations(ids[:6], 3):
            assert dependency_distance(graph, a, c) <= (
                dependency_distance(graph, a, b) + dependency_distance(graph, b, c)
            )

    def test_neighbors_symmetric(self):
        rng = random.Random(29)
        tokens = random_tree_tokens(rng, 11)
        graph = build_graph(tokens)
        for a in graph.nodes:
            for b in neighbors(graph, a):
                assert a in neighbors(graph, b)

    def test_predecessors_match_transitive_closure(self):
        rng = random.Random(31)
        for _ in range(40):
            tokens = random_tree_tokens(rng, rng.randint(1, 8))
            graph = build_graph(tokens)
            for t in tokens:
                assert predecessors(graph, t.index) == closure_ancestors(tokens, t.index)
