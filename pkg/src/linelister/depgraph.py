"""Per-sentence dependency graphs and the path queries used by the extractors:
shortest undirected distance, adjacency, and directed-path ancestors."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Token


class DependencyGraphError(ValueError):
    pass


@dataclass(frozen=True)
class DepGraph:
    """Dependency tree of one sentence: nodes are 1-based token indices,
    directed edges run head -> dependent."""

    root: int
    head: dict[int, int]              # node -> governing node (root maps to 0)
    children: dict[int, tuple[int, ...]]
    depth: dict[int, int]             # root has depth 0

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(self.head)

    def __contains__(self, node: int) -> bool:
        return node in self.head


def build_graph(tokens) -> DepGraph:
    """Build the dependency tree for a sentence; one edge per non-root token,
    from its head to it. Multiple roots or cyclic head chains are rejected."""
    toks: tuple[Token, ...] = tuple(tokens)
    if not toks:
        raise DependencyGraphError("cannot build a graph from an empty sentence")
    head = {}
    children: dict[int, list[int]] = {t.index: [] for t in toks}
    roots = []
    for t in toks:
        if t.index in head:
            raise DependencyGraphError(f"duplicate token index {t.index}")
        head[t.index] = t.head
        if t.head == 0:
            roots.append(t.index)
        elif t.head not in children:
            raise DependencyGraphError(
                f"token {t.index} has head {t.head} outside the sentence"
            )
        else:
            children[t.head].append(t.index)
    if len(roots) != 1:
        raise DependencyGraphError(f"expected exactly one root, found {len(roots)}")
    depth: dict[int, int] = {}
    for node in head:
        chain = []
        cursor = node
        while cursor != 0 and cursor not in depth:
            chain.append(cursor)
            cursor = head[cursor]
            if len(chain) > len(toks):
                raise DependencyGraphError("cyclic head chain")
        base = 0 if cursor == 0 else depth[cursor] + 1
        for offset, member in enumerate(reversed(chain)):
            depth[member] = base + offset
    return DepGraph(
        root=roots[0],
        head=head,
        children={k: tuple(v) for k, v in children.items()},
        depth=depth,
    )


def _require(graph: DepGraph, node: int) -> None:
    if node not in graph.head:
        raise DependencyGraphError(f"token {node} not in graph")


def dependency_distance(graph: DepGraph, source: int, target: int) -> int:
    """Number of edges on the shortest undirected path between two tokens.

    On a tree this is depth(source) + depth(target) - 2 * depth(lowest common
    ancestor); 0 iff source == target.
    """
    _require(graph, source)
    _require(graph, target)
    if source == target:
        return 0
    ancestors = {}
    cursor = source
    while cursor != 0:
        ancestors[cursor] = graph.depth[cursor]
        cursor = graph.head[cursor]
    cursor = target
    while cursor not in ancestors:
        cursor = graph.head[cursor]
    lca_depth = graph.depth[cursor]
    return (graph.depth[source] - lca_depth) + (graph.depth[target] - lca_depth)


def neighbors(graph: DepGraph, node: int) -> frozenset[int]:
    """Tokens adjacent to ``node`` ignoring edge direction (its head plus its
    dependents)."""
    _require(graph, node)
    adjacent = set(graph.children[node])
    if graph.head[node] != 0:
        adjacent.add(graph.head[node])
    return frozenset(adjacent)


def predecessors(graph: DepGraph, node: int) -> frozenset[int]:
    """Tokens with a directed head->dependent path down to ``node``; on a tree,
    exactly its ancestors."""
    _require(graph, node)
    found = set()
    cursor = graph.head[node]
    while cursor != 0:
        found.add(cursor)
        cursor = graph.head[cursor]
    return frozenset(found)
