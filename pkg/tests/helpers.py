"""Shared test utilities: chain-parsed bulletins for extraction tests and
independent graph oracles (BFS distance, transitive-closure ancestors) used to
cross-check the package's tree-walk implementations."""

import collections
import datetime

from linelister.corpus import Bulletin, Sentence, Token, detect_date_phrases


def chain_sentence(text, publication_date=None):
    """Sentence with a flat chain parse: token 1 is the root, token i is headed
    by token i-1."""
    words = text.split()
    tokens = tuple(
        Token(index=i + 1, surface=w, lemma=w.lower(), head=i,
              deprel="root" if i == 0 else "dep")
        for i, w in enumerate(words)
    )
    return Sentence(
        tokens=tokens,
        date_phrases=tuple(detect_date_phrases(tokens, publication_date)),
        text=text,
    )


def chain_bulletin(texts, bulletin_id="b1", publication_date=None):
    return Bulletin(
        id=bulletin_id,
        publication_date=publication_date,
        sentences=tuple(chain_sentence(t, publication_date) for t in texts),
    )


def random_tree_tokens(rng, n):
    """Random labelled tree on n tokens: node order is shuffled and each
    non-first node attaches to a random earlier node."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    head = {order[0]: 0}
    for pos in range(1, n):
        head[order[pos]] = order[rng.randrange(pos)]
    return [
        Token(index=i, surface=f"w{i}", lemma=f"w{i}", head=head[i],
              deprel="root" if head[i] == 0 else "dep")
        for i in range(1, n + 1)
    ]


def adjacency(tokens):
    adj = collections.defaultdict(set)
    for t in tokens:
        if t.head != 0:
            adj[t.index].add(t.head)
            adj[t.head].add(t.index)
        else:
            adj.setdefault(t.index, set())
    return adj


def bfs_distance(tokens, source, target):
    """Breadth-first shortest path length over the undirected tree edges."""
    adj = adjacency(tokens)
    seen = {source: 0}
    queue = collections.deque([source])
    while queue:
        node = queue.popleft()
        if node == target:
            return seen[node]
        for nxt in adj[node]:
            if nxt not in seen:
                seen[nxt] = seen[node] + 1
                queue.append(nxt)
    raise AssertionError(f"no path from {source} to {target}")


def closure_ancestors(tokens, node):
    """Nodes that reach ``node`` via directed head->dependent edges, computed
    by iterating the edge relation to a fixed point."""
    edges = {(t.head, t.index) for t in tokens if t.head != 0}
    reach = set(edges)
    changed = True
    while changed:
        changed = False
        for a, b in list(reach):
            for c, d in edges:
                if b == c and (a, d) not in reach:
                    reach.add((a, d))
                    changed = True
    return {a for a, b in reach if b == node}
