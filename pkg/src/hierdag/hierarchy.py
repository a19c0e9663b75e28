"""Class hierarchy DAG: construction, validation, closure and file I/O.

Edges point from child to parent ("child is-a parent"). Node ids are dense
integers assigned in input order, so argmax tie-breaking downstream is
reproducible.

Hierarchy file format (UTF-8, one record per line)::

    # comment
    !node<TAB>name          optional explicit node declaration
    child<TAB>parent        is-a edge
    !label<TAB>name         marks ``name`` as a labeled class

Nodes are the declared names followed by the edge endpoints in order of
first appearance. ``!label`` lines never introduce nodes.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Sequence

import numpy as np

from hierdag.errors import CycleDetected, DuplicateName, ParseError, SelfLoop, UnknownName


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Hierarchy:
    """Immutable validated class DAG.

    Use :func:`build` or :func:`parse_hierarchy` rather than calling the
    constructor directly.
    """

    def __init__(self, names, parents, labeled, topo_order, ancestors):
        self.names: tuple[str, ...] = tuple(names)
        self._index = {n: i for i, n in enumerate(self.names)}
        self._parents = tuple(tuple(p) for p in parents)
        children: list[list[int]] = [[] for _ in self.names]
        for child, ps in enumerate(self._parents):
            for p in ps:
                children[p].append(child)
        self._children = tuple(tuple(c) for c in children)
        self.labeled: tuple[int, ...] = tuple(sorted(labeled))
        self.topo_order: tuple[int, ...] = tuple(topo_order)
        # ancestors[d, a] is True iff (d, a) is in the transitive closure
        self.ancestors: np.ndarray = _frozen(ancestors)
        self.roots: tuple[int, ...] = tuple(i for i, p in enumerate(self._parents) if not p)
        self.leaves: tuple[int, ...] = tuple(i for i, c in enumerate(self._children) if not c)
        adj = np.zeros((len(self.names), len(self.names)), dtype=bool)
        for child, ps in enumerate(self._parents):
            adj[child, list(ps)] = True
        # parent_matrix[c, p] is True iff (c, p) is an edge
        self.parent_matrix: np.ndarray = _frozen(adj)

    def __len__(self) -> int:
        return len(self.names)

    def __repr__(self) -> str:
        return (
            f"Hierarchy(nodes={len(self)}, edges={self.num_edges}, "
            f"labeled={len(self.labeled)}, roots={len(self.roots)})"
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return (
            self.names == other.names
            and self.edges == other.edges
            and self.labeled == other.labeled
        )

    __hash__ = None

    @property
    def num_edges(self) -> int:
        return sum(len(p) for p in self._parents)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((c, p) for c, ps in enumerate(self._parents) for p in ps)

    @property
    def closure(self) -> frozenset[tuple[int, int]]:
        d, a = np.nonzero(self.ancestors)
        return frozenset(zip(d.tolist(), a.tolist()))

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownName(f"unknown node name {name!r}") from None

    def __contains__(self, name) -> bool:
        return name in self._index

    def parents(self, s: int) -> frozenset[int]:
        return frozenset(self._parents[s])

    def children(self, s: int) -> frozenset[int]:
        return frozenset(self._children[s])

    def parent_list(self, s: int) -> tuple[int, ...]:
        return self._parents[s]

    def child_list(self, s: int) -> tuple[int, ...]:
        return self._children[s]

    def is_ancestor(self, descendant: int, ancestor: int) -> bool:
        return bool(self.ancestors[descendant, ancestor])

    def ancestors_of(self, s: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.ancestors[s]).tolist())

    def depths(self) -> list[int]:
        """Longest child->parent path length from each node to a root."""
        out = [0] * len(self)
        for s in self.topo_order:
            for p in self._parents[s]:
                out[s] = max(out[s], out[p] + 1)
        return out


def _find_cycle(n: int, parents: list[list[int]], remaining: set[int]) -> list[int]:
    # every node left after Kahn's algorithm has a parent inside `remaining`,
    # so following such parents must eventually revisit a node
    start = min(remaining)
    seen: dict[int, int] = {}
    path: list[int] = []
    node = start
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = next(p for p in parents[node] if p in remaining)
    cycle = path[seen[node]:]
    return cycle + [node]


def build(
    nodes: Sequence[str],
    edges: Iterable[tuple[str, str]],
    labeled: Iterable[str] = (),
) -> Hierarchy:
    """Validate a class graph and precompute closure and topological order.

    ``edges`` are ``(child, parent)`` name pairs. Duplicate edges collapse.
    Raises DuplicateName, UnknownName, SelfLoop or CycleDetected.
    """
    names = list(nodes)
    index: dict[str, int] = {}
    for i, name in enumerate(names):
        if not isinstance(name, str) or not name:
            raise ValueError(f"node names must be non-empty strings, got {name!r}")
        if name in index:
            raise DuplicateName(f"duplicate node name {name!r}")
        index[name] = i
    n = len(names)

    def lookup(name, what):
        try:
            return index[name]
        except KeyError:
            raise UnknownName(f"{what} references unknown node {name!r}") from None

    parents: list[list[int]] = [[] for _ in range(n)]
    for child_name, parent_name in edges:
        c = lookup(child_name, "edge")
        p = lookup(parent_name, "edge")
        if c == p:
            raise SelfLoop(f"self loop on {child_name!r}")
        if p not in parents[c]:
            parents[c].append(p)
    for ps in parents:
        ps.sort()

    label_ids = {lookup(name, "label") for name in labeled}

    # Kahn's algorithm, parents before children, smallest id first
    pending = [len(ps) for ps in parents]
    kids: list[list[int]] = [[] for _ in range(n)]
    for c, ps in enumerate(parents):
        for p in ps:
            kids[p].append(c)
    ready = [i for i in range(n) if pending[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        s = heapq.heappop(ready)
        order.append(s)
        for c in kids[s]:
            pending[c] -= 1
            if pending[c] == 0:
                heapq.heappush(ready, c)
    if len(order) < n:
        remaining = set(range(n)) - set(order)
        cycle = _find_cycle(n, parents, remaining)
        raise CycleDetected([names[i] for i in cycle])

    ancestors = np.zeros((n, n), dtype=bool)
    for s in order:
        for p in parents[s]:
            ancestors[s] |= ancestors[p]
            ancestors[s, p] = True

    return Hierarchy(names, parents, label_ids, order, ancestors)


def parse_hierarchy(text: str, path=None) -> Hierarchy:
    """Parse the tab-separated hierarchy format described in the module docs."""
    declared: list[str] = []
    seen: set[str] = set()
    edge_names: list[str] = []
    edges: list[tuple[str, str]] = []
    labels: list[str] = []

    def note(name):
        if name not in seen:
            seen.add(name)
            edge_names.append(name)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(fields)}", lineno, path)
        left, right = fields
        if not left or not right:
            raise ParseError("empty field", lineno, path)
        if left.startswith("!"):
            if left == "!label":
                labels.append(right)
            elif left == "!node":
                if right in declared:
                    raise DuplicateName(f"{path or '<text>'}:{lineno}: node {right!r} declared twice")
                declared.append(right)
            else:
                raise ParseError(f"unknown directive {left!r}", lineno, path)
            continue
        edges.append((left, right))
        note(left)
        note(right)

    declared_set = set(declared)
    nodes = declared + [n for n in edge_names if n not in declared_set]
    return build(nodes, edges, labels)


def load_hierarchy(path) -> Hierarchy:
    with open(path, encoding="utf-8") as fh:
        return parse_hierarchy(fh.read(), path=str(path))


def format_hierarchy(h: Hierarchy) -> str:
    """Serialize ``h`` so that ``parse_hierarchy`` reproduces it exactly,
    node ids included."""
    lines = [f"!node\t{name}" for name in h.names]
    for c in range(len(h)):
        for p in h.parent_list(c):
            lines.append(f"{h.names[c]}\t{h.names[p]}")
    lines.extend(f"!label\t{h.names[s]}" for s in h.labeled)
    return "\n".join(lines) + "\n"


def save_hierarchy(h: Hierarchy, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_hierarchy(h))
