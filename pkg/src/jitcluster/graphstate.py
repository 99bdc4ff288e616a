"""Graph-state transformations under local complementation and Pauli measurements.

Graphs are tracked up to local Clifford corrections, which are not
represented.  Measurement rules:

* ``Z``: delete the vertex.
* ``Y``: local complementation at the vertex, then delete it.
* ``X``: pick a neighbour ``b0`` (lowest id by default), complement at
  ``b0``, apply the ``Y`` rule, complement at ``b0`` again.  On a chain this
  removes two qubits from the path and leaves ``b0`` as a pendant "cherry".

Vertical edges between two chains are built by X-measuring one qubit per
chain and attempting the entangling gate on the two cherries.  A failure
Z-measures the cherries; a success Y-measures them, leaving one edge between
the chains.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from jitcluster.errors import CapacityError
from jitcluster.gates import EntanglingProcedure, require_2d_construction

ROLES = ("chain", "cherry", "intermediate")
LC_VERTEX_LIMIT = 12


@dataclass(frozen=True)
class VertexLabel:
    chain: int | None = None
    position: int | None = None
    role: str = "chain"

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")


class GraphState:
    """Simple undirected graph on integer vertex ids, with optional labels.

    Treated as a value: every operation in this module returns a new graph.
    """

    def __init__(
        self,
        vertices: Iterable[int] = (),
        edges: Iterable[tuple[int, int]] = (),
        labels: dict[int, VertexLabel] | None = None,
    ) -> None:
        self._adj: dict[int, set[int]] = {int(v): set() for v in vertices}
        self._labels: dict[int, VertexLabel] = {}
        for u, v in edges:
            for w in (u, v):
                self._adj.setdefault(int(w), set())
            self._add_edge(int(u), int(v))
        for v, label in (labels or {}).items():
            if v not in self._adj:
                raise ValueError(f"label for unknown vertex {v}")
            self._labels[v] = label

    def _add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        self._adj[u].add(v)
        self._adj[v].add(u)

    @classmethod
    def path(cls, n: int, start: int = 1, chain: int | None = None) -> GraphState:
        ids = list(range(start, start + n))
        labels = {v: VertexLabel(chain, k) for k, v in enumerate(ids)} if chain is not None else None
        return cls(ids, zip(ids, ids[1:]), labels)

    def copy(self) -> GraphState:
        g = GraphState()
        g._adj = {v: set(ns) for v, ns in self._adj.items()}
        g._labels = dict(self._labels)
        return g

    def __contains__(self, v: object) -> bool:
        return v in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphState):
            return NotImplemented
        return self._adj == other._adj

    def __repr__(self) -> str:
        return f"GraphState(vertices={self.vertices}, edges={self.edges})"

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self._adj))

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted((u, v) for u, ns in self._adj.items() for v in ns if u < v))

    def edge_set(self) -> set[frozenset[int]]:
        return {frozenset(e) for e in self.edges}

    def neighbors(self, v: int) -> frozenset[int]:
        self._require(v)
        return frozenset(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def has_edge(self, u: int, v: int) -> bool:
        return u in self._adj and v in self._adj[u]

    def label(self, v: int) -> VertexLabel | None:
        self._require(v)
        return self._labels.get(v)

    def _require(self, v: int) -> None:
        if v not in self._adj:
            raise KeyError(f"unknown vertex {v}")

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self._adj)
        g.add_edges_from(self.edges)
        return g

    def to_dot(self, name: str = "G") -> str:
        lines = [f"graph {name} {{"]
        for v in self.vertices:
            label = self._labels.get(v)
            if label is None or label.chain is None:
                lines.append(f"  {v};")
            else:
                lines.append(f'  {v} [chain={label.chain}, role="{label.role}"];')
        lines.extend(f"  {u} -- {v};" for u, v in self.edges)
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        rows = []
        for v in self.vertices:
            row: dict = {"id": v, "neighbors": sorted(self._adj[v])}
            label = self._labels.get(v)
            if label is not None:
                row.update(chain=label.chain, position=label.position, role=label.role)
            rows.append(row)
        return json.dumps({"vertices": rows}, sort_keys=True, indent=1) + "\n"


def _checked(g: GraphState, v: int) -> GraphState:
    if v not in g:
        raise KeyError(f"unknown vertex {v}")
    return g.copy()


def local_complement(g: GraphState, v: int) -> GraphState:
    """Toggle every edge between two neighbours of ``v``."""
    h = _checked(g, v)
    ns = sorted(h._adj[v])
    for i, a in enumerate(ns):
        for b in ns[i + 1 :]:
            if b in h._adj[a]:
                h._adj[a].discard(b)
                h._adj[b].discard(a)
            else:
                h._add_edge(a, b)
    return h


def delete_vertex(g: GraphState, v: int) -> GraphState:
    h = _checked(g, v)
    for u in h._adj.pop(v):
        h._adj[u].discard(v)
    h._labels.pop(v, None)
    return h


def x_measurement_neighbor(g: GraphState, v: int) -> int | None:
    """Default ``b0`` for an X measurement: the lowest-id neighbour, or None if isolated."""
    ns = g.neighbors(v)
    return min(ns) if ns else None


def measure(g: GraphState, v: int, basis: str, b0: int | None = None) -> GraphState:
    """Pauli measurement of ``v``; the result is correct up to local Cliffords.

    ``b0`` selects the special neighbour of an X measurement; any neighbour
    is physically valid, the default is the lowest id.
    """
    basis = basis.upper()
    if v not in g:
        raise KeyError(f"unknown vertex {v}")
    if basis == "Z":
        return delete_vertex(g, v)
    if basis == "Y":
        return delete_vertex(local_complement(g, v), v)
    if basis != "X":
        raise ValueError(f"basis must be X, Y or Z, got {basis!r}")
    if b0 is None:
        b0 = x_measurement_neighbor(g, v)
        if b0 is None:
            return delete_vertex(g, v)
    elif b0 not in g.neighbors(v):
        raise ValueError(f"b0={b0} is not a neighbour of {v}")
    h = local_complement(g, b0)
    h = delete_vertex(local_complement(h, v), v)
    return local_complement(h, b0)


def entangle_edge(g: GraphState, u: int, v: int) -> GraphState:
    """Successful controlled-phase gate between two unconnected vertices."""
    if u == v:
        raise ValueError("cannot entangle a vertex with itself")
    h = _checked(_checked(g, u), v)
    if h.has_edge(u, v):
        raise ValueError(f"edge {u}-{v} already present")
    h._add_edge(u, v)
    return h


def chain_vertices(g: GraphState, chain: int) -> list[int]:
    """Surviving vertices of a labelled chain, in chain order."""
    members = [
        (lab.position, v)
        for v, lab in g._labels.items()
        if lab.chain == chain and lab.role == "chain"
    ]
    return [v for _, v in sorted(members)]


def is_path(g: GraphState, order: Sequence[int]) -> bool:
    """True if consecutive vertices of ``order`` are all adjacent."""
    return all(g.has_edge(a, b) for a, b in zip(order, order[1:]))


def _cherry(g: GraphState, chain: Sequence[int], pos: int) -> tuple[int, int]:
    if not 1 <= pos <= len(chain) - 2:
        raise ValueError(f"position {pos} is not interior to a chain of length {len(chain)}")
    v = chain[pos]
    along = {chain[pos - 1], chain[pos + 1]}
    if g.neighbors(v) != along:
        raise ValueError(f"vertex {v} must have exactly its two chain neighbours")
    b0 = x_measurement_neighbor(g, v)
    if not g.neighbors(b0) <= set(chain):
        raise ValueError(f"cherry candidate {b0} already carries an off-chain edge")
    return v, b0


def vertical_edge_procedure(
    g: GraphState,
    chain_a: Sequence[int],
    pos_a: int,
    chain_b: Sequence[int],
    pos_b: int,
    outcome: str | bool,
    proc: EntanglingProcedure,
    cleanup: str = "Y",
) -> GraphState:
    """One attempt at a vertical edge between two chains.

    ``pos_a`` and ``pos_b`` index interior vertices of ``chain_a`` and
    ``chain_b``.  Both chains lose two qubits either way.  On success they
    end up joined by a single edge (with ``cleanup="Y"``).

    Raises:
        ConstructionUnsupportedError: the gate has ``c2 > 1``.
        ValueError: a position is at a chain end or already carries a
            vertical edge.
    """
    require_2d_construction(proc)
    success = outcome if isinstance(outcome, bool) else _parse_outcome(outcome)
    if set(chain_a) & set(chain_b):
        raise ValueError("chains must be disjoint")
    v_a, cherry_a = _cherry(g, chain_a, pos_a)
    v_b, cherry_b = _cherry(g, chain_b, pos_b)
    h = measure(g, v_a, "X", cherry_a)
    h = measure(h, v_b, "X", cherry_b)
    for c in (cherry_a, cherry_b):
        lab = h._labels.get(c)
        h._labels[c] = replace(lab, role="cherry") if lab else VertexLabel(role="cherry")
    if not success:
        return measure(measure(h, cherry_a, "Z"), cherry_b, "Z")
    h = entangle_edge(h, cherry_a, cherry_b)
    for c in (cherry_a, cherry_b):
        h._labels[c] = replace(h._labels[c], role="intermediate")
    return measure(measure(h, cherry_a, cleanup), cherry_b, cleanup)


def _parse_outcome(outcome: str) -> bool:
    key = outcome.strip().lower()
    if key not in ("success", "failure"):
        raise ValueError(f"outcome must be 'success' or 'failure', got {outcome!r}")
    return key == "success"


def vertical_edges(g: GraphState) -> list[tuple[int, int]]:
    """Edges whose endpoints carry different chain labels."""
    out = []
    for u, v in g.edges:
        lu, lv = g._labels.get(u), g._labels.get(v)
        if lu and lv and lu.chain is not None and lv.chain is not None and lu.chain != lv.chain:
            out.append((u, v))
    return out


def vertical_degree(g: GraphState) -> dict[int, int]:
    count: dict[int, int] = defaultdict(int)
    for u, v in vertical_edges(g):
        count[u] += 1
        count[v] += 1
    return {v: count[v] for v in g.vertices}


def labelled_chains(chains: int, length: int) -> GraphState:
    """``chains`` disjoint labelled paths; vertex ids increase along each chain."""
    g = GraphState()
    for i in range(chains):
        ids = [i * length + k + 1 for k in range(length)]
        for k, v in enumerate(ids):
            g._adj[v] = set()
            g._labels[v] = VertexLabel(i, k)
        for a, b in zip(ids, ids[1:]):
            g._add_edge(a, b)
    return g


@dataclass(frozen=True)
class HoneycombResult:
    graph: GraphState
    targets: int
    placed: int
    attempts: int

    @property
    def complete(self) -> bool:
        return self.placed == self.targets


def build_honeycomb(
    chains: int,
    chain_length: int,
    p: float,
    proc: EntanglingProcedure,
    max_attempts: int,
    rng: np.random.Generator,
) -> HoneycombResult:
    """Stitch ``chains`` parallel chains into a brick-wall (honeycomb) cluster.

    Targets are laid out in ``chain_length // 3`` columns.  Column ``k``
    joins chain pairs ``(i, i + 1)`` with ``i`` of the same parity as ``k``,
    so each interior chain alternates between its upper and lower neighbour.
    Each target is retried up to ``max_attempts`` times; a target is dropped
    when attempts run out or a chain has too few qubits left, and the
    result then reports ``complete = False``.
    """
    if chains < 2:
        raise ValueError(f"need at least two chains, got {chains}")
    if chain_length < 3:
        raise ValueError(f"chains need at least 3 qubits, got {chain_length}")
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be positive, got {max_attempts}")
    require_2d_construction(proc)
    g = labelled_chains(chains, chain_length)
    cursor = [0] * chains  # first index not yet carrying a vertical edge
    targets = placed = attempts = 0
    for column in range(chain_length // 3):
        for i in range(column % 2, chains - 1, 2):
            targets += 1
            for _ in range(max_attempts):
                lists = (chain_vertices(g, i), chain_vertices(g, i + 1))
                if any(cursor[c] + 2 >= len(lst) for c, lst in zip((i, i + 1), lists)):
                    break
                attempts += 1
                success = bool(rng.random() < p)
                g = vertical_edge_procedure(
                    g, lists[0], cursor[i] + 1, lists[1], cursor[i + 1] + 1, success, proc
                )
                if success:
                    cursor[i] += 1
                    cursor[i + 1] += 1
                    placed += 1
                    break
    return HoneycombResult(g, targets, placed, attempts)


def _invariant(g: nx.Graph) -> tuple:
    return (
        g.number_of_edges(),
        tuple(sorted(d for _, d in g.degree())),
        nx.weisfeiler_lehman_graph_hash(g, iterations=3),
    )


def _nx_local_complement(g: nx.Graph, v: int) -> nx.Graph:
    h = g.copy()
    ns = sorted(g[v])
    for i, a in enumerate(ns):
        for b in ns[i + 1 :]:
            if h.has_edge(a, b):
                h.remove_edge(a, b)
            else:
                h.add_edge(a, b)
    return h


def lc_equivalent(g1: GraphState, g2: GraphState, limit: int = LC_VERTEX_LIMIT) -> bool:
    """Whether ``g2`` is isomorphic to some graph in the LC orbit of ``g1``.

    Breadth-first search over the orbit, keeping one representative per
    isomorphism class; relabelling commutes with local complementation, so
    this visits every class in the orbit.

    Raises:
        CapacityError: either graph has more than ``limit`` vertices.
    """
    for g in (g1, g2):
        if len(g) > limit:
            raise CapacityError(f"LC-orbit search limited to {limit} vertices, got {len(g)}")
    if len(g1) != len(g2) or len(g1) == 0:
        return len(g1) == len(g2)
    target = g2.to_networkx()
    target_key = _invariant(target)
    start = g1.to_networkx()
    seen: dict[tuple, list[nx.Graph]] = {_invariant(start): [start]}
    frontier = [start]
    while frontier:
        nxt = []
        for g in frontier:
            if _invariant(g) == target_key and nx.is_isomorphic(g, target):
                return True
            for v in g.nodes:
                h = _nx_local_complement(g, v)
                bucket = seen.setdefault(_invariant(h), [])
                if not any(nx.is_isomorphic(h, k) for k in bucket):
                    bucket.append(h)
                    nxt.append(h)
        frontier = nxt
    return False


def x_measure_target(length: int, pos: int) -> GraphState:
    """Path of ``length - 2`` vertices with a pendant where an X measurement leaves it.

    ``pos`` is the 0-based interior position measured on a path with
    increasing ids, so the cherry hangs off the vertex that followed ``pos``.
    """
    remaining = length - 2
    path = GraphState.path(remaining, start=0)
    attach = pos - 1  # index of the old pos + 1 vertex in the shortened chain
    return GraphState(list(path.vertices) + [remaining], list(path.edges) + [(attach, remaining)])
