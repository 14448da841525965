"""
Inner Decoders Module
Decoders for the defect set of a single window: a union-find decoder for
production runs and an exhaustive minimum-weight pairing oracle for tests
"""
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from .decoding_graph import DecodingGraph, WindowShape, WindowView
from .errors import IntegrityError, SizeLimitError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DefectSet:
    """Global detector ids flagged in one window (real or artificial)"""
    vertex_ids: FrozenSet[int]
    window: Any = None

    @classmethod
    def of(cls, vertex_ids: Iterable[int], window: Any = None) -> "DefectSet":
        return cls(frozenset(int(v) for v in vertex_ids), window)

    def __len__(self) -> int:
        return len(self.vertex_ids)


@dataclass(frozen=True)
class Correction:
    """Set of global fault ids plus the logical parity they flip"""
    edges: FrozenSet[int] = frozenset()
    logical_flip: int = 0

    @classmethod
    def from_faults(cls, graph: DecodingGraph, faults: Iterable[int]) -> "Correction":
        edges = frozenset(int(f) for f in faults)
        flip = graph.logical_parity(sorted(edges)) if edges else 0
        return cls(edges, flip)

    def combine(self, other: "Correction") -> "Correction":
        """XOR of two corrections"""
        return Correction(self.edges ^ other.edges, self.logical_flip ^ other.logical_flip)

    def fault_array(self) -> np.ndarray:
        return np.array(sorted(self.edges), dtype=np.int64)

    def __len__(self) -> int:
        return len(self.edges)


class Growth(str, Enum):
    HALF = "half"
    FULL = "full"


def _defect_ids(defects) -> List[int]:
    if isinstance(defects, DefectSet):
        return sorted(defects.vertex_ids)
    return sorted(int(v) for v in defects)


class UnionFindDecoder:
    """Cluster-growth union-find decoder with peeling

    All odd clusters not touching the boundary grow together by half-edges
    (or full edges). Clusters are merged with weighted union and path
    compression; the grown subgraph is then peeled along a spanning forest
    rooted at the boundary vertex first, then at the smallest vertex id.
    """

    name = "uf"

    def __init__(self, growth: Growth = Growth.HALF):
        self.growth = Growth(growth)

    def __repr__(self) -> str:
        return f"UnionFindDecoder(growth={self.growth.value!r})"

    def decode(self, view: WindowView, defects) -> Correction:
        local = view.to_local(_defect_ids(defects))
        if not local:
            return Correction()
        grown = self._grow(view.shape, local)
        local_edges = self._peel(view.shape, local, grown)
        return Correction.from_faults(view.graph, view.global_faults(local_edges))

    def _grow(self, shape: WindowShape, defects: List[int]) -> List[int]:
        B = shape.boundary
        n = B + 1
        parent = list(range(n))
        size = [1] * n
        parity = [0] * n
        boundary = [False] * n
        boundary[B] = True
        for v in defects:
            parity[v] = 1
        border: Dict[int, List[int]] = {v: [v] for v in defects}
        support = [0] * shape.num_edges
        step = 1 if self.growth == Growth.HALF else 2
        adjacency = shape.adjacency
        endpoints = shape.edge_endpoints
        grown: List[int] = []

        def find(v: int) -> int:
            root = v
            while parent[root] != root:
                root = parent[root]
            while parent[v] != root:
                parent[v], v = root, parent[v]
            return root

        def union(a: int, b: int) -> int:
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
            parity[a] ^= parity[b]
            boundary[a] = boundary[a] or boundary[b]
            border[a] = border.pop(a, [a]) + border.pop(b, [b])
            return a

        active = sorted(defects)
        while active:
            fusion: List[int] = []
            progressed = False
            for root in active:
                remaining = []
                for v in border.get(root, [root]):
                    open_edges = False
                    for e, _ in adjacency[v]:
                        if support[e] >= 2:
                            continue
                        progressed = True
                        support[e] = min(2, support[e] + step)
                        if support[e] == 2:
                            fusion.append(e)
                        else:
                            open_edges = True
                    if open_edges:
                        remaining.append(v)
                border[root] = remaining

            for e in fusion:
                grown.append(e)
                u, v = endpoints[e]
                ru, rv = find(u), find(v)
                if ru != rv:
                    union(ru, rv)

            roots = {find(v) for v in defects}
            active = sorted(r for r in roots if parity[r] and not boundary[r])
            if not progressed and active:
                raise IntegrityError("union-find growth stalled with odd clusters left")
        return grown

    def _peel(self, shape: WindowShape, defects: List[int], grown: List[int]) -> List[int]:
        B = shape.boundary
        tree: Dict[int, List[Tuple[int, int]]] = {}
        for e in sorted(set(grown)):
            u, v = shape.edge_endpoints[e]
            tree.setdefault(u, []).append((e, v))
            tree.setdefault(v, []).append((e, u))

        visited = set()
        order: List[Tuple[int, int, int]] = []
        roots = ([B] if B in tree else []) + sorted(v for v in tree if v != B)
        for root in roots:
            if root in visited:
                continue
            visited.add(root)
            queue = deque([root])
            while queue:
                v = queue.popleft()
                for e, u in tree[v]:
                    if u not in visited:
                        visited.add(u)
                        order.append((u, e, v))
                        queue.append(u)

        marked = [False] * (B + 1)
        for v in defects:
            marked[v] = True
        correction = []
        for v, e, up in reversed(order):
            if marked[v]:
                correction.append(e)
                marked[v] = False
                marked[up] = not marked[up]
        leftover = [v for v in range(B) if marked[v]]
        if leftover:
            raise IntegrityError(f"peeling left unmatched defects {leftover[:5]}")
        return correction


class ExactPairingOracle:
    """Exhaustive minimum-weight pairing over at most ``max_defects`` defects

    Defects are paired with each other along shortest paths that avoid the
    boundary vertex, or with the boundary through the window's rough faces
    and the code's spatial boundaries. The best pairing is found with a
    bitmask recursion over the defect set.
    """

    name = "oracle"
    MAX_DEFECTS = 14

    def __init__(self, max_defects: int = MAX_DEFECTS):
        self.max_defects = max_defects

    def __repr__(self) -> str:
        return f"ExactPairingOracle(max_defects={self.max_defects})"

    def decode(self, view: WindowView, defects) -> Correction:
        local = view.to_local(_defect_ids(defects))
        if len(local) > self.max_defects:
            raise SizeLimitError(
                f"{len(local)} defects exceed the oracle bound of {self.max_defects}"
            )
        if not local:
            return Correction()

        shape = view.shape
        g = shape.to_networkx()
        bulk = g.subgraph(range(shape.boundary))
        B = shape.boundary
        k = len(local)

        pair_paths: Dict[Tuple[int, int], List[int]] = {}
        boundary_paths: Dict[int, Optional[List[int]]] = {}
        for i, v in enumerate(local):
            paths = nx.single_source_shortest_path(bulk, v)
            for j in range(i + 1, k):
                path = paths.get(local[j])
                if path is not None:
                    pair_paths[(i, j)] = path
            try:
                boundary_paths[i] = nx.shortest_path(g, v, B)
            except nx.NetworkXNoPath:
                boundary_paths[i] = None

        inf = float("inf")

        @lru_cache(maxsize=None)
        def best(mask: int) -> Tuple[float, Tuple[Tuple[int, int], ...]]:
            if mask == 0:
                return 0.0, ()
            i = (mask & -mask).bit_length() - 1
            rest = mask & ~(1 << i)
            options = []
            if boundary_paths[i] is not None:
                cost, plan = best(rest)
                options.append((cost + len(boundary_paths[i]) - 1, ((i, -1),) + plan))
            for j in range(i + 1, k):
                if rest & (1 << j) and (i, j) in pair_paths:
                    cost, plan = best(rest & ~(1 << j))
                    options.append((cost + len(pair_paths[(i, j)]) - 1, ((i, j),) + plan))
            if not options:
                return inf, ()
            return min(options, key=lambda option: option[0])

        cost, plan = best((1 << k) - 1)
        if cost == inf:
            raise IntegrityError("defects cannot be paired within this window")

        chosen = set()
        for i, j in plan:
            path = boundary_paths[i] if j < 0 else pair_paths[(i, j)]
            for a, b in zip(path, path[1:]):
                chosen ^= {min(g[a][b])}
        return Correction.from_faults(view.graph, view.global_faults(sorted(chosen)))


def build_inner_decoder(name: str, growth: Growth = Growth.HALF):
    if name == "uf":
        return UnionFindDecoder(growth)
    if name == "oracle":
        return ExactPairingOracle()
    raise ValueError(f"unknown inner decoder {name!r}")


def uf_decode(view: WindowView, defects) -> Correction:
    return UnionFindDecoder().decode(view, defects)


def exact_pairing_oracle(view: WindowView, defects) -> Correction:
    return ExactPairingOracle().decode(view, defects)


def correction_weight(c: Correction, graph: DecodingGraph, unit_weights: bool = False) -> float:
    """Total edge weight of a correction (hop count when unit_weights)"""
    if not c.edges:
        return 0.0
    if unit_weights:
        return float(len(c.edges))
    return len(c.edges) * graph.weight
