"""
Decoding Graph Module
Builds matching graphs for repetition and rotated planar codes under
phenomenological noise, samples faults and extracts defects
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from .errors import ContractViolation, IntegrityError, ParameterError

logger = logging.getLogger(__name__)


class CodeFamily(str, Enum):
    REPETITION = "repetition"
    ROTATED_PLANAR = "rotated_planar"


class BoundaryKind(str, Enum):
    """Time face of a window: rough faces may absorb defects, smooth ones may not"""
    ROUGH = "rough"
    SMOOTH = "smooth"


class CodeParams(BaseModel):
    """Code family, distance, number of rounds and physical error rate"""
    model_config = ConfigDict(frozen=True)

    family: CodeFamily = CodeFamily.ROTATED_PLANAR
    distance: int
    rounds: int
    physical_error_rate: float = 0.0

    @field_validator("distance")
    @classmethod
    def _check_distance(cls, value: int) -> int:
        if value < 3 or value % 2 == 0:
            raise ValueError("distance must be an odd integer >= 3")
        return value

    @field_validator("rounds")
    @classmethod
    def _check_rounds(cls, value: int) -> int:
        if value < 1:
            raise ValueError("rounds must be >= 1")
        return value

    @field_validator("physical_error_rate")
    @classmethod
    def _check_rate(cls, value: float) -> float:
        if not 0.0 <= value < 0.5:
            raise ValueError("physical_error_rate must lie in [0, 0.5)")
        return value

    @property
    def d(self) -> int:
        return self.distance

    @property
    def p(self) -> float:
        return self.physical_error_rate

    @property
    def edge_weight(self) -> float:
        """Uniform matching weight log((1-p)/p); infinite when p == 0"""
        if self.physical_error_rate == 0.0:
            return math.inf
        return math.log((1 - self.physical_error_rate) / self.physical_error_rate)


@dataclass(frozen=True)
class DetectorVertex:
    id: int
    space_coord: Tuple[int, ...]
    round: int


@dataclass(frozen=True)
class Edge:
    fault_id: int
    a: int
    b: int
    weight: float
    midpoint: Tuple[Tuple[float, ...], float]
    logical: bool


@dataclass(frozen=True, eq=False)
class ErrorConfiguration:
    """Sorted array of triggered fault ids plus the seed that produced it"""
    triggered_faults: np.ndarray
    seed: Optional[int] = None

    def as_set(self) -> FrozenSet[int]:
        return frozenset(int(f) for f in self.triggered_faults)

    def symmetric_difference(self, other: "ErrorConfiguration") -> "ErrorConfiguration":
        return ErrorConfiguration(np.setxor1d(self.triggered_faults, other.triggered_faults))

    @classmethod
    def from_faults(cls, faults: Iterable[int], seed: Optional[int] = None) -> "ErrorConfiguration":
        return cls(np.unique(np.asarray(list(faults), dtype=np.int64)), seed)


@dataclass(frozen=True, eq=False)
class SyndromeStream:
    """Per-round defect bits (rounds x stabilizers) plus the true logical frame"""
    graph: "DecodingGraph"
    defects: np.ndarray
    logical_frame: int
    boundary_parity: int = 0

    @property
    def rounds(self) -> int:
        return self.defects.shape[0]

    @property
    def flat(self) -> np.ndarray:
        return self.defects.reshape(-1)

    def defect_ids(self) -> np.ndarray:
        return np.flatnonzero(self.flat)

    def xor(self, other: "SyndromeStream") -> "SyndromeStream":
        return SyndromeStream(
            graph=self.graph,
            defects=self.defects ^ other.defects,
            logical_frame=self.logical_frame ^ other.logical_frame,
            boundary_parity=self.boundary_parity ^ other.boundary_parity,
        )


def _repetition_layout(d: int):
    stabilizer_coords = [(2 * s + 1,) for s in range(d - 1)]
    qubit_coords = [(2 * i,) for i in range(d)]
    qubit_stabilizers = []
    for i in range(d):
        touching = [s for s in (i - 1, i) if 0 <= s <= d - 2]
        qubit_stabilizers.append(touching + [-1] * (2 - len(touching)))
    logical = [i == 0 for i in range(d)]
    return stabilizer_coords, qubit_coords, qubit_stabilizers, logical


def _rotated_planar_layout(d: int):
    # Z plaquette at corner (i, j) covers data qubits (i..i+1, j..j+1); top and
    # bottom rows carry the weight-2 Z plaquettes, so columns 0 and d-1 are the
    # rough sides for X errors and column 0 carries the logical observable.
    plaquettes: Dict[Tuple[int, int], int] = {}
    for i in range(-1, d):
        for j in range(-1, d):
            if (i + j) % 2 != 0:
                continue
            bulk = 0 <= i <= d - 2 and 0 <= j <= d - 2
            top_or_bottom = i in (-1, d - 1) and 0 <= j <= d - 2
            if bulk or top_or_bottom:
                plaquettes[(i, j)] = len(plaquettes)

    stabilizer_coords = [(2 * i + 1, 2 * j + 1) for (i, j) in plaquettes]
    qubit_coords = []
    qubit_stabilizers = []
    logical = []
    for a in range(d):
        for b in range(d):
            touching = [
                plaquettes[corner]
                for corner in ((a - 1, b - 1), (a - 1, b), (a, b - 1), (a, b))
                if corner in plaquettes
            ]
            if not 1 <= len(touching) <= 2:
                raise IntegrityError(f"qubit {(a, b)} touches {len(touching)} Z plaquettes")
            qubit_coords.append((2 * a, 2 * b))
            qubit_stabilizers.append(touching + [-1] * (2 - len(touching)))
            logical.append(b == 0)
    return stabilizer_coords, qubit_coords, qubit_stabilizers, logical


class WindowShape:
    """Local structure of a window of ``length`` rounds

    Window structure only depends on the length and on which time faces are
    open (rough and not on the global edge), so one shape serves every window
    of the same kind; fault and vertex ids are offsets from the window start.
    """

    def __init__(self, graph: "DecodingGraph", length: int, bottom_open: bool, top_open: bool):
        ns = graph.n_stabilizers
        nq = graph.n_qubits
        F = graph.faults_per_round
        qs = graph.qubit_stabilizers
        self.length = length
        self.num_detectors = length * ns
        self.boundary = self.num_detectors
        B = self.boundary

        faults, us, vs = [], [], []
        s = np.arange(ns)
        if bottom_open:
            # time-like faults between round start-1 and start; the outer end is absorbed
            faults.append(-F + nq + s)
            us.append(s)
            vs.append(np.full(ns, B))

        t = np.repeat(np.arange(length), nq)
        q = np.tile(np.arange(nq), length)
        faults.append(t * F + q)
        us.append(t * ns + qs[q, 0])
        vs.append(np.where(qs[q, 1] >= 0, t * ns + qs[q, 1], B))

        if length > 1:
            t = np.repeat(np.arange(length - 1), ns)
            s_t = np.tile(s, length - 1)
            faults.append(t * F + nq + s_t)
            us.append(t * ns + s_t)
            vs.append((t + 1) * ns + s_t)

        if top_open:
            faults.append((length - 1) * F + nq + s)
            us.append((length - 1) * ns + s)
            vs.append(np.full(ns, B))

        rel_fault = np.concatenate(faults)
        order = np.argsort(rel_fault, kind="stable")
        self.rel_fault = rel_fault[order]
        self.edge_u = np.concatenate(us)[order]
        self.edge_v = np.concatenate(vs)[order]
        self.num_edges = len(self.rel_fault)

        adjacency: List[List[Tuple[int, int]]] = [[] for _ in range(B + 1)]
        for e, (u, v) in enumerate(zip(self.edge_u.tolist(), self.edge_v.tolist())):
            adjacency[u].append((e, v))
            adjacency[v].append((e, u))
        self.adjacency = adjacency
        self.edge_endpoints = list(zip(self.edge_u.tolist(), self.edge_v.tolist()))
        self._nx_graph: Optional[nx.MultiGraph] = None

    def to_networkx(self) -> nx.MultiGraph:
        """Local multigraph, edges keyed by local edge index"""
        if self._nx_graph is None:
            g = nx.MultiGraph()
            g.add_nodes_from(range(self.boundary + 1))
            for e, (u, v) in enumerate(self.edge_endpoints):
                g.add_edge(u, v, key=e)
            self._nx_graph = g
        return self._nx_graph


class WindowView:
    """A round interval of a DecodingGraph with time faces set rough or smooth"""

    def __init__(self, graph: "DecodingGraph", shape: WindowShape, start: int, end: int,
                 bottom: BoundaryKind, top: BoundaryKind):
        self.graph = graph
        self.shape = shape
        self.start = start
        self.end = end
        self.bottom = bottom
        self.top = top
        self.vertex_offset = start * graph.n_stabilizers
        self.fault_offset = start * graph.faults_per_round

    @property
    def boundary(self) -> int:
        return self.shape.boundary

    @property
    def num_vertices(self) -> int:
        return self.shape.num_detectors

    def to_local(self, vertex_ids: Iterable[int]) -> List[int]:
        ids = [int(v) for v in vertex_ids]
        lo = self.vertex_offset
        hi = lo + self.shape.num_detectors
        outside = [v for v in ids if not lo <= v < hi]
        if outside:
            raise ContractViolation(
                f"defects {outside[:5]} lie outside rounds [{self.start}, {self.end})"
            )
        return sorted(v - lo for v in ids)

    def global_faults(self, local_edges: Iterable[int]) -> np.ndarray:
        local = np.fromiter(local_edges, dtype=np.int64)
        return np.sort(self.shape.rel_fault[local] + self.fault_offset)


class DecodingGraph:
    """Matching graph over all rounds of one code patch (X-error problem)

    Vertex ``r * n_stabilizers + s`` is the defect of stabilizer ``s`` at
    round ``r``; the boundary vertex follows the last detector. Fault
    ``r * F + q`` is a data error on qubit ``q`` in round ``r`` and fault
    ``r * F + n_qubits + s`` a measurement error between rounds ``r`` and
    ``r + 1`` (``F = n_qubits + n_stabilizers``).
    """

    def __init__(self, params: CodeParams, stabilizer_coords, qubit_coords,
                 qubit_stabilizers, logical_qubits):
        self.params = params
        self.rounds = params.rounds
        self.stabilizer_coords = np.asarray(stabilizer_coords, dtype=np.int64)
        self.qubit_coords = np.asarray(qubit_coords, dtype=np.int64)
        self.qubit_stabilizers = np.asarray(qubit_stabilizers, dtype=np.int64)
        self.logical_qubits = np.asarray(logical_qubits, dtype=bool)
        self.n_stabilizers = len(self.stabilizer_coords)
        self.n_qubits = len(self.qubit_coords)
        self.faults_per_round = self.n_qubits + self.n_stabilizers
        self.num_detectors = self.rounds * self.n_stabilizers
        self.boundary_vertex = self.num_detectors
        self.weight = params.edge_weight
        self._shapes: Dict[Tuple[int, bool, bool], WindowShape] = {}
        self._build_edges()

    def _build_edges(self):
        R, ns, nq, F = self.rounds, self.n_stabilizers, self.n_qubits, self.faults_per_round
        qs = self.qubit_stabilizers
        self.num_edges = (R - 1) * F + nq

        edge_a = np.empty(self.num_edges, dtype=np.int64)
        edge_b = np.empty(self.num_edges, dtype=np.int64)
        round_lo = np.empty(self.num_edges, dtype=np.int64)
        round_hi = np.empty(self.num_edges, dtype=np.int64)
        logical = np.zeros(self.num_edges, dtype=bool)

        r = np.repeat(np.arange(R), nq)
        q = np.tile(np.arange(nq), R)
        ids = r * F + q
        edge_a[ids] = r * ns + qs[q, 0]
        edge_b[ids] = np.where(qs[q, 1] >= 0, r * ns + qs[q, 1], self.boundary_vertex)
        round_lo[ids] = r
        round_hi[ids] = r
        logical[ids] = self.logical_qubits[q]

        if R > 1:
            r = np.repeat(np.arange(R - 1), ns)
            s = np.tile(np.arange(ns), R - 1)
            ids = r * F + nq + s
            edge_a[ids] = r * ns + s
            edge_b[ids] = (r + 1) * ns + s
            round_lo[ids] = r
            round_hi[ids] = r + 1

        self.edge_a = edge_a
        self.edge_b = edge_b
        self.edge_round_lo = round_lo
        self.edge_round_hi = round_hi
        self.logical_mask = logical

    @property
    def family(self) -> CodeFamily:
        return self.params.family

    @property
    def distance(self) -> int:
        return self.params.distance

    @property
    def syndrome_bits_per_round(self) -> int:
        """Stabilizer measurements per round, both bases (d^2-1 for rotated planar)"""
        if self.family == CodeFamily.ROTATED_PLANAR:
            return 2 * self.n_stabilizers
        return self.n_stabilizers

    @cached_property
    def vertices(self) -> List[DetectorVertex]:
        ns = self.n_stabilizers
        return [
            DetectorVertex(id=r * ns + s, space_coord=tuple(int(c) for c in self.stabilizer_coords[s]), round=r)
            for r in range(self.rounds)
            for s in range(ns)
        ]

    @cached_property
    def logical_edges(self) -> FrozenSet[int]:
        return frozenset(int(f) for f in np.flatnonzero(self.logical_mask))

    @property
    def num_space_edges(self) -> int:
        return self.rounds * self.n_qubits

    @property
    def num_time_edges(self) -> int:
        return (self.rounds - 1) * self.n_stabilizers

    def vertex_round(self, vertex: int) -> int:
        return vertex // self.n_stabilizers

    def detector_id(self, round_index: int, stabilizer: int) -> int:
        return round_index * self.n_stabilizers + stabilizer

    def edge(self, fault_id: int) -> Edge:
        self.check_faults([fault_id])
        a, b = int(self.edge_a[fault_id]), int(self.edge_b[fault_id])
        lo, hi = int(self.edge_round_lo[fault_id]), int(self.edge_round_hi[fault_id])
        s = a % self.n_stabilizers
        if lo == hi and b != self.boundary_vertex:
            q = fault_id % self.faults_per_round
            space = tuple(float(c) for c in self.qubit_coords[q])
        else:
            space = tuple(float(c) for c in self.stabilizer_coords[s])
        return Edge(
            fault_id=fault_id, a=a, b=b, weight=self.weight,
            midpoint=(space, (lo + hi) / 2), logical=bool(self.logical_mask[fault_id]),
        )

    def iter_edges(self) -> Iterator[Edge]:
        for fault_id in range(self.num_edges):
            yield self.edge(fault_id)

    def check_faults(self, fault_ids) -> np.ndarray:
        faults = np.asarray(fault_ids, dtype=np.int64).reshape(-1)
        if faults.size and (faults.min() < 0 or faults.max() >= self.num_edges):
            bad = faults[(faults < 0) | (faults >= self.num_edges)]
            raise IntegrityError(f"unknown fault ids {bad[:5].tolist()}")
        return faults

    def syndrome_of(self, fault_ids) -> Tuple[np.ndarray, int]:
        """Flat defect vector and boundary parity flipped by a set of faults"""
        faults = self.check_faults(fault_ids)
        endpoints = np.concatenate([self.edge_a[faults], self.edge_b[faults]])
        counts = np.bincount(endpoints, minlength=self.num_detectors + 1) & 1
        return counts[: self.num_detectors].astype(np.uint8), int(counts[self.num_detectors])

    def logical_parity(self, fault_ids) -> int:
        faults = self.check_faults(fault_ids)
        return int(np.count_nonzero(self.logical_mask[faults]) & 1)

    def window_view(self, start: int, end: int, bottom: BoundaryKind = BoundaryKind.SMOOTH,
                    top: BoundaryKind = BoundaryKind.SMOOTH) -> WindowView:
        if not 0 <= start < end <= self.rounds:
            raise ContractViolation(f"window [{start}, {end}) outside [0, {self.rounds})")
        bottom_open = bottom == BoundaryKind.ROUGH and start > 0
        top_open = top == BoundaryKind.ROUGH and end < self.rounds
        key = (end - start, bottom_open, top_open)
        shape = self._shapes.get(key)
        if shape is None:
            shape = WindowShape(self, end - start, bottom_open, top_open)
            self._shapes[key] = shape
            logger.debug("built window shape %s for %s d=%d", key, self.family.value, self.distance)
        return WindowView(self, shape, start, end, bottom, top)

    def export_lines(self) -> Iterator[str]:
        p = self.params
        yield f"# family={p.family.value} d={p.distance} rounds={p.rounds} p={p.physical_error_rate}"
        yield f"B {self.boundary_vertex}"
        for v in self.vertices:
            coord = ",".join(str(c) for c in v.space_coord)
            yield f"V {v.id} {v.round} {coord}"
        for fault_id in range(self.num_edges):
            a, b = int(self.edge_a[fault_id]), int(self.edge_b[fault_id])
            mid = (self.edge_round_lo[fault_id] + self.edge_round_hi[fault_id]) / 2
            yield f"E {a} {b} {mid:g} {self.weight:.6f} {fault_id}"


def build_graph(params: CodeParams) -> DecodingGraph:
    """Build the X-error matching graph for ``params``"""
    if params.family == CodeFamily.REPETITION:
        layout = _repetition_layout(params.distance)
    else:
        layout = _rotated_planar_layout(params.distance)
    graph = DecodingGraph(params, *layout)
    logger.debug(
        "built %s graph d=%d rounds=%d: %d detectors, %d faults",
        params.family.value, params.distance, params.rounds, graph.num_detectors, graph.num_edges,
    )
    return graph


def shot_seed(seed: int, index: int) -> int:
    """Seed of shot ``index``; independent of how shots are spread over workers"""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def sample_error(graph: DecodingGraph, p: float, seed: int) -> ErrorConfiguration:
    """Trigger each fault independently with probability p"""
    if not 0.0 <= p < 0.5:
        raise ParameterError(f"error rate {p} outside [0, 0.5)")
    rng = np.random.default_rng(seed)
    draws = rng.random(graph.num_edges)
    return ErrorConfiguration(np.flatnonzero(draws < p).astype(np.int64), seed)


def extract_syndrome(graph: DecodingGraph, err: ErrorConfiguration) -> SyndromeStream:
    defects, boundary_parity = graph.syndrome_of(err.triggered_faults)
    return SyndromeStream(
        graph=graph,
        defects=defects.reshape(graph.rounds, graph.n_stabilizers),
        logical_frame=graph.logical_parity(err.triggered_faults),
        boundary_parity=boundary_parity,
    )


def export_graph(graph: DecodingGraph) -> str:
    return "\n".join(graph.export_lines()) + "\n"
