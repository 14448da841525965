"""
Tiling Module
Colours commit regions of space-time tilings so same-colour regions can be
decoded concurrently, and derives their boundary kinds and buffers
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .decoding_graph import BoundaryKind
from .errors import ColoringError

logger = logging.getLogger(__name__)

COLOR_LABELS = ("A", "B", "C", "D")
GLOBAL_FACE = "global"


@dataclass(frozen=True, eq=False)
class Region:
    """Commit region: its vertices and the midpoints of the edges assigned to it"""
    region_id: str
    color: str
    points: np.ndarray
    edge_midpoints: np.ndarray

    def all_points(self) -> np.ndarray:
        if len(self.edge_midpoints) == 0:
            return self.points
        if len(self.points) == 0:
            return self.edge_midpoints
        return np.vstack([self.points, self.edge_midpoints])

    def bounding_box(self) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        pts = self.all_points()
        return tuple(pts.min(axis=0).tolist()), tuple(pts.max(axis=0).tolist())


@dataclass(frozen=True, eq=False)
class RegionPartition:
    regions: List[Region]
    R: float = 1.0

    @property
    def colors(self) -> List[str]:
        return sorted({region.color for region in self.regions})

    def region(self, region_id: str) -> Region:
        for region in self.regions:
            if region.region_id == region_id:
                return region
        raise ColoringError(f"unknown region {region_id}")


@dataclass(frozen=True)
class RegionBoundaries:
    region_id: str
    color: str
    faces: Dict[str, BoundaryKind] = field(default_factory=dict)
    buffer_regions: Tuple[str, ...] = ()

    @property
    def rough_faces(self) -> int:
        return sum(1 for kind in self.faces.values() if kind == BoundaryKind.ROUGH)


def _min_distance(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) == 0 or len(b) == 0:
        return math.inf
    diff = a[:, None, :] - b[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).min())


def color_1d_time(layout) -> RegionPartition:
    """Two-colouring of the commit regions of a parallel window layout

    Vertices are rounds; a round r carries a space-like edge at r and a
    time-like edge at r + 0.5 up to the last round.
    """
    if not layout:
        return RegionPartition([], R=1.0)
    last = max(win.end for win in layout)
    regions = []
    for win in layout:
        rounds = np.arange(win.commit_start, win.commit_end, dtype=float)
        time_like = rounds[rounds + 1 < last] + 0.5
        mids = np.sort(np.concatenate([rounds, time_like]))
        regions.append(Region(
            region_id=win.window_id,
            color=win.layer.value,
            points=rounds.reshape(-1, 1),
            edge_midpoints=mids.reshape(-1, 1),
        ))
    return RegionPartition(regions, R=1.0)


def _hex_cell(x: np.ndarray, y: np.ndarray, size: float) -> Tuple[np.ndarray, np.ndarray]:
    """Pointy-top axial coordinates of the hexagon containing each point"""
    q = (math.sqrt(3) / 3 * x - y / 3) / size
    r = (2 / 3 * y) / size
    s = -q - r
    rq, rr, rs = np.round(q), np.round(r), np.round(s)
    dq, dr, ds = np.abs(rq - q), np.abs(rr - r), np.abs(rs - s)
    fix_q = (dq > dr) & (dq > ds)
    fix_r = ~fix_q & (dr > ds)
    rq = np.where(fix_q, -rr - rs, rq)
    rr = np.where(fix_r, -rq - rs, rr)
    return rq.astype(int), rr.astype(int)


def color_hex_2d(extent: Tuple[int, int], cell_size: float) -> RegionPartition:
    """Three-coloured hexagonal tiling of a unit-spaced square lattice

    Lattice edges join nearest neighbours, so R = 1 and cells need a side
    longer than 1. Colour (q - r) mod 3 differs between any two touching
    hexagons.
    """
    width, height = extent
    R = 1.0
    if width < 1 or height < 1:
        raise ColoringError("extent must be at least 1x1")
    if cell_size <= R:
        raise ColoringError(f"cell_size {cell_size} must exceed the interaction radius {R}")

    xs, ys = np.meshgrid(np.arange(width, dtype=float), np.arange(height, dtype=float), indexing="ij")
    points = np.column_stack([xs.ravel(), ys.ravel()])
    horizontal = points[points[:, 0] + 1 < width] + np.array([0.5, 0.0])
    vertical = points[points[:, 1] + 1 < height] + np.array([0.0, 0.5])
    mids = np.vstack([horizontal, vertical])

    pq, pr = _hex_cell(points[:, 0], points[:, 1], cell_size)
    mq, mr = _hex_cell(mids[:, 0], mids[:, 1], cell_size)
    cells = sorted(set(zip(pq.tolist(), pr.tolist())) | set(zip(mq.tolist(), mr.tolist())))

    regions = []
    for q, r in cells:
        regions.append(Region(
            region_id=f"H{q},{r}",
            color=COLOR_LABELS[(q - r) % 3],
            points=points[(pq == q) & (pr == r)],
            edge_midpoints=mids[(mq == q) & (mr == r)],
        ))
    logger.debug("hex tiling %sx%s size %.2f: %d cells", width, height, cell_size, len(regions))
    return RegionPartition(regions, R=R)


def extrude(partition: RegionPartition, rounds: int) -> RegionPartition:
    """Lift a spatial partition to space-time prisms over ``rounds`` rounds"""
    if rounds < 1:
        raise ColoringError("rounds must be >= 1")
    regions = []
    for region in partition.regions:
        t = np.arange(rounds, dtype=float)
        pts = np.column_stack([region.points.repeat(rounds, axis=0), np.tile(t, len(region.points))])
        space_mids = np.column_stack([
            region.edge_midpoints.repeat(rounds, axis=0), np.tile(t, len(region.edge_midpoints)),
        ])
        time_mids = np.column_stack([
            region.points.repeat(rounds - 1, axis=0), np.tile(t[:-1] + 0.5, len(region.points)),
        ])
        regions.append(Region(
            region_id=region.region_id,
            color=region.color,
            points=pts,
            edge_midpoints=np.vstack([space_mids, time_mids]),
        ))
    return RegionPartition(regions, R=partition.R)


def coloring_violations(partition: RegionPartition) -> List[Tuple[str, str, float]]:
    """Pairs of same-colour regions closer than R"""
    violations = []
    regions = partition.regions
    for i, a in enumerate(regions):
        pa = a.all_points()
        for b in regions[i + 1:]:
            if a.color != b.color:
                continue
            dist = _min_distance(pa, b.all_points())
            if dist < partition.R:
                violations.append((a.region_id, b.region_id, dist))
    return violations


def validate_coloring(partition: RegionPartition) -> bool:
    return not coloring_violations(partition)


def _neighbours(partition: RegionPartition) -> Dict[str, List[str]]:
    neighbours: Dict[str, List[str]] = {region.region_id: [] for region in partition.regions}
    regions = partition.regions
    for i, a in enumerate(regions):
        pa = a.all_points()
        for b in regions[i + 1:]:
            if _min_distance(pa, b.all_points()) <= partition.R:
                neighbours[a.region_id].append(b.region_id)
                neighbours[b.region_id].append(a.region_id)
    return neighbours


def _check_order(partition: RegionPartition, decode_order: Sequence[str]) -> Dict[str, int]:
    if len(set(decode_order)) != len(decode_order):
        raise ColoringError(f"decode order {list(decode_order)} repeats a colour")
    missing = set(partition.colors) - set(decode_order)
    if missing:
        raise ColoringError(f"decode order misses colours {sorted(missing)}")
    return {color: pos for pos, color in enumerate(decode_order)}


def assign_boundaries(partition: RegionPartition, decode_order: Sequence[str],
                      global_face: BoundaryKind = BoundaryKind.SMOOTH) -> Dict[str, RegionBoundaries]:
    """Boundary kind of every face of every region

    A face toward a region decoded earlier is smooth; a face toward one
    decoded later is rough and that region is part of the buffer. Faces on
    the edge of the tiling follow ``global_face``.
    """
    rank = _check_order(partition, decode_order)
    neighbours = _neighbours(partition)
    colors = {region.region_id: region.color for region in partition.regions}
    result = {}
    for region in partition.regions:
        faces: Dict[str, BoundaryKind] = {GLOBAL_FACE: global_face}
        buffers = []
        for other in sorted(neighbours[region.region_id]):
            if colors[other] == region.color:
                raise ColoringError(f"{region.region_id} and {other} share colour {region.color} and touch")
            if rank[colors[other]] < rank[region.color]:
                faces[other] = BoundaryKind.SMOOTH
            else:
                faces[other] = BoundaryKind.ROUGH
                buffers.append(other)
        result[region.region_id] = RegionBoundaries(region.region_id, region.color, faces, tuple(buffers))
    return result


def buffer_edges(partition: RegionPartition, region_id: str, w: float,
                 decode_order: Sequence[str]) -> np.ndarray:
    """Edge midpoints within distance w of a region, skipping earlier or same-colour regions"""
    rank = _check_order(partition, decode_order)
    target = partition.region(region_id)
    own = target.all_points()
    picked = []
    for other in partition.regions:
        if other.region_id == region_id or rank[other.color] <= rank[target.color]:
            continue
        mids = other.edge_midpoints
        if len(mids) == 0 or len(own) == 0:
            continue
        diff = mids[:, None, :] - own[None, :, :]
        near = np.sqrt((diff ** 2).sum(axis=-1)).min(axis=1) <= w
        if near.any():
            picked.append(mids[near])
    if not picked:
        return np.empty((0, own.shape[1] if own.ndim == 2 else 1))
    return np.vstack(picked)


def partition_manifest(partition: RegionPartition, order: Optional[Sequence[str]] = None) -> str:
    lines = [f"# regions={len(partition.regions)} colors={','.join(partition.colors)} R={partition.R:g}"]
    boundaries = assign_boundaries(partition, order) if order else {}
    for region in partition.regions:
        lo, hi = region.bounding_box()
        line = (
            f"{region.region_id} {region.color} vertices={len(region.points)} "
            f"edges={len(region.edge_midpoints)} box={list(lo)}..{list(hi)}"
        )
        if region.region_id in boundaries:
            line += f" rough={boundaries[region.region_id].rough_faces}"
        lines.append(line)
    return "\n".join(lines) + "\n"
