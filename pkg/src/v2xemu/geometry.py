"""Link-condition classification with range culling.

Per step, every in-range ego<->vehicle link gets one of three labels:

* ``LOS``   nothing on the straight segment between the antennas,
* ``NLOSb`` some building wall crosses the segment (checked first, wins),
* ``NLOSv`` no wall, but a third vehicle sits in the corridor around the
  segment (lateral distance below a threshold, projection strictly
  between the endpoints).

Candidate sets are culled by two radii before any segment test runs:
buildings within ``r_b`` of the ego (nearest polygon vertex), vehicles
within ``r_v`` (center distance, strict). Both radii may be infinite,
which reproduces the exhaustive reference behavior. Culling and
classification are separate phases so the pipeline can time them
independently.

Determinism: buildings are kept sorted by id and walls in edge order, so
the reported NLOSb blocker is the first hit in that fixed order; vehicles
are processed sorted by id and the NLOSv blocker is likewise the first
qualifying id. Results never depend on input ordering or worker count.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .scenario import Building, Position, VehicleState, _segments_touch

DEFAULT_CELL_SIZE = 50.0
DEFAULT_NLOSV_THRESHOLD = 1.0

# Below this separation the link geometry is meaningless; treat as LOS.
_DEGENERATE_DIST = 1e-12


class LinkCondition(enum.Enum):
    LOS = "LOS"
    NLOSB = "NLOSb"
    NLOSV = "NLOSv"


@dataclass(frozen=True)
class CullingRanges:
    """Candidate radii in meters; ``inf`` disables culling on that axis."""

    r_b: float = math.inf
    r_v: float = math.inf

    def __post_init__(self):
        if self.r_b < 0 or self.r_v < 0:
            raise ValueError("culling ranges must be >= 0")


def orthogonal_distance(a: Position, b: Position, p: Position) -> float:
    """Distance from point p to the infinite line through a and b.

    Uses the cross-product form |(b-a) x (p-a)| / |b-a|, which stays exact
    for vertical segments where a slope-based formula degenerates.
    """
    dx, dy = b.x - a.x, b.y - a.y
    norm = math.hypot(dx, dy)
    if norm < _DEGENERATE_DIST:
        raise ValueError("line endpoints coincide")
    return abs(dx * (p.y - a.y) - dy * (p.x - a.x)) / norm


def is_between(ego: Position, target: Position, third: Position, threshold: float) -> bool:
    """True when ``third`` blocks the ego->target corridor: lateral offset
    strictly below ``threshold`` and projection strictly interior."""
    dx, dy = target.x - ego.x, target.y - ego.y
    l2 = dx * dx + dy * dy
    if l2 < _DEGENERATE_DIST * _DEGENERATE_DIST:
        return False
    t = ((third.x - ego.x) * dx + (third.y - ego.y) * dy) / l2
    if not (0.0 < t < 1.0):
        return False
    d_orth = abs(dx * (third.y - ego.y) - dy * (third.x - ego.x)) / math.sqrt(l2)
    return d_orth < threshold


def segment_intersects_building(a: Position, b: Position, building: Building) -> bool:
    """Closed-segment test against every wall; touching counts as blocked."""
    p1, p2 = (a.x, a.y), (b.x, b.y)
    for v1, v2 in building.edges():
        if _segments_touch(p1, p2, (v1.x, v1.y), (v2.x, v2.y)):
            return True
    return False


def bbox_diagonal(buildings, points=()) -> float:
    """Diagonal of the bounding box over building vertices and extra points."""
    xs: list[float] = []
    ys: list[float] = []
    for b in buildings:
        for v in b.vertices:
            xs.append(v.x)
            ys.append(v.y)
    for p in points:
        xs.append(p.x)
        ys.append(p.y)
    if not xs:
        return 0.0
    return math.hypot(max(xs) - min(xs), max(ys) - min(ys))


class SpatialIndex:
    """Uniform grid over static buildings.

    Buildings are binned by bounding box into square cells; a radius query
    unions the cells overlapping the disc's bounding box and then filters
    exactly by nearest-vertex distance. The grid only ever over-approximates,
    so query results are identical to a linear scan at any cell size.
    """

    def __init__(self, buildings, cell_size: float = DEFAULT_CELL_SIZE):
        if cell_size <= 0:
            raise ValueError("cell_size must be > 0")
        self.cell_size = float(cell_size)
        self.buildings: tuple[Building, ...] = tuple(sorted(buildings, key=lambda b: b.id))
        n = len(self.buildings)

        max_nv = max((len(b.vertices) for b in self.buildings), default=3)
        # vertices padded by repetition so plain min() works row-wise
        verts = np.empty((n, max_nv, 2), dtype=np.float64)
        walls = []
        wall_bld = []
        for i, b in enumerate(self.buildings):
            vs = b.vertices
            for k in range(max_nv):
                v = vs[k] if k < len(vs) else vs[0]
                verts[i, k, 0] = v.x
                verts[i, k, 1] = v.y
            for v1, v2 in b.edges():
                walls.append((v1.x, v1.y, v2.x, v2.y))
                wall_bld.append(i)
        self._verts = verts
        w = np.asarray(walls, dtype=np.float64).reshape(-1, 4)
        self._wax, self._way, self._wbx, self._wby = (w[:, k].copy() for k in range(4))
        self._wminx = np.minimum(self._wax, self._wbx)
        self._wmaxx = np.maximum(self._wax, self._wbx)
        self._wminy = np.minimum(self._way, self._wby)
        self._wmaxy = np.maximum(self._way, self._wby)
        self._wall_bld = np.asarray(wall_bld, dtype=np.intp)

        self._grid: dict[tuple[int, int], np.ndarray] = {}
        if n:
            cells: dict[tuple[int, int], list[int]] = {}
            for i in range(n):
                bx = verts[i, :, 0]
                by = verts[i, :, 1]
                c0x, c1x = self._cell(bx.min()), self._cell(bx.max())
                c0y, c1y = self._cell(by.min()), self._cell(by.max())
                for cx in range(c0x, c1x + 1):
                    for cy in range(c0y, c1y + 1):
                        cells.setdefault((cx, cy), []).append(i)
            self._grid = {c: np.asarray(ix, dtype=np.intp) for c, ix in cells.items()}

    def _cell(self, coord: float) -> int:
        return math.floor(coord / self.cell_size)

    def __len__(self) -> int:
        return len(self.buildings)

    def candidate_indices(self, center: Position, radius: float) -> np.ndarray:
        """Indices (ascending) of buildings with nearest vertex strictly
        inside ``radius`` of ``center``."""
        n = len(self.buildings)
        if n == 0 or radius <= 0:
            return np.empty(0, dtype=np.intp)
        if math.isinf(radius):
            cand = np.arange(n, dtype=np.intp)
        else:
            c0x, c1x = self._cell(center.x - radius), self._cell(center.x + radius)
            c0y, c1y = self._cell(center.y - radius), self._cell(center.y + radius)
            parts = [
                self._grid[(cx, cy)]
                for cx in range(c0x, c1x + 1)
                for cy in range(c0y, c1y + 1)
                if (cx, cy) in self._grid
            ]
            if not parts:
                return np.empty(0, dtype=np.intp)
            cand = np.unique(np.concatenate(parts))
        v = self._verts[cand]
        d2 = (v[:, :, 0] - center.x) ** 2 + (v[:, :, 1] - center.y) ** 2
        if math.isinf(radius):
            return cand
        keep = d2.min(axis=1) < radius * radius
        return cand[keep]

    def query_radius(self, center: Position, radius: float) -> list[Building]:
        return [self.buildings[i] for i in self.candidate_indices(center, radius)]

    def wall_mask(self, building_indices: np.ndarray) -> np.ndarray:
        keep = np.zeros(len(self.buildings), dtype=bool)
        keep[building_indices] = True
        return keep[self._wall_bld]


@dataclass(frozen=True)
class ClassifiedLink:
    target_id: str
    condition: LinkCondition
    distance: float  # 2D center distance ego -> target
    blocker_id: str | None = None  # building id for NLOSb, vehicle id for NLOSv


@dataclass(frozen=True)
class ClassificationResult:
    links: tuple[ClassifiedLink, ...]

    def counts(self) -> dict[LinkCondition, int]:
        out = {c: 0 for c in LinkCondition}
        for link in self.links:
            out[link.condition] += 1
        return out

    def by_target(self) -> dict[str, ClassifiedLink]:
        return {link.target_id: link for link in self.links}


@dataclass
class Candidates:
    """Culling output: everything classification needs, precomputed."""

    ego: VehicleState
    targets: tuple[VehicleState, ...]  # id-sorted, strictly within r_v
    distances: np.ndarray  # center distance per target
    vx: np.ndarray  # in-range vehicle coordinates (same order as targets)
    vy: np.ndarray
    building_indices: np.ndarray
    wall_arrays: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def building_count(self) -> int:
        return int(self.building_indices.size)


class LinkClassifier:
    """Two-phase classifier bound to one building index.

    ``select_candidates`` does the range culling, ``classify_candidates``
    the per-link geometry; timing them separately is the whole point of
    the split. With ``workers > 1`` targets are processed in contiguous
    chunks on a thread pool and merged in order, so output is identical
    to the serial path.
    """

    def __init__(
        self,
        index: SpatialIndex,
        ranges: CullingRanges | None = None,
        nlosv_threshold: float = DEFAULT_NLOSV_THRESHOLD,
        workers: int = 1,
    ):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        if nlosv_threshold <= 0:
            raise ValueError("nlosv_threshold must be > 0")
        self.index = index
        self.ranges = ranges or CullingRanges()
        self.nlosv_threshold = float(nlosv_threshold)
        self.workers = int(workers)
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self) -> "LinkClassifier":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def select_candidates(self, ego: VehicleState, others) -> Candidates:
        ex, ey = ego.position.x, ego.position.y
        ordered = sorted(others, key=lambda v: v.id)
        if ordered:
            pos = np.asarray([(v.position.x, v.position.y) for v in ordered], dtype=np.float64)
            # sqrt of the explicit sum of squares (not hypot): keeps the
            # decision bit-identical to a plain scalar reimplementation
            dist = np.sqrt((pos[:, 0] - ex) ** 2 + (pos[:, 1] - ey) ** 2)
            keep = dist < self.ranges.r_v
            targets = tuple(v for v, k in zip(ordered, keep) if k)
            vx, vy, dist = pos[keep, 0], pos[keep, 1], dist[keep]
        else:
            targets = ()
            vx = vy = dist = np.empty(0, dtype=np.float64)

        idx = self.index
        b_idx = idx.candidate_indices(ego.position, self.ranges.r_b)
        wmask = idx.wall_mask(b_idx)
        wall_arrays = (
            idx._wax[wmask],
            idx._way[wmask],
            idx._wbx[wmask],
            idx._wby[wmask],
            idx._wminx[wmask],
            idx._wmaxx[wmask],
            idx._wminy[wmask],
            idx._wmaxy[wmask],
            idx._wall_bld[wmask],
        )
        return Candidates(
            ego=ego,
            targets=targets,
            distances=dist,
            vx=vx,
            vy=vy,
            building_indices=b_idx,
            wall_arrays=wall_arrays,
        )

    def classify_candidates(self, cand: Candidates) -> ClassificationResult:
        n = len(cand.targets)
        if n == 0:
            return ClassificationResult(links=())
        if self._pool is None or n < 2 * self.workers:
            return ClassificationResult(links=tuple(self._classify_range(cand, 0, n)))
        bounds = np.linspace(0, n, self.workers + 1).astype(int)
        jobs = [
            self._pool.submit(self._classify_range, cand, int(bounds[k]), int(bounds[k + 1]))
            for k in range(self.workers)
            if bounds[k] < bounds[k + 1]
        ]
        links: list[ClassifiedLink] = []
        for job in jobs:
            links.extend(job.result())
        return ClassificationResult(links=tuple(links))

    def classify(self, ego: VehicleState, others) -> ClassificationResult:
        return self.classify_candidates(self.select_candidates(ego, others))

    def _classify_range(self, cand: Candidates, lo: int, hi: int) -> list[ClassifiedLink]:
        ego = cand.ego
        ex, ey = ego.position.x, ego.position.y
        wax, way, wbx, wby, wminx, wmaxx, wminy, wmaxy, wbld = cand.wall_arrays
        buildings = self.index.buildings
        thr = self.nlosv_threshold
        out: list[ClassifiedLink] = []
        for i in range(lo, hi):
            tgt = cand.targets[i]
            d = float(cand.distances[i])
            if d < _DEGENERATE_DIST:
                out.append(ClassifiedLink(tgt.id, LinkCondition.LOS, d))
                continue
            tx, ty = tgt.position.x, tgt.position.y

            hit_bld = _first_wall_hit(
                ex, ey, tx, ty, wax, way, wbx, wby, wminx, wmaxx, wminy, wmaxy, wbld
            )
            if hit_bld >= 0:
                out.append(
                    ClassifiedLink(tgt.id, LinkCondition.NLOSB, d, blocker_id=buildings[hit_bld].id)
                )
                continue

            blocker = _first_between(ex, ey, tx, ty, cand.vx, cand.vy, i, thr)
            if blocker >= 0:
                out.append(
                    ClassifiedLink(
                        tgt.id, LinkCondition.NLOSV, d, blocker_id=cand.targets[blocker].id
                    )
                )
            else:
                out.append(ClassifiedLink(tgt.id, LinkCondition.LOS, d))
        return out


def _first_wall_hit(ex, ey, tx, ty, wax, way, wbx, wby, wminx, wmaxx, wminy, wmaxy, wbld) -> int:
    """Index of the blocking building (in index order), or -1.

    Vectorized closed-segment intersection against all candidate walls,
    after a bounding-box prefilter of the link segment.
    """
    if wax.size == 0:
        return -1
    sminx, smaxx = (ex, tx) if ex <= tx else (tx, ex)
    sminy, smaxy = (ey, ty) if ey <= ty else (ty, ey)
    near = (wmaxx >= sminx) & (wminx <= smaxx) & (wmaxy >= sminy) & (wminy <= smaxy)
    if not near.any():
        return -1
    ax, ay, bx, by = wax[near], way[near], wbx[near], wby[near]
    abx, aby = bx - ax, by - ay
    d1 = abx * (ey - ay) - aby * (ex - ax)
    d2 = abx * (ty - ay) - aby * (tx - ax)
    pqx, pqy = tx - ex, ty - ey
    d3 = pqx * (ay - ey) - pqy * (ax - ex)
    d4 = pqx * (by - ey) - pqy * (bx - ex)
    proper = ((d1 > 0) != (d2 > 0)) & (d1 != 0) & (d2 != 0)
    proper &= ((d3 > 0) != (d4 > 0)) & (d3 != 0) & (d4 != 0)
    touch = (d1 == 0) & _on_seg_arr(ax, ay, bx, by, ex, ey)
    touch |= (d2 == 0) & _on_seg_arr(ax, ay, bx, by, tx, ty)
    touch |= (d3 == 0) & _on_seg_arr(ex, ey, tx, ty, ax, ay)
    touch |= (d4 == 0) & _on_seg_arr(ex, ey, tx, ty, bx, by)
    hit = proper | touch
    if not hit.any():
        return -1
    local = int(np.argmax(hit))
    return int(wbld[np.nonzero(near)[0][local]])


def _on_seg_arr(ax, ay, bx, by, px, py):
    # assumes p collinear with a-b; bbox containment test
    return (
        (np.minimum(ax, bx) <= px)
        & (px <= np.maximum(ax, bx))
        & (np.minimum(ay, by) <= py)
        & (py <= np.maximum(ay, by))
    )


def _first_between(ex, ey, tx, ty, vx, vy, self_index: int, threshold: float) -> int:
    """Index of the first in-range vehicle inside the link corridor, or -1."""
    if vx.size <= 1:
        return -1
    dx, dy = tx - ex, ty - ey
    l2 = dx * dx + dy * dy
    t = ((vx - ex) * dx + (vy - ey) * dy) / l2
    d_orth = np.abs(dx * (vy - ey) - dy * (vx - ex)) / math.sqrt(l2)
    qual = (t > 0.0) & (t < 1.0) & (d_orth < threshold)
    qual[self_index] = False
    if not qual.any():
        return -1
    return int(np.argmax(qual))


def classify_step(
    ego: VehicleState,
    others,
    index: SpatialIndex,
    ranges: CullingRanges | None = None,
    nlosv_threshold: float = DEFAULT_NLOSV_THRESHOLD,
) -> ClassificationResult:
    """One-shot convenience wrapper around LinkClassifier."""
    clf = LinkClassifier(index, ranges=ranges, nlosv_threshold=nlosv_threshold)
    return clf.classify(ego, others)
