"""Arm events on a coloured region.

One arm is answered by labelling the clusters of the arm colour.
Disjoint arms are counted as a unit vertex-capacity max flow: every
site is split into an in-copy and an out-copy joined by a capacity-1
edge, a super-source feeds the source sites and the target sites drain
into a super-sink. By Menger's theorem the flow value is the size of
the smallest separating site set.
"""
import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from helpers.errors import CapacityError, DomainError
from helpers.lattice import (MAX_ENUMERATION_SITES, Coloring, Region, RegionKind, RegionSpec, build_region,
                             enumerate_colorings)

MAX_ARMS = 6


class Color(enum.Enum):
    BLACK = "black"
    WHITE = "white"

    def mask(self, coloring: Coloring) -> np.ndarray:
        return coloring.black if self is Color.BLACK else ~coloring.black


@dataclass(frozen=True, eq=False)
class ArmQuery:
    region: Region
    sources: Tuple[int, ...]
    targets: np.ndarray
    color: Color = Color.BLACK
    required_count: int = 1
    excluded: Tuple[int, ...] = ()

    def __post_init__(self):
        if not (1 <= self.required_count <= MAX_ARMS):
            raise DomainError(f"required_count must be in [1, {MAX_ARMS}], got {self.required_count}")
        if len(self.targets) != self.region.size:
            raise DomainError("target mask does not match the region size")

    def with_count(self, required_count: int, color: Optional[Color] = None) -> "ArmQuery":
        return ArmQuery(self.region, self.sources, self.targets, color or self.color, required_count, self.excluded)


def _allowed(coloring: Coloring, query: ArmQuery) -> np.ndarray:
    if len(coloring) != query.region.size:
        raise DomainError(f"coloring has {len(coloring)} sites, region has {query.region.size}")
    allowed = query.color.mask(coloring).copy()
    if query.excluded:
        allowed[list(query.excluded)] = False
    return allowed


# axial offsets (±1, 0), (0, ±1), (1, -1), (-1, 1) on a [y, x] grid
HEX_STRUCTURE = np.array([[0, 1, 1],
                          [1, 1, 1],
                          [1, 1, 0]], dtype=bool)


def _crossing_clusters(allowed: np.ndarray, query: ArmQuery) -> Tuple[np.ndarray, np.ndarray]:
    """Per-site cluster labels (0 off the arm colour) and the labels that meet both ends."""
    region = query.region
    grid_labels, _ = ndimage.label(region.grid(allowed), structure=HEX_STRUCTURE)
    labels = grid_labels.reshape(-1)[region.cells]
    sources = labels[np.asarray(query.sources, dtype=np.int64)]
    touching = np.intersect1d(sources[sources > 0], labels[query.targets & (labels > 0)])
    return labels, touching


def has_one_arm(coloring: Coloring, query: ArmQuery) -> bool:
    _, touching = _crossing_clusters(_allowed(coloring, query), query)
    return touching.size > 0


def _split_graph_flow(query: ArmQuery, keep: np.ndarray) -> int:
    """Max flow on the kept sites with every site split into in (2t) and out (2t+1) copies."""
    sites = np.flatnonzero(keep)
    m = len(sites)
    local = np.full(query.region.size, -1, dtype=np.int64)
    local[sites] = np.arange(m)
    source, sink = 2 * m, 2 * m + 1

    nbr = query.region.neighbor_table[sites]
    step = local[np.where(nbr >= 0, nbr, 0)]
    step[nbr < 0] = -1
    t, col = np.nonzero(step >= 0)
    starts = local[np.unique(np.asarray(query.sources, dtype=np.int64))]
    starts = starts[starts >= 0]
    ends = np.flatnonzero(query.targets[sites])

    tails = np.concatenate([2 * np.arange(m), 2 * t + 1, np.full(len(starts), source), 2 * ends + 1])
    heads = np.concatenate([2 * np.arange(m) + 1, 2 * step[t, col], 2 * starts, np.full(len(ends), sink)])
    graph = sparse.csr_matrix((np.ones(len(tails), dtype=np.int32), (tails, heads)),
                              shape=(2 * m + 2, 2 * m + 2), dtype=np.int32)
    graph.sort_indices()
    return int(csgraph.maximum_flow(graph, source, sink).flow_value)


def max_disjoint_arms(coloring: Coloring, query: ArmQuery) -> int:
    """Vertex-disjoint monochromatic source-to-target paths, capped at required_count.

    Every path stays inside one cluster, so the flow only sees clusters that
    meet both a source and a target."""
    labels, touching = _crossing_clusters(_allowed(coloring, query), query)
    if touching.size == 0:
        return 0
    if query.required_count == 1:
        return 1
    return min(_split_graph_flow(query, np.isin(labels, touching)), query.required_count)


# ---------------------------------------------------------------------------
# events


def backbone_query(region: Region, required_count: int = 2) -> ArmQuery:
    """Arms from the six neighbours of the origin to the rim of a ball; the origin itself is ignored."""
    if region.spec.kind is not RegionKind.BALL or region.spec.r_out < 1:
        raise DomainError(f"backbone event needs Ball(n) with n >= 1, got {region.spec}")
    origin = region.site((0, 0))
    return ArmQuery(region, region.neighbors_of(origin), region.rim, Color.BLACK, required_count, (origin,))


def origin_query(region: Region) -> ArmQuery:
    """One arm from the origin itself to the rim of a ball."""
    if region.spec.kind is not RegionKind.BALL:
        raise DomainError(f"one-arm event needs a ball, got {region.spec}")
    return ArmQuery(region, (region.site((0, 0)),), region.rim, Color.BLACK, 1)


def crossing_query(region: Region, color: Color = Color.BLACK, required_count: int = 1) -> ArmQuery:
    """Arms across an annulus, from sites next to the hole to sites on the rim."""
    spec = region.spec
    if spec.kind is not RegionKind.ANNULUS:
        raise DomainError(f"crossing events need an annulus, got {spec}")
    if spec.r_out < spec.r_in + 2:
        raise DomainError(f"crossing events need r_out >= r_in + 2, got {spec}")
    return ArmQuery(region, tuple(region.sites_of(region.hole_adjacent)), region.rim, color, required_count)


def has_backbone_event(coloring: Coloring, region: Region) -> bool:
    return max_disjoint_arms(coloring, backbone_query(region)) >= 2


def has_bb_crossing(coloring: Coloring, region: Region) -> bool:
    return max_disjoint_arms(coloring, crossing_query(region, Color.BLACK, 2)) >= 2


def has_bww_event(coloring: Coloring, region: Region) -> bool:
    """One black crossing and two disjoint white crossings.

    Two disjoint white crossings cut the annulus into two sectors and any
    black crossing lies in one of them, so the count condition already
    gives the cyclic pattern BWW."""
    if not has_one_arm(coloring, crossing_query(region, Color.BLACK, 1)):
        return False
    return max_disjoint_arms(coloring, crossing_query(region, Color.WHITE, 2)) >= 2


def has_origin_arm(coloring: Coloring, region: Region) -> bool:
    return has_one_arm(coloring, origin_query(region))


EventFn = Callable[[Coloring, Region], bool]

BALL_EVENTS = {"one": has_origin_arm, "bb": has_backbone_event}
ANNULUS_EVENTS = {"one": lambda c, r: has_one_arm(c, crossing_query(r)), "bb": has_bb_crossing,
                  "bww": has_bww_event}


def event_function(event: str, spec: RegionSpec) -> EventFn:
    table = BALL_EVENTS if spec.kind is RegionKind.BALL else ANNULUS_EVENTS
    try:
        return table[event]
    except KeyError:
        raise DomainError(f"event {event!r} is not defined on {spec.kind.value} regions") from None


# ---------------------------------------------------------------------------
# exhaustive oracle


def exact_event_count(region: Region, event: Callable[[Coloring], bool]) -> Tuple[int, int]:
    if region.size > MAX_ENUMERATION_SITES:
        raise CapacityError(f"{region.size} sites is too many to enumerate (limit {MAX_ENUMERATION_SITES})")
    count = sum(1 for coloring in enumerate_colorings(region) if event(coloring))
    return count, 1 << region.size


def exact_event_probability(region: Region, event: Callable[[Coloring], bool]) -> Fraction:
    """Exact probability at p = 1/2."""
    count, total = exact_event_count(region, event)
    return Fraction(count, total)


def exact_named_event(event: str, spec: RegionSpec) -> Fraction:
    region = build_region(spec)
    fn = event_function(event, spec)
    return exact_event_probability(region, lambda c: fn(c, region))
