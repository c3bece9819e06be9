"""Triangular lattice geometry and site-percolation configurations.

A vertex is stored in axial coordinates (x, y) meaning x + y·e^{iπ/3};
its squared Euclidean norm is x² + xy + y², so every membership test is
integer arithmetic.

Colours come from a counter-based generator: the value for a site is a
SplitMix64 finalizer applied to (seed, trial, site index), so a trial can
be replayed on its own and workers never share a stream.
"""
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, List, Tuple

import numpy as np

from __init__ import LOGGER
from helpers.errors import CapacityError, DomainError

AxialCoord = Tuple[int, int]

NEIGHBOR_OFFSETS: Tuple[AxialCoord, ...] = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))
MAX_RADIUS = 4096
MAX_ENUMERATION_SITES = 25

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
UNIT53 = 2.0 ** -53


def norm_sq(v: AxialCoord) -> int:
    x, y = v
    return x * x + x * y + y * y


def neighbors(v: AxialCoord) -> List[AxialCoord]:
    x, y = v
    return [(x + dx, y + dy) for dx, dy in NEIGHBOR_OFFSETS]


class RegionKind(enum.Enum):
    BALL = "ball"
    ANNULUS = "annulus"


@dataclass(frozen=True)
class RegionSpec:
    kind: RegionKind
    r_out: int
    r_in: int = 0

    @classmethod
    def ball(cls, r: int) -> "RegionSpec":
        return cls(RegionKind.BALL, int(r))

    @classmethod
    def annulus(cls, r_in: int, r_out: int) -> "RegionSpec":
        return cls(RegionKind.ANNULUS, int(r_out), int(r_in))

    def contains(self, v: AxialCoord) -> bool:
        n = norm_sq(v)
        if self.kind is RegionKind.BALL:
            return n <= self.r_out * self.r_out
        return self.r_in * self.r_in < n <= self.r_out * self.r_out

    def in_hole(self, v: AxialCoord) -> bool:
        return self.kind is RegionKind.ANNULUS and norm_sq(v) <= self.r_in * self.r_in

    def __str__(self) -> str:
        if self.kind is RegionKind.BALL:
            return f"Ball({self.r_out})"
        return f"Annulus({self.r_in},{self.r_out})"


@dataclass(frozen=True, eq=False)
class Region:
    """Sites of a region as flat numpy arrays.

    `lookup` is a square grid over the bounding box (plus a one-site margin)
    holding each site's index or -1; `cells` is the flat grid position of
    every site, so a per-site mask can be painted onto the grid in one step.
    """
    spec: RegionSpec
    coords: np.ndarray
    lookup: np.ndarray
    half_width: int
    neighbor_table: np.ndarray
    hole_adjacent: np.ndarray
    rim: np.ndarray
    outer_boundary: frozenset = field(default_factory=frozenset)

    @property
    def size(self) -> int:
        return len(self.coords)

    @cached_property
    def cells(self) -> np.ndarray:
        w = self.half_width
        side = 2 * w + 1
        return (self.coords[:, 1] + w) * side + (self.coords[:, 0] + w)

    @property
    def inner_boundary(self) -> np.ndarray:
        """Sites with at least one lattice neighbour outside the region."""
        return self.hole_adjacent | self.rim

    @cached_property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        """Neighbour lists as plain tuples, for site-by-site walks on small regions."""
        return tuple(tuple(int(j) for j in row if j >= 0) for row in self.neighbor_table)

    def neighbors_of(self, i: int) -> Tuple[int, ...]:
        row = self.neighbor_table[i]
        return tuple(int(j) for j in row[row >= 0])

    def site(self, v: AxialCoord) -> int:
        x, y = v
        w = self.half_width
        if not (-w <= x <= w and -w <= y <= w) or self.lookup[y + w, x + w] < 0:
            raise KeyError(f"{tuple(v)} is not a site of {self.spec}")
        return int(self.lookup[y + w, x + w])

    def grid(self, mask: np.ndarray) -> np.ndarray:
        """A per-site boolean mask painted onto the lookup grid (False off the region)."""
        out = np.zeros(self.lookup.size, dtype=bool)
        out[self.cells] = mask
        return out.reshape(self.lookup.shape)

    def sites_of(self, mask: np.ndarray) -> List[int]:
        return [int(i) for i in np.flatnonzero(mask)]

    def coord(self, i: int) -> AxialCoord:
        return int(self.coords[i, 0]), int(self.coords[i, 1])


def build_region(spec: RegionSpec) -> Region:
    r_in, r_out = spec.r_in, spec.r_out
    if r_out > MAX_RADIUS:
        raise CapacityError(f"radius {r_out} above the supported maximum {MAX_RADIUS}")
    if r_in < 0 or r_out < 0 or (spec.kind is RegionKind.ANNULUS and not r_in < r_out):
        raise DomainError(f"invalid region {spec}: need 0 <= r_in < r_out")

    # |x|, |y| <= 2r/√3 on the ball; one more row keeps every neighbour on the grid
    w = math.isqrt(4 * r_out * r_out // 3) + 2
    axis = np.arange(-w, w + 1, dtype=np.int64)
    xs, ys = axis[np.newaxis, :], axis[:, np.newaxis]
    norms = xs * xs + xs * ys + ys * ys
    inside = norms <= r_out * r_out
    if spec.kind is RegionKind.ANNULUS:
        inside &= norms > r_in * r_in
    del norms
    rows, cols = np.nonzero(inside)
    k = len(rows)
    lookup = np.full(inside.shape, -1, dtype=np.int32)
    lookup[rows, cols] = np.arange(k, dtype=np.int32)
    coords = np.stack([cols - w, rows - w], axis=1).astype(np.int64)

    table = np.empty((k, 6), dtype=np.int32)
    hole_adjacent = np.zeros(k, dtype=bool)
    rim = np.zeros(k, dtype=bool)
    outer = set()
    for j, (dx, dy) in enumerate(NEIGHBOR_OFFSETS):
        nx, ny = coords[:, 0] + dx, coords[:, 1] + dy
        table[:, j] = lookup[ny + w, nx + w]
        missing = table[:, j] < 0
        in_hole = missing & (nx * nx + nx * ny + ny * ny <= r_in * r_in)
        if spec.kind is RegionKind.BALL:
            in_hole[:] = False
        hole_adjacent |= in_hole
        rim |= missing & ~in_hole
        outer.update(zip(nx[missing].tolist(), ny[missing].tolist()))
    LOGGER.debug(f"built {spec}: {k} sites, {int(hole_adjacent.sum())} hole-adjacent, {int(rim.sum())} rim")
    return Region(spec, coords, lookup, w, table, hole_adjacent, rim, frozenset(outer))


# ---------------------------------------------------------------------------
# randomness


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
        return z ^ (z >> np.uint64(31))


def trial_key(seed: int, trial: int) -> int:
    return mix64(seed + GOLDEN * (trial + 1))


def site_uniforms(size: int, seed: int, trial: int) -> np.ndarray:
    """Uniforms in [0, 1) for sites 0..size-1 of one trial."""
    key = np.uint64(trial_key(seed, trial))
    steps = np.arange(1, size + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = key + np.uint64(GOLDEN) * steps
    bits = _mix_array(z)
    return (bits >> np.uint64(11)).astype(np.float64) * UNIT53


@dataclass(frozen=True, eq=False)
class Coloring:
    black: np.ndarray
    seed: int = -1
    trial: int = -1

    def __len__(self) -> int:
        return len(self.black)

    @property
    def bits(self) -> bytes:
        return np.packbits(self.black).tobytes()

    @property
    def white(self) -> np.ndarray:
        return ~self.black

    def with_black(self, i: int) -> "Coloring":
        black = self.black.copy()
        black[i] = True
        return Coloring(black, self.seed, self.trial)


def sample_coloring(region: Region, p: float, seed: int, trial: int) -> Coloring:
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p={p} outside [0, 1]")
    return Coloring(site_uniforms(region.size, seed, trial) < p, seed, trial)


def uniform_coloring(region: Region, black: bool) -> Coloring:
    return Coloring(np.full(region.size, bool(black)))


def coloring_from_mask(size: int, mask: int) -> Coloring:
    """Site i is black iff bit i of mask is set."""
    bits = (mask >> np.arange(size, dtype=np.int64)) & 1
    return Coloring(bits.astype(bool), seed=-1, trial=mask)


def enumerate_colorings(region: Region) -> Iterator[Coloring]:
    k = region.size
    if k > MAX_ENUMERATION_SITES:
        raise CapacityError(f"{k} sites is too many to enumerate (limit {MAX_ENUMERATION_SITES})")
    for mask in range(1 << k):
        yield coloring_from_mask(k, mask)
