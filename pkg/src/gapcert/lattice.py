"""Finite regions of Z^D, the F_k region classes and their s-decompositions.

Regions are immutable sets of integer sites.  ``classify_region`` finds the
smallest k such that a region fits (up to translation and permutation of the
axes) in the box ``[0, l_{k+1}] x ... x [0, l_{k+D}]`` with
``l_j = (3/2)**(j/D)``; ``s_decompose`` cuts such a region into ``s``
overlapping pairs along one axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DecompositionError, DimensionMismatchError, EmptyRegionError

Site = tuple[int, ...]


@dataclass(frozen=True)
class Region:
    """A finite, deduplicated set of sites of Z^dim."""

    sites: frozenset
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"lattice dimension must be positive, got {self.dim}")
        clean = frozenset(tuple(int(c) for c in s) for s in self.sites)
        for s in clean:
            if len(s) != self.dim:
                raise DimensionMismatchError(f"site {s} does not have {self.dim} coordinates")
        object.__setattr__(self, "sites", clean)

    @classmethod
    def from_sites(cls, sites: Iterable[Sequence[int]], dim: int | None = None) -> "Region":
        sites = [tuple(int(c) for c in s) for s in sites]
        if dim is None:
            if not sites:
                raise EmptyRegionError("cannot infer the dimension of an empty region")
            dim = len(sites[0])
        return cls(frozenset(sites), dim)

    @classmethod
    def interval(cls, start: int, stop: int) -> "Region":
        """The 1D region {start, ..., stop} (both ends included)."""
        return cls(frozenset((x,) for x in range(start, stop + 1)), 1)

    @classmethod
    def box(cls, lo: Sequence[int], hi: Sequence[int]) -> "Region":
        """All sites x with lo <= x <= hi componentwise."""
        if len(lo) != len(hi):
            raise DimensionMismatchError("box corners differ in dimension")
        ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
        return cls(frozenset(itertools.product(*ranges)), len(lo))

    @classmethod
    def from_json(cls, doc: dict) -> "Region":
        return cls.from_sites(doc["sites"], dim=int(doc["dim"]))

    def to_json(self) -> dict:
        return {"dim": self.dim, "sites": [list(s) for s in self.sorted_sites]}

    @cached_property
    def sorted_sites(self) -> tuple[Site, ...]:
        return tuple(sorted(self.sites))

    @cached_property
    def index(self) -> dict[Site, int]:
        """Position of each site in the lexicographic site order (tensor-leg order)."""
        return {s: i for i, s in enumerate(self.sorted_sites)}

    def coords(self) -> np.ndarray:
        if not self.sites:
            return np.zeros((0, self.dim), dtype=int)
        return np.array(self.sorted_sites, dtype=int)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.sites:
            raise EmptyRegionError("empty region has no bounding box")
        c = self.coords()
        return c.min(axis=0), c.max(axis=0)

    def side_lengths(self) -> np.ndarray:
        lo, hi = self.bounding_box()
        return hi - lo

    def is_box(self) -> bool:
        lo, hi = self.bounding_box()
        return len(self.sites) == int(np.prod(hi - lo + 1))

    def translate(self, shift: Sequence[int]) -> "Region":
        return Region(frozenset(tuple(a + b for a, b in zip(s, shift)) for s in self.sites), self.dim)

    def permute_axes(self, perm: Sequence[int]) -> "Region":
        """New region whose axis j is this region's axis ``perm[j]``."""
        return Region(frozenset(tuple(s[p] for p in perm) for s in self.sites), self.dim)

    def _check(self, other: "Region"):
        if self.dim != other.dim:
            raise DimensionMismatchError(f"regions of dimension {self.dim} and {other.dim}")

    def __or__(self, other: "Region") -> "Region":
        self._check(other)
        return Region(self.sites | other.sites, self.dim)

    def __and__(self, other: "Region") -> "Region":
        self._check(other)
        return Region(self.sites & other.sites, self.dim)

    def __sub__(self, other: "Region") -> "Region":
        self._check(other)
        return Region(self.sites - other.sites, self.dim)

    def __le__(self, other: "Region") -> bool:
        self._check(other)
        return self.sites <= other.sites

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sorted_sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self.sites

    def __repr__(self) -> str:
        if self.dim == 1 and self.sites:
            xs = [s[0] for s in self.sorted_sites]
            if xs == list(range(xs[0], xs[-1] + 1)):
                return f"Region({{{xs[0]}..{xs[-1]}}})"
        return f"Region(dim={self.dim}, sites={list(self.sorted_sites)})"


def union(a: Region, b: Region) -> Region:
    return a | b


def intersection(a: Region, b: Region) -> Region:
    return a & b


def difference(a: Region, b: Region) -> Region:
    return a - b


def dist(a: Region, b: Region) -> float:
    """Minimum Euclidean distance between sites of ``a`` and ``b`` (inf if either is empty)."""
    a._check(b)
    if not a.sites or not b.sites:
        return math.inf
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    d, _ = cKDTree(big.coords()).query(small.coords(), k=1)
    return float(np.min(d))


def diameter(region: Region) -> float:
    c = region.coords()
    if len(c) < 2:
        return 0.0
    diff = c[:, None, :] - c[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def overlap_size(a: Region, b: Region) -> int:
    """Size of A ∩ B: its cardinality in 1D, else the diameter (in sites) of the
    largest lattice ball contained in it."""
    ov = a & b
    if not ov.sites:
        return 0
    if ov.dim == 1:
        return len(ov)
    best = 0
    for c in ov.sorted_sites:
        r = 0
        while all(site in ov.sites for site in _ball(c, r + 1)):
            r += 1
        best = max(best, r)
    return 2 * best + 1


def _ball(center: Site, radius: int):
    for off in itertools.product(range(-radius, radius + 1), repeat=len(center)):
        if sum(o * o for o in off) <= radius * radius:
            yield tuple(c + o for c, o in zip(center, off))


def side_length(j: int, dim: int) -> float:
    """l_j = (3/2)^(j/D)."""
    return 1.5 ** (j / dim)


@dataclass(frozen=True)
class RegionClassIndex:
    k: int
    dim: int

    @property
    def lengths(self) -> tuple[float, ...]:
        """The box sides l_{k+1}, ..., l_{k+D} of R(k)."""
        return tuple(side_length(self.k + j, self.dim) for j in range(1, self.dim + 1))


def _fits(sides: Sequence[float], k: int, dim: int) -> bool:
    ls = RegionClassIndex(k, dim).lengths
    return all(s <= l for s, l in zip(sorted(sides), ls))


def classify_region(region: Region) -> int:
    """Smallest k >= 0 with region ∈ F_k."""
    if not region.sites:
        raise EmptyRegionError("cannot classify an empty region")
    sides = region.side_lengths()
    # l_j grows geometrically, so this terminates after O(D log(max side)) steps
    k = 0
    while not _fits(sides, k, region.dim):
        k += 1
    return k


def canonical_frame(region: Region, k: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Translation and axis permutation placing ``region`` inside R(k).

    Returns ``(origin, perm)``: frame coordinate j of a site x is
    ``x[perm[j]] - origin[perm[j]]``.  Among admissible permutations the
    lexicographically smallest is chosen.
    """
    lo, hi = region.bounding_box()
    sides = hi - lo
    ls = RegionClassIndex(k, region.dim).lengths
    for perm in itertools.permutations(range(region.dim)):
        if all(sides[p] <= l for p, l in zip(perm, ls)):
            return lo, perm
    raise DecompositionError(f"region does not fit in R({k})")


@dataclass(frozen=True)
class SDecomposition:
    parent: Region
    k: int
    s: int
    pairs: tuple[tuple[Region, Region], ...]
    cut_axis: int  # 1-based axis of the original coordinates
    width: float = field(default=0.0)  # d_k = l_k / (8 s)

    @property
    def required_distance(self) -> float:
        return side_length(self.k, self.parent.dim) / (8 * self.s) - 2


def s_decompose(region: Region, k: int, s: int, *, enforce_s_bound: bool = True) -> SDecomposition:
    """Cut ``region`` ∈ F_k \\ F_{k-1} into ``s`` overlapping pairs (A_i, B_i).

    In the canonical frame, with L = l_{k+D} the side of R(k) along the cut
    axis and d = l_k/(8s)::

        A_i = {x : x_cut <= L/2 + 2 i d}
        B_i = {x : x_cut >= L/2 + (2i - 1) d}

    ``enforce_s_bound=False`` lifts the ``s <= l_k/8`` requirement; the pairs
    still cover the region but may have empty overlaps.
    """
    if not region.sites:
        raise EmptyRegionError("cannot decompose an empty region")
    if k < 1:
        raise DecompositionError("decomposition needs k >= 1")
    actual = classify_region(region)
    if actual < k:
        raise DecompositionError(f"region already belongs to F_{actual} ⊆ F_{k - 1}")
    if actual > k:
        raise DecompositionError(f"region is not in F_{k} (smallest class is F_{actual})")
    D = region.dim
    lk = side_length(k, D)
    if s < 1 or (enforce_s_bound and s > lk / 8):
        raise DecompositionError(f"s={s} outside 1 <= s <= l_k/8 = {lk / 8:.4g}")

    origin, perm = canonical_frame(region, k)
    cut = perm[-1]
    L = side_length(k + D, D)
    d = lk / (8 * s)
    coords = region.coords()
    y = coords[:, cut] - origin[cut]
    sites = region.sorted_sites
    pairs = []
    for i in range(1, s + 1):
        a_mask = y <= L / 2 + 2 * i * d
        b_mask = y >= L / 2 + (2 * i - 1) * d
        A = Region(frozenset(site for site, m in zip(sites, a_mask) if m), D)
        B = Region(frozenset(site for site, m in zip(sites, b_mask) if m), D)
        if not A.sites or not B.sites:
            raise DecompositionError(f"pair {i} has an empty side; region violates the construction's hypotheses")
        pairs.append((A, B))
    return SDecomposition(region, k, s, tuple(pairs), cut + 1, d)


@dataclass(frozen=True)
class DecompositionReport:
    prop1: bool
    prop2: bool
    prop3: bool
    min_distance: float
    required_distance: float
    cut_extent_ok: bool

    @property
    def ok(self) -> bool:
        return self.prop1 and self.prop2 and self.prop3


def verify_decomposition(dec: SDecomposition) -> DecompositionReport:
    """Exhaustively check the three s-decomposition properties."""
    parent = dec.parent
    prop1 = True
    cut_ok = True
    lk = side_length(dec.k, parent.dim)
    min_d = math.inf
    for A, B in dec.pairs:
        if not A.sites or not B.sites or (A | B) != parent:
            prop1 = False
        elif classify_region(A) > dec.k - 1 or classify_region(B) > dec.k - 1:
            prop1 = False
        min_d = min(min_d, dist(parent - A, parent - B))
        if A.sites:
            ax = dec.cut_axis - 1
            ext = A.coords()[:, ax]
            cut_ok &= bool(ext.max() - ext.min() <= lk)
    req = dec.required_distance
    prop2 = min_d >= req
    overlaps = [A & B for A, B in dec.pairs]
    prop3 = all(
        not (overlaps[i].sites & overlaps[j].sites)
        for i in range(len(overlaps))
        for j in range(i + 1, len(overlaps))
    )
    return DecompositionReport(prop1, prop2, prop3, min_d, req, cut_ok)


def maximal_region(k: int, dim: int) -> Region:
    """The largest box of sites in R(k); belongs to F_k \\ F_{k-1} whenever k >= 1
    and the floors of the box sides are not already admissible at level k-1."""
    ls = RegionClassIndex(k, dim).lengths
    return Region.box([0] * dim, [math.floor(l) for l in ls])
