"""Geometry of the half-space lattice: boxes, wall, reflections and boundary
condition descriptors.

Sites are integer tuples ``(i_1, ..., i_d)``.  The half-space consists of the
sites with last coordinate ``i_d >= 1``; the wall is the layer ``i_d == 1``.
Adjacency is l1-distance 1.
"""

from dataclasses import dataclass, field
from itertools import product

from .errors import CapacityError, ConfigurationError

SEMI_INFINITE = "semi_infinite"
FULL = "full"

# Regions larger than this are refused outright; the much tighter enumeration
# cap for exhaustive sums lives in the exact module.
DEFAULT_SITE_CAP = 1 << 22


def unit_vector(d, axis):
    return tuple(1 if k == axis else 0 for k in range(d))


def in_universe(site, universe):
    if universe == SEMI_INFINITE:
        return site[-1] >= 1
    if universe == FULL:
        return True
    raise ValueError(f"unknown universe {universe!r}")


def neighbors(site, universe):
    """The l1-distance-1 sites of ``site`` inside ``universe``."""
    d = len(site)
    out = []
    for axis in range(d):
        for step in (-1, 1):
            nb = list(site)
            nb[axis] += step
            nb = tuple(nb)
            if in_universe(nb, universe):
                out.append(nb)
    return set(out)


def mirror_site(site):
    """Reflection across the plane i_d = 1/2 combined with negation of the
    transverse coordinates: i -> -i + e_d.  Maps the wall layer (i_d = 1) onto
    the layer i_d = 0 and vice versa."""
    return tuple(-c for c in site[:-1]) + (1 - site[-1],)


def reflect_across_wall_plane(site):
    """Reflection across i_d = 1/2 only (transverse coordinates kept)."""
    return site[:-1] + (1 - site[-1],)


def negate_last(site):
    """The alternative reflection i_d -> -i_d (maps [1, n] onto [-n, -1])."""
    return site[:-1] + (-site[-1],)


@dataclass(frozen=True)
class Region:
    """Base class; concrete regions implement ``site_list``/``cardinality``."""

    d: int = 2

    def site_list(self):
        raise NotImplementedError

    def cardinality(self):
        raise NotImplementedError

    def default_universe(self):
        return SEMI_INFINITE

    def sites(self, cap=DEFAULT_SITE_CAP):
        if self.d < 2:
            raise ValueError("dimension must be >= 2")
        if self.cardinality() > cap:
            raise CapacityError(
                f"region has {self.cardinality()} sites, cap is {cap}"
            )
        return sorted(self.site_list())


@dataclass(frozen=True)
class SemiBox(Region):
    """{i : 1 <= i_d <= m, -n <= i_k <= n for k < d}; lives in the half-space."""

    n: int = 1
    m: int = 1

    def site_list(self):
        side = range(-self.n, self.n + 1)
        return [
            t + (h,)
            for t in product(side, repeat=self.d - 1)
            for h in range(1, self.m + 1)
        ]

    def cardinality(self):
        return (2 * self.n + 1) ** (self.d - 1) * self.m


@dataclass(frozen=True)
class ExtendedBox(Region):
    """SemiBox(n, n) united with its reflection; ``reflection`` picks the
    convention: 'mirror' reflects across i_d = 1/2 (layers 1..n onto 0..1-n),
    'negate' uses i_d -> -i_d (layers 1..n onto -1..-n, layer 0 omitted)."""

    n: int = 1
    reflection: str = "mirror"

    def site_list(self):
        upper = SemiBox(d=self.d, n=self.n, m=self.n).site_list()
        if self.reflection == "mirror":
            lower = [reflect_across_wall_plane(s) for s in upper]
        elif self.reflection == "negate":
            lower = [negate_last(s) for s in upper]
        else:
            raise ValueError(f"unknown reflection {self.reflection!r}")
        return upper + lower

    def cardinality(self):
        return 2 * (2 * self.n + 1) ** (self.d - 1) * self.n

    def default_universe(self):
        return FULL


@dataclass(frozen=True)
class FullBox(Region):
    """[-m, m]^(d-1) x [-n, n] in the full lattice."""

    m: int = 1
    n: int = 1

    def site_list(self):
        side = range(-self.m, self.m + 1)
        return [
            t + (h,)
            for t in product(side, repeat=self.d - 1)
            for h in range(-self.n, self.n + 1)
        ]

    def cardinality(self):
        return (2 * self.m + 1) ** (self.d - 1) * (2 * self.n + 1)

    def default_universe(self):
        return FULL


@dataclass(frozen=True)
class Explicit(Region):
    """An explicit finite site set."""

    site_set: frozenset = field(default_factory=frozenset)

    def __init__(self, sites, d=None):
        sites = frozenset(tuple(s) for s in sites)
        if d is None:
            if not sites:
                raise ValueError("empty Explicit region needs explicit d")
            d = len(next(iter(sites)))
        for s in sites:
            if len(s) != d:
                raise ValueError("inconsistent site dimensions")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "site_set", sites)

    def site_list(self):
        return list(self.site_set)

    def cardinality(self):
        return len(self.site_set)


def sites_of(region, cap=DEFAULT_SITE_CAP):
    """Deterministic (lexicographic) site list of a region."""
    return region.sites(cap=cap)


def wall_sites(region):
    """Sites of the region on the wall layer i_d = 1 (derived, never stored)."""
    return [s for s in sites_of(region) if s[-1] == 1]


def boundary_edges(region, universe=None):
    """All edges with at least one endpoint in the region, split into
    (interior, frontier).  Edges are frozensets of sites; frontier edges have
    exactly one endpoint outside the region."""
    if universe is None:
        universe = region.default_universe()
    inside = set(sites_of(region))
    interior, frontier = set(), set()
    for s in inside:
        for nb in neighbors(s, universe):
            e = frozenset((s, nb))
            if nb in inside:
                interior.add(e)
            else:
                frontier.add(e)
    return interior, frontier


PLUS = "plus"
MINUS = "minus"
MINUS_PLUS = "minus_plus"
FREE = "free"
FIXED = "fixed"


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str = PLUS
    values: dict = None

    def spin_at(self, site):
        """Frozen exterior spin at ``site``; None means the frontier edge is
        dropped (free boundary)."""
        if self.kind == PLUS:
            return 1
        if self.kind == MINUS:
            return -1
        if self.kind == MINUS_PLUS:
            return -1 if site[-1] >= 1 else 1
        if self.kind == FREE:
            return None
        if self.kind == FIXED:
            if self.values is None or site not in self.values:
                raise ConfigurationError(f"no fixed boundary spin at {site}")
            return self.values[site]
        raise ValueError(f"unknown boundary kind {self.kind!r}")


def plus_bc():
    return BoundaryCondition(PLUS)


def minus_bc():
    return BoundaryCondition(MINUS)


def minus_plus_bc():
    return BoundaryCondition(MINUS_PLUS)


def free_bc():
    return BoundaryCondition(FREE)


def fixed_bc(values):
    return BoundaryCondition(FIXED, dict(values))
