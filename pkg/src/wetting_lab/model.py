"""Coupling and field specifications, model instances, and energy evaluation.

The wall influence is never a separate Hamiltonian parameter here: a wall term
of strength lam is expressed as a ``WallOnly(lam)`` summand of the field,
which is exactly the usual folding of the wall coupling into the first layer
of the external field.  The inverse temperature multiplies the full
Hamiltonian at measure level only; ``hamiltonian`` itself returns the bare
energy.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import lattice
from .errors import ConfigurationError


# ---------------------------------------------------------------------------
# couplings

@dataclass(frozen=True)
class Uniform:
    """Nearest-neighbor ferromagnetic coupling J on every edge."""

    J: float

    def value(self, a, b):
        return self.J


@dataclass(frozen=True)
class LayerWeakened:
    """Coupling lam/2 on edges between layer 0 and layers +-1, J elsewhere."""

    J: float
    lam: float

    def value(self, a, b):
        pair = {a[-1], b[-1]}
        if pair == {0, 1} or pair == {-1, 0}:
            return self.lam / 2.0
        return self.J


# ---------------------------------------------------------------------------
# fields

@dataclass(frozen=True)
class Zero:
    def value(self, site):
        return 0.0


@dataclass(frozen=True)
class WallOnly:
    """lam on the wall layer i_d = 1, zero elsewhere."""

    lam: float

    def value(self, site):
        return self.lam if site[-1] == 1 else 0.0


@dataclass(frozen=True)
class DecayHat:
    """h_i = lam * i_d^(-delta) on the half-space."""

    lam: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def value(self, site):
        if site[-1] < 1:
            raise ConfigurationError(
                f"decaying field evaluated below the wall at {site}"
            )
        return self.lam * float(site[-1]) ** (-self.delta)


@dataclass(frozen=True)
class CenteredDecay:
    """h at the origin, h * |i|^(-delta) elsewhere (l1 norm)."""

    h: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def value(self, site):
        r = sum(abs(c) for c in site)
        if r == 0:
            return self.h
        return self.h * float(r) ** (-self.delta)


@dataclass(frozen=True)
class LayerSequence:
    """h_i = seq[i_d - 1]; zero beyond the end of the sequence."""

    seq: tuple

    def __init__(self, seq):
        object.__setattr__(self, "seq", tuple(float(x) for x in seq))

    def value(self, site):
        layer = site[-1]
        if layer < 1:
            raise ConfigurationError(
                f"layer field evaluated below the wall at {site}"
            )
        if layer <= len(self.seq):
            return self.seq[layer - 1]
        return 0.0


@dataclass(frozen=True)
class Mirrored:
    """Natural extension of a half-space field to the full lattice:
    sites below the wall take the value of their mirror image -i + e_d."""

    base: object

    def value(self, site):
        if site[-1] >= 1:
            return self.base.value(site)
        return self.base.value(lattice.mirror_site(site))


@dataclass(frozen=True)
class PointField:
    """A field supported on a single site; used to perturb one h_j."""

    site: tuple
    h: float

    def value(self, site):
        return self.h if site == self.site else 0.0


@dataclass(frozen=True)
class SumField:
    parts: tuple

    def __init__(self, *parts):
        if len(parts) == 1 and isinstance(parts[0], (list, tuple)):
            parts = tuple(parts[0])
        object.__setattr__(self, "parts", tuple(parts))

    def value(self, site):
        return sum(p.value(site) for p in self.parts)


def field_at(field, site):
    """Field value at a site; always finite for well-formed specs."""
    v = field.value(tuple(site))
    if not math.isfinite(v):
        raise ConfigurationError(f"non-finite field value at {site}")
    return v


def field_is_nonnegative(field, sites):
    return all(field_at(field, s) >= 0.0 for s in sites)


# ---------------------------------------------------------------------------
# model instance and assembly

@dataclass(frozen=True)
class ModelInstance:
    region: object
    bc: lattice.BoundaryCondition
    couplings: object
    field: object
    beta: float = 1.0
    universe: str = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.universe is None:
            object.__setattr__(
                self, "universe", self.region.default_universe()
            )


class AssembledModel:
    """Flat-index arrays for one model instance.

    sites            ordered site list (lexicographic)
    edges            (n_edges, 2) int array of interior edge endpoints
    edge_J           couplings of the interior edges
    linear           per-site h_i + sum over frontier edges of J_ij * eta_j
    frontier         list of (site_index, exterior_site, J) kept for the
                     graphical representation (dropped under free boundary)
    """

    def __init__(self, instance):
        self.instance = instance
        self.sites = lattice.sites_of(instance.region)
        self.index = {s: k for k, s in enumerate(self.sites)}
        interior, frontier = lattice.boundary_edges(
            instance.region, instance.universe
        )

        edges, edge_J = [], []
        for e in sorted(interior, key=sorted):
            a, b = sorted(e)
            edges.append((self.index[a], self.index[b]))
            edge_J.append(instance.couplings.value(a, b))
        self.edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        self.edge_J = np.array(edge_J, dtype=np.float64)

        self.linear = np.array(
            [field_at(instance.field, s) for s in self.sites], dtype=np.float64
        )
        self.frontier = []
        for e in sorted(frontier, key=sorted):
            a, b = e
            if a in self.index:
                inside, outside = a, b
            else:
                inside, outside = b, a
            eta = instance.bc.spin_at(outside)
            if eta is None:
                continue
            J = instance.couplings.value(inside, outside)
            self.linear[self.index[inside]] += J * eta
            self.frontier.append((self.index[inside], outside, J))

        self.n_sites = len(self.sites)

    def energy(self, spins):
        """Bare Hamiltonian of a full interior configuration (+-1 array in
        site order); beta is not applied."""
        spins = np.asarray(spins, dtype=np.float64)
        if spins.shape != (self.n_sites,):
            raise ConfigurationError(
                f"expected {self.n_sites} spins, got shape {spins.shape}"
            )
        e = 0.0
        if len(self.edges):
            e -= float(
                np.sum(self.edge_J * spins[self.edges[:, 0]] * spins[self.edges[:, 1]])
            )
        e -= float(np.dot(self.linear, spins))
        return e

    def local_delta(self, spins, k):
        """H(spins with site k flipped) - H(spins), in O(deg) time."""
        s = spins[k]
        nb = 0.0
        for (a, b), J in zip(self.edges, self.edge_J):
            if a == k:
                nb += J * spins[b]
            elif b == k:
                nb += J * spins[a]
        return 2.0 * s * (nb + self.linear[k])


def assemble(instance):
    return AssembledModel(instance)


def hamiltonian(instance, config):
    """Energy of a configuration given as a dict site -> spin or an array in
    lexicographic site order."""
    am = assemble(instance)
    if isinstance(config, dict):
        try:
            spins = np.array([config[s] for s in am.sites], dtype=np.float64)
        except KeyError as err:
            raise ConfigurationError(f"missing spin at {err.args[0]}") from None
    else:
        spins = np.asarray(config, dtype=np.float64)
    return am.energy(spins)


def local_energy_delta(instance, config, site):
    am = assemble(instance)
    if isinstance(config, dict):
        spins = np.array([config[s] for s in am.sites], dtype=np.float64)
    else:
        spins = np.asarray(config, dtype=np.float64)
    return am.local_delta(spins, am.index[tuple(site)])
