"""Random-cluster model with space-dependent fields, the Edwards-Sokal
coupling, generalized Swendsen-Wang sampling, and exhaustive desk-scale
verifiers for the graphical equivalences.

A ``ClusterModel`` carries effective (inverse-temperature-scaled) couplings
K_e and fields g_i.  Vertices split into free interior vertices, frozen-spin
ghosts (Edwards-Sokal spin boundaries), and an optional wired attachment: the
listed interior vertices are permanently connected to a single point at
infinity whose cluster field sum is +infinity, so its cluster weight factor
collapses to 1 (the e^(-inf) = 0 convention).
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import lattice, model
from .errors import CapacityError, ConditioningError, ConfigurationError

EDGE_ENUM_CAP = 20
_SOFTPLUS_CUT = 700.0


class UnionFind:
    """Disjoint-set forest with union by size and path compression."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def groups(self):
        out = {}
        for k in range(len(self.parent)):
            out.setdefault(self.find(k), []).append(k)
        return list(out.values())


@dataclass
class ClusterModel:
    """Finite RC/ES system: free vertices 0..n_free-1 with fields ``g``,
    ghost vertices n_free.. with frozen spins, edges with couplings ``K``."""

    n_free: int
    g: np.ndarray
    edges: list
    K: np.ndarray
    ghost_spins: np.ndarray = dc_field(default_factory=lambda: np.zeros(0, dtype=np.int8))
    wired_vertices: tuple = ()
    sites: list = None    # optional site labels for the free vertices

    @property
    def n_vertices(self):
        return self.n_free + len(self.ghost_spins)

    @property
    def n_edges(self):
        return len(self.edges)

    @classmethod
    def from_instance(cls, instance):
        """Effective graphical system of a spin model instance: couplings and
        fields are multiplied by beta; frozen boundary spins become ghosts."""
        am = model.assemble(instance)
        beta = instance.beta
        edges = [(int(a), int(b)) for a, b in am.edges]
        K = list(beta * am.edge_J)
        g = beta * np.array(
            [model.field_at(instance.field, s) for s in am.sites]
        )
        ghost_index = {}
        ghost_spins = []
        for inside, outside, J in am.frontier:
            if outside not in ghost_index:
                ghost_index[outside] = am.n_sites + len(ghost_spins)
                ghost_spins.append(instance.bc.spin_at(outside))
            edges.append((inside, ghost_index[outside]))
            K.append(beta * J)
        return cls(
            n_free=am.n_sites, g=g, edges=edges,
            K=np.array(K, dtype=np.float64),
            ghost_spins=np.array(ghost_spins, dtype=np.int8),
            sites=am.sites,
        )

    def clusters(self, open_bits):
        """Connected components under the open edges; the wired attachment is
        one extra virtual vertex at index n_vertices."""
        extra = 1 if self.wired_vertices else 0
        uf = UnionFind(self.n_vertices + extra)
        for v in self.wired_vertices:
            uf.union(self.n_vertices, v)
        for bit, (a, b) in zip(open_bits, self.edges):
            if bit:
                uf.union(a, b)
        return uf


def _softplus(x):
    # log(1 + e^x), stable for large |x|
    if x > _SOFTPLUS_CUT:
        return x
    return float(np.log1p(np.exp(x)))


def rc_log_weight(open_bits, cm, signed_ok=False):
    """Log of the unnormalized random-cluster weight: the product of
    (e^(2K_e) - 1) over open edges times the per-cluster field factors."""
    if not signed_ok and np.any(cm.g < 0):
        raise ConfigurationError("negative fields need signed_ok=True")
    logw = 0.0
    for bit, k in zip(open_bits, cm.K):
        if bit:
            if k <= 0:
                return -np.inf
            logw += float(np.log(np.expm1(2.0 * k)))

    uf = cm.clusters(open_bits)
    infinity = cm.n_vertices if cm.wired_vertices else None
    for comp in uf.groups():
        if infinity is not None and any(v == infinity for v in comp):
            continue  # wired cluster: field sum +inf, factor 1
        spins = {int(cm.ghost_spins[v - cm.n_free]) for v in comp if v >= cm.n_free}
        s = float(sum(cm.g[v] for v in comp if v < cm.n_free))
        if len(spins) == 2:
            return -np.inf  # cluster pinned to both boundary signs
        if spins == {1}:
            continue  # factor e^((+1-1)S) = 1
        if spins == {-1}:
            logw += -2.0 * s
            continue
        logw += _softplus(-2.0 * s)
    return logw


def rc_weight(open_bits, cm, signed_ok=False):
    return float(np.exp(rc_log_weight(open_bits, cm, signed_ok=signed_ok)))


def all_edge_configs(n_edges):
    if n_edges > EDGE_ENUM_CAP:
        raise CapacityError(f"{n_edges} edges exceeds cap {EDGE_ENUM_CAP}")
    idx = np.arange(1 << n_edges, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n_edges)[None, :]) & 1).astype(np.int8)


def rc_exact_distribution(cm, signed_ok=False):
    """Normalized probabilities over all 2^|E| edge configurations."""
    configs = all_edge_configs(cm.n_edges)
    logw = np.array([
        rc_log_weight(bits, cm, signed_ok=signed_ok) for bits in configs
    ])
    mx = np.max(logw)
    w = np.exp(logw - mx)
    return configs, w / np.sum(w)


# ---------------------------------------------------------------------------
# Edwards-Sokal joint measure

def _vertex_spin(cm, spins, v):
    if v < cm.n_free:
        return int(spins[v])
    return int(cm.ghost_spins[v - cm.n_free])


def es_log_weight(spins, open_bits, cm):
    """Log Edwards-Sokal weight: agreement deltas times (e^(2K)-1) on open
    edges, times e^(g_i sigma_i) over free vertices; -inf when an open edge
    joins disagreeing spins."""
    logw = 0.0
    for bit, (a, b), k in zip(open_bits, cm.edges, cm.K):
        if bit:
            if _vertex_spin(cm, spins, a) != _vertex_spin(cm, spins, b):
                return -np.inf
            if k <= 0:
                return -np.inf
            logw += float(np.log(np.expm1(2.0 * k)))
    logw += float(np.dot(cm.g, spins))
    return logw


def es_weight(spins, open_bits, cm):
    return float(np.exp(es_log_weight(spins, open_bits, cm)))


def es_joint_distribution(cm):
    """Exact normalized ES joint over (spin, edge) configurations for desk
    scale instances; returns (spin_configs, edge_configs, prob_matrix)."""
    if cm.n_free > EDGE_ENUM_CAP or cm.n_edges > EDGE_ENUM_CAP:
        raise CapacityError("ES joint enumeration cap exceeded")
    sidx = np.arange(1 << cm.n_free, dtype=np.int64)
    spin_configs = (
        2 * ((sidx[:, None] >> np.arange(cm.n_free)[None, :]) & 1) - 1
    ).astype(np.int8)
    edge_configs = all_edge_configs(cm.n_edges)
    logw = np.full((len(spin_configs), len(edge_configs)), -np.inf)
    for i, spins in enumerate(spin_configs):
        for j, bits in enumerate(edge_configs):
            logw[i, j] = es_log_weight(spins, bits, cm)
    mx = np.max(logw)
    w = np.exp(logw - mx)
    return spin_configs, edge_configs, w / np.sum(w)


# ---------------------------------------------------------------------------
# conditional samplers and the generalized Swendsen-Wang step

def sample_edges_given_spins(spins, cm, rng):
    """Draw edges from the ES conditional: an edge between agreeing spins
    opens with probability 1 - e^(-2K_e), otherwise stays closed."""
    bits = np.zeros(cm.n_edges, dtype=np.int8)
    u = rng.random(cm.n_edges)
    for e, (a, b) in enumerate(cm.edges):
        if _vertex_spin(cm, spins, a) == _vertex_spin(cm, spins, b):
            if u[e] < -np.expm1(-2.0 * cm.K[e]):
                bits[e] = 1
    return bits


def sample_spins_given_edges(open_bits, cm, rng):
    """Draw spins from the ES conditional: constant on clusters; a free
    cluster with field sum S takes +1 with probability e^S / (2 cosh S);
    boundary-touching clusters inherit the boundary spin."""
    uf = cm.clusters(open_bits)
    spins = np.zeros(cm.n_free, dtype=np.int8)
    for comp in uf.groups():
        if cm.wired_vertices and any(v == cm.n_vertices for v in comp):
            raise ConditioningError("wired cluster has no spin conditional")
        frozen = {int(cm.ghost_spins[v - cm.n_free]) for v in comp if cm.n_free <= v < cm.n_vertices}
        free = [v for v in comp if v < cm.n_free]
        if len(frozen) == 2:
            raise ConditioningError(
                "cluster touches both +1 and -1 boundary spins"
            )
        if frozen:
            val = frozen.pop()
        else:
            if not free:
                continue
            s = float(sum(cm.g[v] for v in free))
            p_plus = 1.0 / (1.0 + np.exp(-2.0 * s))
            val = 1 if rng.random() < p_plus else -1
        for v in free:
            spins[v] = val
    return spins


def sw_step(spins, cm, rng):
    """One generalized Swendsen-Wang step: edges given spins, then spins
    given edges.  Preserves the Gibbs spin measure of the instance the model
    was built from."""
    bits = sample_edges_given_spins(spins, cm, rng)
    return sample_spins_given_edges(bits, cm, rng)


def sw_transition_matrix(cm):
    """Exact one-step transition operator of sw_step over the 2^n spin
    configurations (desk scale only)."""
    if cm.n_free > 12 or cm.n_edges > EDGE_ENUM_CAP:
        raise CapacityError("transition-matrix cap exceeded")
    n = cm.n_free
    sidx = np.arange(1 << n, dtype=np.int64)
    spin_configs = (
        2 * ((sidx[:, None] >> np.arange(n)[None, :]) & 1) - 1
    ).astype(np.int8)
    config_index = {tuple(s): i for i, s in enumerate(spin_configs)}

    p_open = -np.expm1(-2.0 * cm.K)
    P = np.zeros((len(spin_configs), len(spin_configs)))
    for i, spins in enumerate(spin_configs):
        agree = [
            e for e, (a, b) in enumerate(cm.edges)
            if _vertex_spin(cm, spins, a) == _vertex_spin(cm, spins, b)
        ]
        for mask in range(1 << len(agree)):
            bits = np.zeros(cm.n_edges, dtype=np.int8)
            p_edges = 1.0
            for t, e in enumerate(agree):
                if (mask >> t) & 1:
                    bits[e] = 1
                    p_edges *= p_open[e]
                else:
                    p_edges *= 1.0 - p_open[e]
            if p_edges == 0.0:
                continue
            uf = cm.clusters(bits)
            comps = []
            for comp in uf.groups():
                frozen = {
                    int(cm.ghost_spins[v - cm.n_free])
                    for v in comp if cm.n_free <= v < cm.n_vertices
                }
                free = [v for v in comp if v < cm.n_free]
                if not free:
                    continue
                if len(frozen) == 2:
                    raise ConditioningError("contradictory boundary cluster")
                s = float(sum(cm.g[v] for v in free))
                p_plus = (
                    1.0 if frozen == {1}
                    else 0.0 if frozen == {-1}
                    else 1.0 / (1.0 + np.exp(-2.0 * s))
                )
                comps.append((free, p_plus))
            for j, target in enumerate(spin_configs):
                p = p_edges
                for free, p_plus in comps:
                    vals = {int(target[v]) for v in free}
                    if len(vals) > 1:
                        p = 0.0
                        break
                    p *= p_plus if vals == {1} else 1.0 - p_plus
                P[i, j] += p
    return spin_configs, P


def rc_heat_bath_edge(open_bits, edge_index, cm, rng, signed_ok=False):
    """Resample one edge from its exact RC conditional given all others."""
    bits = np.array(open_bits, dtype=np.int8)
    bits[edge_index] = 1
    lw_open = rc_log_weight(bits, cm, signed_ok=signed_ok)
    bits[edge_index] = 0
    lw_closed = rc_log_weight(bits, cm, signed_ok=signed_ok)
    if lw_open == -np.inf:
        return bits
    p_open = 1.0 / (1.0 + np.exp(lw_closed - lw_open))
    bits[edge_index] = 1 if rng.random() < p_open else 0
    return bits


def rc_edge_sweep(open_bits, cm, rng, signed_ok=False):
    bits = np.array(open_bits, dtype=np.int8)
    for e in range(cm.n_edges):
        bits = rc_heat_bath_edge(bits, e, cm, rng, signed_ok=signed_ok)
    return bits


# ---------------------------------------------------------------------------
# monotonicity and domination verifiers

@dataclass
class MarginReport:
    name: str
    passed: bool
    worst_margin: float
    witness: str = ""

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        out = f"{status} {self.name}: worst margin {self.worst_margin:.3e}"
        if self.witness:
            out += f" at {self.witness}"
        return out


def rc_expectation(cm, event, signed_ok=False):
    configs, probs = rc_exact_distribution(cm, signed_ok=signed_ok)
    vals = np.array([float(event(bits)) for bits in configs])
    return float(np.dot(vals, probs))


def random_increasing_edge_event(rng, n_edges):
    """Indicator that some random edge subset is fully open (a union of up to
    three such clauses); increasing in the partial order on configurations."""
    n_clauses = int(rng.integers(1, 4))
    clauses = [
        rng.choice(n_edges, size=int(rng.integers(1, max(2, n_edges // 2 + 1))),
                   replace=False)
        for _ in range(n_clauses)
    ]

    def event(bits):
        return any(np.all(bits[c] == 1) for c in clauses)

    return event


def compare_rc_in_J(cm_low, cm_high, events, slack=1e-12):
    """Exact check that RC expectations of increasing events are ordered when
    the couplings are ordered edgewise (same graph, fields, boundary)."""
    if np.any(cm_low.K > cm_high.K + 1e-15):
        raise ConfigurationError("couplings are not ordered edgewise")
    worst = np.inf
    witness = ""
    for k, event in enumerate(events):
        lo = rc_expectation(cm_low, event)
        hi = rc_expectation(cm_high, event)
        if hi - lo < worst:
            worst = hi - lo
            witness = f"event {k}"
    return MarginReport(
        name="rc_monotone_in_J", passed=worst >= -slack,
        worst_margin=float(worst), witness=witness,
    )


def free_wired_domination(cm_free, cm_wired, events, slack=1e-12):
    """phi^0(f) <= phi^1(f) for increasing events, exactly, on small sets."""
    worst = np.inf
    witness = ""
    for k, event in enumerate(events):
        lo = rc_expectation(cm_free, event)
        hi = rc_expectation(cm_wired, event)
        if hi - lo < worst:
            worst = hi - lo
            witness = f"event {k}"
    return MarginReport(
        name="free_le_wired", passed=worst >= -slack,
        worst_margin=float(worst), witness=witness,
    )


def rc_fkg_check(cm, trials, rng_seed=0, slack=1e-12):
    """Positive association of random increasing edge events under the exact
    RC measure."""
    configs, probs = rc_exact_distribution(cm)
    rng = np.random.default_rng(rng_seed)
    worst = np.inf
    for _ in range(trials):
        f = random_increasing_edge_event(rng, cm.n_edges)
        g = random_increasing_edge_event(rng, cm.n_edges)
        fv = np.array([float(f(b)) for b in configs])
        gv = np.array([float(g(b)) for b in configs])
        margin = float(
            np.dot(probs, fv * gv) - np.dot(probs, fv) * np.dot(probs, gv)
        )
        worst = min(worst, margin)
    return MarginReport(
        name="rc_fkg", passed=worst >= -slack, worst_margin=float(worst),
    )


# ---------------------------------------------------------------------------
# percolation proxy

def percolation_proxy(J, field, beta, radii, samples, seed=0, burn_in=50,
                      d=2, box_pad=1):
    """Monte Carlo estimates of the probability that the origin connects to
    the Chebyshev-distance-R shell under the wired (plus-boundary) ES edge
    marginal; a finite stand-in for the infinite-cluster probability."""
    if d != 2:
        raise ConfigurationError("percolation proxy is d=2 only")
    radii = sorted(int(r) for r in radii)
    L = radii[-1] + box_pad
    region = lattice.Explicit(
        {(x, y) for x in range(-L, L + 1) for y in range(-L, L + 1)}, d=2
    )
    instance = model.ModelInstance(
        region=region, bc=lattice.plus_bc(), couplings=model.Uniform(J),
        field=field, beta=beta, universe=lattice.FULL,
    )
    cm = ClusterModel.from_instance(instance)
    origin = cm.sites.index((0, 0))
    shells = {
        r: [k for k, s in enumerate(cm.sites) if max(abs(s[0]), abs(s[1])) == r]
        for r in radii
    }

    rng = np.random.default_rng(seed)
    spins = np.array(
        [1] * cm.n_free, dtype=np.int8
    )
    hits = {r: 0 for r in radii}
    for k in range(burn_in + samples):
        spins = sw_step(spins, cm, rng)
        if k < burn_in:
            continue
        bits = sample_edges_given_spins(spins, cm, rng)
        uf = cm.clusters(bits)
        root = uf.find(origin)
        for r in radii:
            if r == 0 or any(uf.find(v) == root for v in shells[r]):
                hits[r] += 1
    return {r: hits[r] / samples for r in radii}
