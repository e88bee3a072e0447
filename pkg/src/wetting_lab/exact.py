"""Exhaustive-enumeration oracle: exact partition functions, expectations,
finite-volume surface/wall/interface free energies, the coupling-interpolation
identity, and certified correlation-inequality checks.

Everything here returns the finite-box quantity inside the defining limit,
never an extrapolation.  Enumeration is vectorized over chunks of the
configuration index space and log-sum-exp stabilized.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import lattice, model
from .errors import CapacityError, ConfigurationError

ENUM_CAP = 24          # sites; 2^24 = 16.7M configurations
_CHUNK = 1 << 18


# ---------------------------------------------------------------------------
# low-level enumeration

@dataclass
class RawModel:
    """A bare quadratic-plus-linear energy functional on n spins:
    exponent X(sigma) = sum_e w_e sigma_a sigma_b + sum_i c_i sigma_i,
    weight exp(beta * X)."""

    n_sites: int
    edges: np.ndarray
    edge_J: np.ndarray
    linear: np.ndarray

    @classmethod
    def from_assembled(cls, am):
        return cls(am.n_sites, am.edges, am.edge_J, am.linear)


def _chunk_spins(lo, hi, n):
    idx = np.arange(lo, hi, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (2 * bits - 1).astype(np.float64)


def _exponent(raw, spins, beta):
    x = spins @ raw.linear
    if len(raw.edges):
        x = x + (spins[:, raw.edges[:, 0]] * spins[:, raw.edges[:, 1]]) @ raw.edge_J
    return beta * x


def raw_stats(raw, beta, mags=False, pairs=False, functional=None,
              product_sites=None):
    """Exact log partition function and optional expectations.

    functional: optional (edges, edge_w, linear) triple; its Gibbs mean is
    returned under key 'functional'.
    product_sites: site-index list; mean of the spin product is returned
    under key 'product'.
    """
    n = raw.n_sites
    if n > ENUM_CAP:
        raise CapacityError(f"{n} sites exceeds the enumeration cap {ENUM_CAP}")
    total = 1 << n

    xmax = -np.inf
    for lo in range(0, total, _CHUNK):
        spins = _chunk_spins(lo, min(lo + _CHUNK, total), n)
        xmax = max(xmax, float(np.max(_exponent(raw, spins, beta))))

    z = 0.0
    mag_acc = np.zeros(n) if mags else None
    pair_acc = np.zeros((n, n)) if pairs else None
    fun_acc = 0.0
    prod_acc = 0.0
    for lo in range(0, total, _CHUNK):
        spins = _chunk_spins(lo, min(lo + _CHUNK, total), n)
        w = np.exp(_exponent(raw, spins, beta) - xmax)
        z += float(np.sum(w))
        if mags:
            mag_acc += w @ spins
        if pairs:
            pair_acc += spins.T @ (spins * w[:, None])
        if functional is not None:
            fe, fw, fl = functional
            t = spins @ fl
            if len(fe):
                t = t + (spins[:, fe[:, 0]] * spins[:, fe[:, 1]]) @ fw
            fun_acc += float(np.dot(t, w))
        if product_sites is not None:
            p = np.prod(spins[:, product_sites], axis=1)
            prod_acc += float(np.dot(p, w))

    out = {"log_partition": np.log(z) + xmax}
    if mags:
        out["mags"] = mag_acc / z
    if pairs:
        out["pairs"] = pair_acc / z
    if functional is not None:
        out["functional"] = fun_acc / z
    if product_sites is not None:
        out["product"] = prod_acc / z
    return out


def full_distribution(raw, beta, cap=20):
    """Normalized probability vector over all 2^n configurations, plus the
    matching +-1 spin matrix.  Only for small instances."""
    n = raw.n_sites
    if n > cap:
        raise CapacityError(f"{n} sites exceeds the distribution cap {cap}")
    spins = _chunk_spins(0, 1 << n, n)
    x = _exponent(raw, spins, beta)
    w = np.exp(x - np.max(x))
    return w / np.sum(w), spins


# ---------------------------------------------------------------------------
# instance-level API

class ExactState:
    """Exact Gibbs state of one enumerable instance, with cached marginals."""

    def __init__(self, instance):
        self.instance = instance
        self.assembled = model.assemble(instance)
        self.raw = RawModel.from_assembled(self.assembled)
        self._stats = None
        self._pairs = None

    def _ensure(self):
        if self._stats is None:
            self._stats = raw_stats(self.raw, self.instance.beta, mags=True)

    @property
    def log_partition(self):
        self._ensure()
        return self._stats["log_partition"]

    @property
    def magnetizations(self):
        self._ensure()
        return self._stats["mags"]

    def magnetization(self, site):
        return self.magnetizations[self.assembled.index[tuple(site)]]

    @property
    def pair_matrix(self):
        if self._pairs is None:
            self._pairs = raw_stats(
                self.raw, self.instance.beta, pairs=True
            )["pairs"]
        return self._pairs

    def pair_correlation(self, site_a, site_b):
        ia = self.assembled.index[tuple(site_a)]
        ib = self.assembled.index[tuple(site_b)]
        return self.pair_matrix[ia, ib]

    def layer_profile(self):
        """Mean magnetization per layer i_d, averaged over the cross-section."""
        layers = {}
        for s, m in zip(self.assembled.sites, self.magnetizations):
            layers.setdefault(s[-1], []).append(m)
        return {ell: float(np.mean(v)) for ell, v in sorted(layers.items())}


def exact_state(instance):
    return ExactState(instance)


def log_partition(instance):
    raw = RawModel.from_assembled(model.assemble(instance))
    return raw_stats(raw, instance.beta)["log_partition"]


def expectation(instance, sites):
    """Exact Gibbs expectation of a product of spins over ``sites``."""
    am = model.assemble(instance)
    idx = [am.index[tuple(s)] for s in sites]
    return raw_stats(
        RawModel.from_assembled(am), instance.beta, product_sites=idx
    )["product"]


# ---------------------------------------------------------------------------
# finite-volume free energies

def _wall_area(n, d):
    return (2 * n + 1) ** (d - 1)


def _semi_instance(n, m, sign, couplings, field, lam, beta, d):
    bc = lattice.plus_bc() if sign == "plus" else lattice.minus_bc()
    full_field = field if lam == 0 else model.SumField(field, model.WallOnly(lam))
    return model.ModelInstance(
        region=lattice.SemiBox(d=d, n=n, m=m), bc=bc,
        couplings=couplings, field=full_field, beta=beta,
    )


def finite_surface_free_energy(n, sign, couplings, field, lam=0.0, beta=1.0,
                               d=2, reflection="mirror"):
    """Finite-n surface free energy:
    -(1/(2|W_n|)) * ln[ Z_{n;lam,h}^sign ** 2 / Q_{Delta_n;0}^sign ]."""
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    log_z = log_partition(_semi_instance(n, n, sign, couplings, field, lam, beta, d))
    bc = lattice.plus_bc() if sign == "plus" else lattice.minus_bc()
    ising = model.ModelInstance(
        region=lattice.ExtendedBox(d=d, n=n, reflection=reflection), bc=bc,
        couplings=couplings, field=model.Zero(), beta=beta,
    )
    log_q = log_partition(ising)
    return -(2.0 * log_z - log_q) / (2.0 * _wall_area(n, d))


def finite_wall_free_energy(n, couplings, field, lam=0.0, beta=1.0, d=2,
                            m=None):
    """Finite-n wall free energy -(1/|W_n|) * ln[Z^- / Z^+] on SemiBox(n, m)."""
    if m is None:
        m = n
    log_minus = log_partition(_semi_instance(n, m, "minus", couplings, field, lam, beta, d))
    log_plus = log_partition(_semi_instance(n, m, "plus", couplings, field, lam, beta, d))
    return -(log_minus - log_plus) / _wall_area(n, d)


def finite_interface_free_energy(m, n, J, beta=1.0, d=2):
    """Finite-volume interface free energy
    -(1/|W_m|) * ln[Q^{-+} / Q^{+}] on the full box [-m,m]^{d-1} x [-n,n]."""
    region = lattice.FullBox(d=d, m=m, n=n)
    couplings = model.Uniform(J)
    args = dict(region=region, couplings=couplings, field=model.Zero(), beta=beta)
    log_mp = log_partition(model.ModelInstance(bc=lattice.minus_plus_bc(), **args))
    log_p = log_partition(model.ModelInstance(bc=lattice.plus_bc(), **args))
    return -(log_mp - log_p) / _wall_area(m, d)


# ---------------------------------------------------------------------------
# interpolation identity for the surface free energy

@dataclass
class QuadratureReport:
    direct: float
    quadrature: float
    nodes: int

    @property
    def gap(self):
        return abs(self.direct - self.quadrature)


def _xi_raw(n, J, field, d, t):
    """RawModel of the interpolated extended-box system at parameter t.

    At t=0 this is the plus-boundary Ising model on Delta_n with no field;
    at t=1 the wall-crossing vertical couplings are removed and the mirrored
    field is fully switched on, so the partition function equals the squared
    semi-infinite one."""
    region = lattice.ExtendedBox(d=d, n=n, reflection="mirror")
    instance = model.ModelInstance(
        region=region, bc=lattice.plus_bc(), couplings=model.Uniform(J),
        field=model.Zero(), beta=1.0,
    )
    am = model.assemble(instance)
    mirrored = model.Mirrored(field)
    edge_w = am.edge_J.copy()
    cross = np.array([
        am.sites[a][-1] + am.sites[b][-1] == 1
        for a, b in am.edges
    ])
    edge_w[cross] = am.edge_J[cross] * (1.0 - t)
    linear = am.linear + t * np.array(
        [model.field_at(mirrored, s) for s in am.sites]
    )
    pert_edges = am.edges[cross]
    pert_w = -am.edge_J[cross]
    pert_linear = np.array([model.field_at(mirrored, s) for s in am.sites])
    raw = RawModel(am.n_sites, am.edges, edge_w, linear)
    return raw, (pert_edges, pert_w, pert_linear)


def interpolated_log_ratio(n, couplings, field, beta=1.0, d=2, t_grid=None,
                           gauss_nodes=64):
    """ln Xi_n(1) - ln Xi_n(0) computed directly and by quadrature of the
    exact integrand; returns both and their gap.

    With t_grid=None a Gauss-Legendre rule with ``gauss_nodes`` nodes is
    used; an explicit grid (>= 2 nodes in [0, 1]) selects the trapezoid rule.
    """
    if not isinstance(couplings, model.Uniform):
        raise ConfigurationError("interpolation identity needs a uniform coupling")
    J = couplings.J

    raw1, _ = _xi_raw(n, J, field, d, 1.0)
    raw0, _ = _xi_raw(n, J, field, d, 0.0)
    direct = (
        raw_stats(raw1, beta)["log_partition"]
        - raw_stats(raw0, beta)["log_partition"]
    )

    def integrand(t):
        raw, pert = _xi_raw(n, J, field, d, t)
        mean = raw_stats(raw, beta, functional=pert)["functional"]
        return beta * mean

    if t_grid is None:
        x, w = np.polynomial.legendre.leggauss(gauss_nodes)
        nodes = 0.5 * (x + 1.0)
        weights = 0.5 * w
        quad = float(sum(wk * integrand(tk) for tk, wk in zip(nodes, weights)))
        n_nodes = gauss_nodes
    else:
        t_grid = sorted(float(t) for t in t_grid)
        if len(t_grid) < 2:
            raise ConfigurationError("t_grid needs at least 2 nodes")
        vals = [integrand(t) for t in t_grid]
        quad = float(np.trapezoid(vals, t_grid))
        n_nodes = len(t_grid)
    return QuadratureReport(direct=direct, quadrature=quad, nodes=n_nodes)


# ---------------------------------------------------------------------------
# inequality checks

@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_margin: float
    details: dict = dc_field(default_factory=dict)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst margin {self.worst_margin:.3e}"


def random_increasing_function(rng, n_sites, plus):
    """A random monotone Boolean function: max over a few random site subsets
    of the min of eta = (sigma+1)/2 over the subset.  ``plus`` is the boolean
    (configs, sites) matrix of sigma > 0."""
    n_clauses = int(rng.integers(1, 4))
    out = np.zeros(plus.shape[0], dtype=bool)
    for _ in range(n_clauses):
        size = int(rng.integers(1, max(2, n_sites // 2 + 1)))
        subset = rng.choice(n_sites, size=size, replace=False)
        out |= np.all(plus[:, subset], axis=1)
    return out.astype(np.float64)


def check_fkg(instance, trials=200, rng_seed=0, slack=1e-12):
    """Positive association of random increasing pairs under the exact Gibbs
    measure; requires a non-negative field."""
    am = model.assemble(instance)
    if not model.field_is_nonnegative(instance.field, am.sites):
        raise ConfigurationError("check_fkg needs a non-negative field")
    probs, spins = full_distribution(
        RawModel.from_assembled(am), instance.beta
    )
    plus = spins > 0
    rng = np.random.default_rng(rng_seed)
    worst = np.inf
    for _ in range(trials):
        f = random_increasing_function(rng, am.n_sites, plus)
        g = random_increasing_function(rng, am.n_sites, plus)
        margin = float(
            np.dot(probs, f * g) - np.dot(probs, f) * np.dot(probs, g)
        )
        worst = min(worst, margin)
    return CheckReport(
        name="fkg", passed=worst >= -slack, worst_margin=worst,
        details={"trials": trials},
    )


def _plus_minus_states(region, couplings, field, beta, universe=None):
    mk = lambda bc: ExactState(model.ModelInstance(
        region=region, bc=bc, couplings=couplings, field=field, beta=beta,
        universe=universe,
    ))
    return mk(lattice.plus_bc()), mk(lattice.minus_bc())


def check_dvi(region, couplings, field, beta=1.0, slack=1e-12, universe=None):
    """Duplicated-variable consequences: for all site pairs,
    <s_i s_j>^- <= <s_i s_j>^+ and the reversed ordering of the truncated
    correlations."""
    plus, minus = _plus_minus_states(region, couplings, field, beta, universe)
    cp, cm = plus.pair_matrix, minus.pair_matrix
    mp, mm = plus.magnetizations, minus.magnetizations
    raw_margin = cp - cm                              # must be >= 0
    trunc_margin = (cm - np.outer(mm, mm)) - (cp - np.outer(mp, mp))
    worst = float(min(np.min(raw_margin), np.min(trunc_margin)))
    return CheckReport(
        name="dvi", passed=worst >= -slack, worst_margin=worst,
        details={
            "worst_raw": float(np.min(raw_margin)),
            "worst_truncated": float(np.min(trunc_margin)),
            "pairs": int(cp.size),
        },
    )


def check_gap_monotone_in_field(region, couplings, base_field, site_i, site_j,
                                h_grid, beta=1.0, slack=1e-12, universe=None):
    """The plus/minus magnetization gap at site_i is non-increasing in the
    field value at site_j."""
    site_j = tuple(site_j)
    gaps = []
    for h in h_grid:
        if h < 0:
            raise ConfigurationError("h_grid must be non-negative")
        f = model.SumField(base_field, model.PointField(site_j, float(h)))
        plus, minus = _plus_minus_states(region, couplings, f, beta, universe)
        gaps.append(plus.magnetization(site_i) - minus.magnetization(site_i))
    diffs = np.diff(gaps)
    worst = float(-np.max(diffs)) if len(diffs) else 0.0
    return CheckReport(
        name="gap_monotone_in_field", passed=np.all(diffs <= slack),
        worst_margin=worst, details={"gaps": [float(g) for g in gaps]},
    )


def check_tau_concavity_and_monotonicity(n, J_grid, lam_grid, delta, beta=1.0,
                                         d=2, slack=1e-10, bump=0.1):
    """Prop-level audit of the finite-n wall free energy with the decaying
    field: non-decreasing along J and along single-layer field bumps, concave
    along lambda."""
    J_grid = sorted(J_grid)
    lam_grid = sorted(lam_grid)
    details = {"curves": {}}
    worst = np.inf
    ok = True

    for J in J_grid:
        couplings = model.Uniform(J)
        taus = [
            finite_wall_free_energy(
                n, couplings, model.DecayHat(lam, delta) if lam > 0 else model.Zero(),
                beta=beta, d=d,
            )
            for lam in lam_grid
        ]
        details["curves"][J] = taus
        if len(taus) >= 2:
            inc = np.diff(taus)
            worst = min(worst, float(np.min(inc)))
            # non-decreasing in lambda comes with concavity via the integrand
            ok &= bool(np.all(inc >= -slack))
        if len(taus) >= 3:
            second = np.diff(taus, 2)
            worst = min(worst, float(np.min(-second)))
            ok &= bool(np.all(second <= slack))

    # monotone in J at each lambda
    for lam in lam_grid:
        f = model.DecayHat(lam, delta) if lam > 0 else model.Zero()
        taus = [
            finite_wall_free_energy(n, model.Uniform(J), f, beta=beta, d=d)
            for J in J_grid
        ]
        if len(taus) >= 2:
            inc = np.diff(taus)
            worst = min(worst, float(np.min(inc)))
            ok &= bool(np.all(inc >= -slack))

    # monotone in a single-layer field bump
    lam0 = lam_grid[-1] if lam_grid[-1] > 0 else 0.3
    base = model.DecayHat(lam0, delta)
    for J in J_grid:
        couplings = model.Uniform(J)
        tau0 = finite_wall_free_energy(n, couplings, base, beta=beta, d=d)
        for ell in range(1, n + 1):
            seq = [0.0] * n
            seq[ell - 1] = bump
            bumped = model.SumField(base, model.LayerSequence(seq))
            tau1 = finite_wall_free_energy(n, couplings, bumped, beta=beta, d=d)
            worst = min(worst, float(tau1 - tau0))
            ok &= tau1 - tau0 >= -slack

    if worst == np.inf:
        worst = 0.0
    return CheckReport(
        name="tau_concavity_and_monotonicity", passed=ok, worst_margin=worst,
        details=details,
    )
