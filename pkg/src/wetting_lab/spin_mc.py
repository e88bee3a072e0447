"""Single-spin-flip Markov chain Monte Carlo on model instances.

Heat-bath updates use the logistic form of the local field and support
shared-uniform coupling of two chains (the monotone sandwich); Metropolis is
available as a cross-check.  Sites are updated in deterministic raster
(lexicographic) order; all randomness comes from a numpy PCG64 generator
seeded explicitly, so runs are bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import lattice, model
from .errors import ConfigurationError, ScheduleError


@njit(cache=True)
def _sweep_heat_bath(spins, nbr, jmat, h, beta, uniforms):
    n = nbr.shape[0]
    deg = nbr.shape[1]
    for k in range(n):
        loc = h[k]
        for t in range(deg):
            loc += jmat[k, t] * spins[nbr[k, t]]
        p_plus = 1.0 / (1.0 + np.exp(-2.0 * beta * loc))
        spins[k] = 1 if uniforms[k] < p_plus else -1


@njit(cache=True)
def _sweep_metropolis(spins, nbr, jmat, h, beta, uniforms):
    n = nbr.shape[0]
    deg = nbr.shape[1]
    for k in range(n):
        loc = h[k]
        for t in range(deg):
            loc += jmat[k, t] * spins[nbr[k, t]]
        d_e = 2.0 * spins[k] * loc
        if d_e <= 0.0 or uniforms[k] < np.exp(-beta * d_e):
            spins[k] = -spins[k]


_KERNELS = {"heat_bath": _sweep_heat_bath, "metropolis": _sweep_metropolis}


class MCSetup:
    """Flat neighbor tables for the sweep kernels.

    The spin array has length n_sites + n_frozen + 1: interior sites first,
    then frozen boundary spins, then one always-zero ghost absorbing dropped
    (free-boundary) and padding slots.
    """

    def __init__(self, instance):
        self.instance = instance
        sites = lattice.sites_of(instance.region)
        index = {s: k for k, s in enumerate(sites)}
        self.sites = sites
        self.index = index
        d = instance.region.d
        deg = 2 * d

        frozen_index = {}
        frozen_values = []
        n = len(sites)
        nbr = np.zeros((n, deg), dtype=np.int64)
        jmat = np.zeros((n, deg), dtype=np.float64)
        zero_ghost = None  # assigned once counts are known

        rows = []
        for s in sites:
            row = []
            for nb in sorted(lattice.neighbors(s, instance.universe)):
                if nb in index:
                    row.append((index[nb], instance.couplings.value(s, nb)))
                else:
                    eta = instance.bc.spin_at(nb)
                    if eta is None:
                        continue
                    if nb not in frozen_index:
                        frozen_index[nb] = n + len(frozen_values)
                        frozen_values.append(eta)
                    row.append((frozen_index[nb], instance.couplings.value(s, nb)))
            rows.append(row)

        zero_ghost = n + len(frozen_values)
        nbr[:] = zero_ghost
        for k, row in enumerate(rows):
            for t, (j, coup) in enumerate(row):
                nbr[k, t] = j
                jmat[k, t] = coup

        self.nbr = nbr
        self.jmat = jmat
        self.h = np.array(
            [model.field_at(instance.field, s) for s in sites], dtype=np.float64
        )
        self.frozen = np.array(frozen_values, dtype=np.int8)
        self.n_sites = n
        self.n_ext = zero_ghost + 1

    def fresh_spins(self, start, rng=None):
        spins = np.zeros(self.n_ext, dtype=np.int8)
        if isinstance(start, str):
            if start == "all_plus":
                spins[: self.n_sites] = 1
            elif start == "all_minus":
                spins[: self.n_sites] = -1
            elif start == "random":
                if rng is None:
                    raise ValueError("random start needs an rng")
                spins[: self.n_sites] = rng.choice(
                    np.array([-1, 1], dtype=np.int8), size=self.n_sites
                )
            else:
                raise ValueError(f"unknown start {start!r}")
        else:
            arr = np.asarray(start, dtype=np.int8)
            if arr.shape != (self.n_sites,):
                raise ConfigurationError("bad start configuration shape")
            spins[: self.n_sites] = arr
        if len(self.frozen):
            spins[self.n_sites : self.n_sites + len(self.frozen)] = self.frozen
        return spins

    def layer_of_site(self):
        return np.array([s[-1] for s in self.sites], dtype=np.int64)


class ChainState:
    """One Markov chain: configuration, deterministic rng stream, counters."""

    def __init__(self, instance, seed=0, start="random", setup=None):
        self.setup = setup if setup is not None else MCSetup(instance)
        self.instance = instance
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.spins = self.setup.fresh_spins(start, self.rng)
        self.sweep_count = 0

    def sweep(self, kind="heat_bath", uniforms=None):
        if kind not in _KERNELS:
            raise ValueError(f"unknown sweep kind {kind!r}")
        if uniforms is None:
            uniforms = self.rng.random(self.setup.n_sites)
        _KERNELS[kind](
            self.spins, self.setup.nbr, self.setup.jmat, self.setup.h,
            self.instance.beta, uniforms,
        )
        self.sweep_count += 1
        return self

    def interior(self):
        return self.spins[: self.setup.n_sites].copy()


def sweep(state, kind="heat_bath"):
    return state.sweep(kind=kind)


# ---------------------------------------------------------------------------
# profile estimation

@dataclass
class ProfileEstimate:
    layers: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    tau_int: float
    samples: int

    def as_rows(self):
        return [
            (int(l), float(m), float(s), float(self.tau_int), self.samples)
            for l, m, s in zip(self.layers, self.means, self.stderrs)
        ]


def integrated_autocorrelation(series, c=6.0):
    """Integrated autocorrelation time with Sokal's automatic windowing."""
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    x = x - np.mean(x)
    var = float(np.dot(x, x)) / n
    if var == 0.0 or n < 4:
        return 0.5
    tau = 0.5
    for w in range(1, n // 2):
        rho = float(np.dot(x[:-w], x[w:])) / (n - w) / var
        tau += rho
        if w >= c * tau:
            break
    return max(tau, 0.5)


def _jackknife_stderr(samples, block):
    """Delete-one-block jackknife standard error of the mean."""
    n = len(samples)
    nb = max(n // block, 2)
    usable = nb * block
    blocks = np.mean(
        np.reshape(samples[:usable], (nb, block, -1)), axis=1
    )
    total = np.mean(blocks, axis=0)
    loo = (nb * total[None, :] - blocks) / (nb - 1)
    return np.sqrt((nb - 1) / nb * np.sum((loo - total[None, :]) ** 2, axis=0))


def estimate_profile(instance, sweeps, burn_in, thin=1, seed=0,
                     kind="heat_bath", start="random"):
    """Per-layer magnetization means with jackknife errors.

    One sample is the cross-section average of each layer after ``thin``
    sweeps past burn-in; errors come from delete-one-block jackknife with
    block length tied to the measured autocorrelation time.
    """
    if burn_in < 0 or sweeps <= burn_in:
        raise ScheduleError("need sweeps > burn_in >= 0")
    if thin < 1:
        raise ScheduleError("thin must be >= 1")

    chain = ChainState(instance, seed=seed, start=start)
    layer_ids = chain.setup.layer_of_site()
    layers = np.unique(layer_ids)
    masks = [layer_ids == l for l in layers]

    rows = []
    for k in range(sweeps):
        chain.sweep(kind=kind)
        if k >= burn_in and (k - burn_in) % thin == 0:
            s = chain.spins[: chain.setup.n_sites]
            rows.append([float(np.mean(s[m])) for m in masks])
    data = np.array(rows)

    wall_series = data[:, 0]
    tau = integrated_autocorrelation(wall_series)
    block = max(1, int(round(16.0 * tau)))
    block = min(block, max(1, len(data) // 2))
    stderrs = _jackknife_stderr(data, block)
    return ProfileEstimate(
        layers=layers, means=np.mean(data, axis=0), stderrs=stderrs,
        tau_int=float(tau), samples=len(data),
    )


# ---------------------------------------------------------------------------
# coupled plus/minus chains

class CoupledChains:
    """Plus-bc chain from all-plus and minus-bc chain from all-minus, driven
    by one shared uniform stream; under heat bath the minus chain stays
    pointwise below the plus chain, so per-sample gaps are non-negative."""

    def __init__(self, region, couplings, field, beta=1.0, seed=0,
                 universe=None):
        common = dict(region=region, couplings=couplings, field=field,
                      beta=beta, universe=universe)
        self.plus = ChainState(
            model.ModelInstance(bc=lattice.plus_bc(), **common),
            seed=seed, start="all_plus",
        )
        self.minus = ChainState(
            model.ModelInstance(bc=lattice.minus_bc(), **common),
            seed=seed, start="all_minus",
        )
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.n_sites = self.plus.setup.n_sites

    def sweep(self):
        u = self.rng.random(self.n_sites)
        self.plus.sweep(kind="heat_bath", uniforms=u)
        self.minus.sweep(kind="heat_bath", uniforms=u)

    def ordered(self):
        a = self.plus.spins[: self.n_sites]
        b = self.minus.spins[: self.n_sites]
        return bool(np.all(b <= a))

    def gap(self):
        """Per-site gap array (plus minus minus), in site order."""
        return (
            self.plus.spins[: self.n_sites].astype(np.float64)
            - self.minus.spins[: self.n_sites].astype(np.float64)
        )


def coupled_gap_profile(region, couplings, field, beta, sweeps, burn_in,
                        seed=0, thin=1):
    """Mean per-layer plus/minus gap from coupled chains; returns
    (layers, gap_means, gap_stderrs, per-site mean gaps dict)."""
    if burn_in < 0 or sweeps <= burn_in:
        raise ScheduleError("need sweeps > burn_in >= 0")
    cc = CoupledChains(region, couplings, field, beta=beta, seed=seed)
    layer_ids = cc.plus.setup.layer_of_site()
    layers = np.unique(layer_ids)
    masks = [layer_ids == l for l in layers]

    rows = []
    site_acc = np.zeros(cc.n_sites)
    kept = 0
    for k in range(sweeps):
        cc.sweep()
        if k >= burn_in and (k - burn_in) % thin == 0:
            g = cc.gap()
            rows.append([float(np.mean(g[m])) for m in masks])
            site_acc += g
            kept += 1
    data = np.array(rows)
    tau = integrated_autocorrelation(data[:, 0])
    block = min(max(1, int(round(16.0 * tau))), max(1, len(data) // 2))
    stderrs = _jackknife_stderr(data, block)
    site_means = {
        s: site_acc[i] / kept for i, s in enumerate(cc.plus.setup.sites)
    }
    return layers, np.mean(data, axis=0), stderrs, site_means


# ---------------------------------------------------------------------------
# snapshots

def snapshot(instance, sweeps, seed=0, kind="heat_bath", start="random"):
    """Final configuration of a d=2 run as a (height, width) +-1 grid with
    row index = distance from the wall - 1."""
    if instance.region.d != 2:
        raise ConfigurationError("snapshots are d=2 only")
    chain = ChainState(instance, seed=seed, start=start)
    for _ in range(sweeps):
        chain.sweep(kind=kind)
    sites = chain.setup.sites
    xs = sorted({s[0] for s in sites})
    ys = sorted({s[1] for s in sites})
    xi = {x: k for k, x in enumerate(xs)}
    yi = {y: k for k, y in enumerate(ys)}
    grid = np.zeros((len(ys), len(xs)), dtype=np.int8)
    interior = chain.spins[: chain.setup.n_sites]
    for s, v in zip(sites, interior):
        grid[yi[s[1]], xi[s[0]]] = v
    return grid
