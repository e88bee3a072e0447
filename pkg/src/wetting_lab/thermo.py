"""Thermodynamic integration of the wall free energy and the critical
wall-influence scan.

The integrand at field scale s is the weighted plus/minus magnetization gap
sum_l l^(-delta) * (<sigma_l>^+ - <sigma_l>^-), evaluated either exactly
(enumerable boxes) or by coupled Monte Carlo chains sharing one uniform
stream.  Integrating it over [0, lambda] gives the finite-box wall free
energy with the decaying field; on enumerable boxes this must coincide with
the direct log-partition ratio.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import exact, lattice, model, spin_mc, transfer_matrix
from .errors import ConfigurationError


@dataclass(frozen=True)
class McSchedule:
    sweeps: int = 2000
    burn_in: int = 500
    thin: int = 1
    seed: int = 0


@dataclass
class IntegrandSample:
    s: float
    gap_terms: dict          # layer -> l^(-delta) * mean gap
    total: float
    stderr: float = 0.0

    def flagged_nonsummable(self, delta):
        return delta <= 1.0


@dataclass
class TauPoint:
    lam: float
    tau: float
    stderr: float
    n: int
    m: int
    depth: int
    rule: str


@dataclass
class TauCurve:
    source: str
    points: list = dc_field(default_factory=list)

    def rows(self):
        return [
            (p.lam, p.tau, p.stderr, p.n, p.m, p.depth, p.rule)
            for p in self.points
        ]


def _decay_field(s, delta):
    return model.DecayHat(s, delta) if s > 0 else model.Zero()


def gap_integrand(J, delta, s, box, depth=None, estimator="exact", beta=1.0,
                  d=2):
    """Integrand sample at field scale s on SemiBox(box); box is (n, m)."""
    if s < 0:
        raise ConfigurationError("field scale must be non-negative")
    n, m = box
    if depth is None:
        depth = m
    if depth > m:
        raise ConfigurationError("depth exceeds box height")
    fld = _decay_field(s, delta)
    region = lattice.SemiBox(d=d, n=n, m=m)
    weights = {ell: float(ell) ** (-delta) for ell in range(1, depth + 1)}

    if estimator == "exact":
        plus = exact.ExactState(model.ModelInstance(
            region=region, bc=lattice.plus_bc(), couplings=model.Uniform(J),
            field=fld, beta=beta,
        ))
        minus = exact.ExactState(model.ModelInstance(
            region=region, bc=lattice.minus_bc(), couplings=model.Uniform(J),
            field=fld, beta=beta,
        ))
        pp, pm = plus.layer_profile(), minus.layer_profile()
        terms = {ell: weights[ell] * (pp[ell] - pm[ell]) for ell in weights}
        return IntegrandSample(
            s=s, gap_terms=terms, total=float(sum(terms.values())), stderr=0.0
        )

    if estimator == "strip":
        if d != 2:
            raise ConfigurationError("strip estimator is d=2 only")
        gaps = transfer_matrix.strip_layer_gap(n, m, J, fld, beta=beta)
        terms = {ell: weights[ell] * gaps[ell] for ell in weights}
        return IntegrandSample(
            s=s, gap_terms=terms, total=float(sum(terms.values())), stderr=0.0
        )

    if isinstance(estimator, McSchedule):
        layers, gaps, errs, _ = spin_mc.coupled_gap_profile(
            region, model.Uniform(J), fld, beta,
            sweeps=estimator.sweeps, burn_in=estimator.burn_in,
            seed=estimator.seed, thin=estimator.thin,
        )
        by_layer = dict(zip(layers.tolist(), gaps.tolist()))
        err_by_layer = dict(zip(layers.tolist(), errs.tolist()))
        terms = {ell: weights[ell] * by_layer[ell] for ell in weights}
        var = sum((weights[ell] * err_by_layer[ell]) ** 2 for ell in weights)
        return IntegrandSample(
            s=s, gap_terms=terms, total=float(sum(terms.values())),
            stderr=math.sqrt(var),
        )

    raise ConfigurationError(f"unknown estimator {estimator!r}")


def truncation_bound(delta, depth, height):
    """Crude tail bound from |gap| <= 2 for the layers dropped above
    ``depth`` (up to the box height)."""
    return float(sum(2.0 * ell ** (-delta) for ell in range(depth + 1, height + 1)))


def _gauss_nodes(a, b, k):
    x, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def tau_w_by_integration(J, delta, lam, box, quadrature=("gauss", 32),
                         estimator="exact", beta=1.0, d=2, depth=None):
    """Wall free energy at wall influence lam by integrating the gap
    integrand over [0, lam]."""
    n, m = box
    if depth is None:
        depth = m
    rule, k = quadrature
    if lam < 0:
        raise ConfigurationError("lambda must be non-negative")
    if lam == 0:
        return TauPoint(0.0, 0.0, 0.0, n, m, depth, f"{rule}({k})")

    if rule == "gauss":
        nodes, weights = _gauss_nodes(0.0, lam, k)
    elif rule == "trapezoid":
        if k < 2:
            raise ConfigurationError("trapezoid needs >= 2 nodes")
        nodes = np.linspace(0.0, lam, k)
        weights = np.full(k, lam / (k - 1))
        weights[0] *= 0.5
        weights[-1] *= 0.5
    else:
        raise ConfigurationError(f"unknown quadrature rule {rule!r}")

    total = 0.0
    var = 0.0
    for s, w in zip(nodes, weights):
        if isinstance(estimator, McSchedule):
            est = McSchedule(
                sweeps=estimator.sweeps, burn_in=estimator.burn_in,
                thin=estimator.thin,
                seed=estimator.seed + int(round(s * 1e6)),
            )
        else:
            est = estimator
        sample = gap_integrand(J, delta, float(s), box, depth=depth,
                               estimator=est, beta=beta, d=d)
        # beta multiplies the full Hamiltonian, hence also d(log Z)/d lambda
        total += w * beta * sample.total
        var += (w * beta * sample.stderr) ** 2
    return TauPoint(float(lam), float(total), math.sqrt(var), n, m, depth,
                    f"{rule}({k})")


def tau_curve(J, delta, lam_grid, box, quadrature=("gauss", 32),
              estimator="exact", beta=1.0, d=2, depth=None):
    source = "mc" if isinstance(estimator, McSchedule) else "exact_oracle"
    curve = TauCurve(source=source)
    for lam in lam_grid:
        curve.points.append(
            tau_w_by_integration(J, delta, lam, box, quadrature=quadrature,
                                 estimator=estimator, beta=beta, d=d,
                                 depth=depth)
        )
    return curve


@dataclass
class ScanResult:
    lam_grid: list
    integrand_by_box: dict     # (n, m) -> list of IntegrandSample
    crossing: float            # None when no crossing inside the grid
    crossings_by_box: dict
    plateau_onset: float
    monotone_audit_passed: bool
    vanish_threshold: float
    nonsummable_flag: bool
    wall_only: bool = False

    @property
    def open_ended(self):
        return self.crossing is None


def lambda_c_scan(J, delta, lam_grid, boxes, estimator="exact",
                  vanish_threshold=1e-3, beta=1.0, d=2, wall_only=False,
                  noise_sigmas=3.0):
    """Scan the gap integrand over a lambda grid and a box ladder; the
    critical-influence estimate is the first grid point where the integrand
    stays below the vanish threshold on every ladder box.

    wall_only=True replaces the decaying field by the pure wall field at the
    same strength (comparison scan for the no-field critical influence).
    """
    lam_grid = sorted(float(x) for x in lam_grid)
    if vanish_threshold <= 0:
        raise ConfigurationError("vanish threshold must be positive")
    integrand_by_box = {}
    crossings = {}
    for bi, box in enumerate(boxes):
        samples = []
        for li, lam in enumerate(lam_grid):
            if isinstance(estimator, McSchedule):
                est = McSchedule(
                    sweeps=estimator.sweeps, burn_in=estimator.burn_in,
                    thin=estimator.thin,
                    seed=estimator.seed + 1000 * bi + li,
                )
            else:
                est = estimator
            if wall_only:
                sample = _wall_only_integrand(J, lam, box, est, beta, d)
            else:
                sample = gap_integrand(J, delta, lam, box, estimator=est,
                                       beta=beta, d=d)
            samples.append(sample)
        integrand_by_box[tuple(box)] = samples
        crossings[tuple(box)] = _first_crossing(
            lam_grid, samples, vanish_threshold
        )

    totals = np.array([
        [s.total for s in integrand_by_box[tuple(b)]] for b in boxes
    ])
    errs = np.array([
        [s.stderr for s in integrand_by_box[tuple(b)]] for b in boxes
    ])
    # integrand non-increasing in lambda, up to noise
    diffs = np.diff(totals, axis=1)
    tol = noise_sigmas * np.sqrt(errs[:, 1:] ** 2 + errs[:, :-1] ** 2) + 1e-10
    monotone = bool(np.all(diffs <= tol))

    below = np.all(totals < vanish_threshold, axis=0)
    crossing = None
    for li, lam in enumerate(lam_grid):
        if below[li]:
            crossing = lam
            break

    # plateau onset of the tau curve on the largest box (trapezoid over grid)
    tail = totals[-1]
    taus = np.concatenate([[0.0], np.cumsum(
        0.5 * (tail[1:] + tail[:-1]) * np.diff(lam_grid)
    )]) * beta
    plateau = lam_grid[-1]
    for li in range(len(lam_grid)):
        if taus[-1] - taus[li] < vanish_threshold:
            plateau = lam_grid[li]
            break

    return ScanResult(
        lam_grid=lam_grid, integrand_by_box=integrand_by_box,
        crossing=crossing, crossings_by_box=crossings,
        plateau_onset=float(plateau), monotone_audit_passed=monotone,
        vanish_threshold=vanish_threshold,
        nonsummable_flag=(not wall_only) and delta <= 1.0,
        wall_only=wall_only,
    )


def _first_crossing(lam_grid, samples, eps):
    for lam, s in zip(lam_grid, samples):
        if s.total < eps:
            return lam
    return None


def _wall_only_integrand(J, lam, box, estimator, beta, d):
    """Gap at the wall layer with the pure wall field (the derivative of the
    no-field wall free energy in lambda)."""
    n, m = box
    fld = model.WallOnly(lam) if lam > 0 else model.Zero()
    region = lattice.SemiBox(d=d, n=n, m=m)
    if estimator == "exact":
        plus = exact.ExactState(model.ModelInstance(
            region=region, bc=lattice.plus_bc(), couplings=model.Uniform(J),
            field=fld, beta=beta,
        ))
        minus = exact.ExactState(model.ModelInstance(
            region=region, bc=lattice.minus_bc(), couplings=model.Uniform(J),
            field=fld, beta=beta,
        ))
        gap = plus.layer_profile()[1] - minus.layer_profile()[1]
        return IntegrandSample(s=lam, gap_terms={1: gap}, total=gap)
    if estimator == "strip":
        gap = transfer_matrix.strip_layer_gap(n, m, J, fld, beta=beta)[1]
        return IntegrandSample(s=lam, gap_terms={1: gap}, total=gap)
    layers, gaps, errs, _ = spin_mc.coupled_gap_profile(
        region, model.Uniform(J), fld, beta,
        sweeps=estimator.sweeps, burn_in=estimator.burn_in,
        seed=estimator.seed, thin=estimator.thin,
    )
    gap = float(gaps[0])
    return IntegrandSample(s=lam, gap_terms={1: gap}, total=gap,
                           stderr=float(errs[0]))
