"""Experiment runner.

Subcommands expose the verification suites and the simulations behind the
figure and scan artifacts:

  verify-exact      inequality and identity suites on enumerable instances
  verify-graphical  random-cluster / coupling suites on desk-scale graphs
  snapshot          one spin configuration raster (PGM)
  profile           per-layer magnetization profile (CSV)
  tau-scan          wall free energy curve over a lambda grid (CSV)
  lambda-c          critical wall-influence scan (CSV + text report)
  figures           the two reference snapshots (lambda = 1 and 0.03)

Exit codes: 0 success, 1 usage or configuration errors, 2 verification-suite
failure (the report is still written).  All randomness derives from one
master seed through ``split_seed`` (numpy SeedSequence over the tuple
(master, *indices)); the resolved config is echoed into the output directory.
Set WETTING_LAB_CACHE to a directory to memoize exact oracle evaluations.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import (artifacts, config, exact, graphical, lattice, model, spin_mc,
               thermo, transfer_matrix)
from .errors import WettingLabError


def split_seed(master, *indices):
    """Derive an independent 32-bit stream seed from the master seed and a
    tuple of counters; documented so other runtimes can reproduce streams."""
    ss = np.random.SeedSequence((int(master),) + tuple(int(i) for i in indices))
    return int(ss.generate_state(1)[0])


def _cached(tag, params, compute):
    """Memoize a JSON-serializable result under WETTING_LAB_CACHE."""
    cache_dir = os.environ.get("WETTING_LAB_CACHE")
    if not cache_dir:
        return compute()
    key = hashlib.sha256(
        json.dumps([tag, params], sort_keys=True).encode()
    ).hexdigest()[:32]
    path = os.path.join(cache_dir, f"{tag}-{key}.json")
    if os.path.exists(path):
        with open(path) as fh:
            return json.load(fh)
    result = compute()
    os.makedirs(cache_dir, exist_ok=True)
    artifacts.write_text(path, json.dumps(result))
    return result


def _load_config(args):
    cfg = config.ExperimentConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = config.parse_config(fh.read())
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.directory = args.out
    return cfg


def _echo_config(cfg):
    os.makedirs(cfg.directory, exist_ok=True)
    artifacts.write_text(
        os.path.join(cfg.directory, "config.txt"), config.render_config(cfg)
    )


def _bc(name):
    return {
        "plus": lattice.plus_bc, "minus": lattice.minus_bc,
        "minus_plus": lattice.minus_plus_bc, "free": lattice.free_bc,
    }[name]()


def _instance(cfg, bc=None, field=None):
    return model.ModelInstance(
        region=lattice.SemiBox(d=cfg.d, n=cfg.n, m=cfg.m),
        bc=bc if bc is not None else _bc(cfg.bc),
        couplings=cfg.coupling,
        field=field if field is not None else cfg.field,
        beta=cfg.beta,
    )


# ---------------------------------------------------------------------------
# verification suites

def _report_rows(reports):
    rows = []
    for r in reports:
        witness = getattr(r, "witness", "") or json.dumps(
            getattr(r, "details", {}), default=str
        )
        rows.append((r.name, r.passed, float(r.worst_margin), witness))
    return rows


def _write_report(cfg, reports, filename="report"):
    rows = _report_rows(reports)
    artifacts.write_csv(
        os.path.join(cfg.directory, filename + ".csv"),
        ("check", "passed", "worst_margin", "witness"), rows,
    )
    text = "\n".join(r.summary() for r in reports) + "\n"
    artifacts.write_text(os.path.join(cfg.directory, filename + ".txt"), text)
    return all(r.passed for r in reports)


_VERIFY_PRESETS = {
    # (n, m, J, delta, lam)
    "tiny": [(1, 2, 0.5, 2.0, 0.4), (1, 3, 0.8, 1.5, 0.2)],
    "small": [(1, 2, 0.5, 2.0, 0.4), (1, 3, 0.8, 1.5, 0.2),
              (2, 2, 0.3, 3.0, 1.0), (1, 4, 1.0, 2.0, 0.0)],
}


def cmd_verify_exact(args):
    cfg = _load_config(args)
    _echo_config(cfg)
    reports = []
    presets = _VERIFY_PRESETS[args.preset]
    for k, (n, m, J, delta, lam) in enumerate(presets):
        region = lattice.SemiBox(d=2, n=n, m=m)
        coup = model.Uniform(J)
        fld = model.DecayHat(lam, delta) if lam > 0 else model.Zero()
        inst = model.ModelInstance(
            region=region, bc=lattice.plus_bc(), couplings=coup, field=fld,
            beta=cfg.beta,
        )
        r = exact.check_fkg(inst, trials=args.trials,
                            rng_seed=split_seed(cfg.seed, 0, k),
                            slack=cfg.slack)
        r.name = f"fkg[{k}]"
        reports.append(r)
        r = exact.check_dvi(region, coup, fld, beta=cfg.beta, slack=cfg.slack)
        r.name = f"dvi[{k}]"
        reports.append(r)
        r = exact.check_gap_monotone_in_field(
            region, coup, fld, (0, 1), (0, 1), h_grid=(0.0, 0.2, 0.5, 1.0),
            beta=cfg.beta, slack=cfg.slack,
        )
        r.name = f"gap_monotone[{k}]"
        reports.append(r)

        # thermodynamic-integration identity on the same box
        direct = exact.finite_wall_free_energy(
            n, coup, fld, beta=cfg.beta, d=2, m=m
        )
        point = thermo.tau_w_by_integration(
            J, delta, lam, (n, m), estimator="exact", beta=cfg.beta
        ) if lam > 0 else None
        gap = abs(point.tau - direct) if point else abs(direct - direct)
        reports.append(exact.CheckReport(
            name=f"integration_identity[{k}]",
            passed=gap <= cfg.identity_tol, worst_margin=float(-gap),
            details={"direct": direct},
        ))

    reports.append(exact.check_tau_concavity_and_monotonicity(
        n=2, J_grid=(0.3, 0.6), lam_grid=(0.0, 0.3, 0.6, 0.9), delta=2.0,
        beta=cfg.beta,
    ))
    ok = _write_report(cfg, reports)
    return 0 if ok else 2


def _random_cluster_instance(rng, with_field=True, coupling_kind=None,
                             max_sites=10, max_edges=12):
    """A small random half-space instance for graphical verification,
    rejection-sampled to stay within the desk-scale caps."""
    while True:
        inst = _draw_cluster_instance(rng, with_field, coupling_kind)
        cm = graphical.ClusterModel.from_instance(inst)
        if cm.n_free <= max_sites and 1 <= cm.n_edges <= max_edges:
            return inst


def _draw_cluster_instance(rng, with_field=True, coupling_kind=None):
    n = int(rng.integers(0, 2))
    m = int(rng.integers(1, 4))
    region = lattice.SemiBox(d=2, n=n, m=m)
    J = float(rng.uniform(0.2, 1.0))
    kind = coupling_kind or rng.choice(["uniform", "layer_weakened"])
    coup = (model.Uniform(J) if kind == "uniform"
            else model.LayerWeakened(J, float(rng.uniform(0.0, J))))
    if with_field:
        which = rng.choice(["decay", "centered", "wall"])
        lam = float(rng.uniform(0.1, 1.0))
        delta = float(rng.uniform(1.2, 3.0))
        fld = {"decay": model.DecayHat(lam, delta),
               "centered": model.CenteredDecay(lam, delta),
               "wall": model.WallOnly(lam)}[which]
    else:
        fld = model.Zero()
    bc = lattice.plus_bc() if rng.random() < 0.7 else lattice.free_bc()
    return model.ModelInstance(
        region=region, bc=bc, couplings=coup, field=fld,
        beta=float(rng.uniform(0.5, 1.2)),
    )


def _tv(p, q):
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def es_marginal_report(instance, tol=1e-12):
    """Both ES marginals against the exact spin and RC measures."""
    cm = graphical.ClusterModel.from_instance(instance)
    spins, edges, joint = graphical.es_joint_distribution(cm)
    spin_marg = joint.sum(axis=1)
    probs, sconfigs = exact.full_distribution(
        exact.RawModel.from_assembled(model.assemble(instance)), instance.beta
    )
    order = {tuple(s): i for i, s in enumerate(sconfigs)}
    gibbs = np.array([probs[order[tuple(s)]] for s in spins])
    tv_spin = _tv(spin_marg, gibbs)

    edge_marg = joint.sum(axis=0)
    _, rc = graphical.rc_exact_distribution(cm)
    tv_edge = _tv(edge_marg, rc)
    worst = max(tv_spin, tv_edge)
    return graphical.MarginReport(
        name="es_marginals", passed=worst <= tol, worst_margin=-worst,
        witness=f"tv_spin={tv_spin:.3e} tv_edge={tv_edge:.3e}",
    )


def sw_stationarity_report(instance, tol=1e-10):
    cm = graphical.ClusterModel.from_instance(instance)
    spins, P = graphical.sw_transition_matrix(cm)
    probs, sconfigs = exact.full_distribution(
        exact.RawModel.from_assembled(model.assemble(instance)), instance.beta
    )
    order = {tuple(s): i for i, s in enumerate(sconfigs)}
    gibbs = np.array([probs[order[tuple(s)]] for s in spins])
    tv = _tv(gibbs @ P, gibbs)
    return graphical.MarginReport(
        name="sw_stationarity", passed=tv <= tol, worst_margin=-tv,
        witness=f"tv={tv:.3e}",
    )


def cmd_verify_graphical(args):
    cfg = _load_config(args)
    _echo_config(cfg)
    reports = []
    rng = np.random.default_rng(split_seed(cfg.seed, 1))
    for k in range(args.instances):
        inst = _random_cluster_instance(rng)
        r = es_marginal_report(inst, tol=cfg.tv_tol)
        r.name = f"es_marginals[{k}]"
        reports.append(r)
        if k < 5:
            r = sw_stationarity_report(inst)
            r.name = f"sw_stationarity[{k}]"
            reports.append(r)
        cm = graphical.ClusterModel.from_instance(inst)
        r = graphical.rc_fkg_check(
            cm, trials=40, rng_seed=split_seed(cfg.seed, 2, k),
            slack=cfg.slack,
        )
        r.name = f"rc_fkg[{k}]"
        reports.append(r)

    for k in range(4):
        while True:
            lo = _random_cluster_instance(rng, coupling_kind="uniform")
            # the free/wired comparison below needs interior edges too
            if (lo.region.n, lo.region.m) != (0, 1):
                break
        hi = model.ModelInstance(
            region=lo.region, bc=lo.bc,
            couplings=model.Uniform(lo.couplings.J + float(rng.uniform(0.1, 0.5))),
            field=lo.field, beta=lo.beta,
        )
        cml, cmh = (graphical.ClusterModel.from_instance(x) for x in (lo, hi))
        events = [
            graphical.random_increasing_edge_event(rng, cml.n_edges)
            for _ in range(10)
        ]
        r = graphical.compare_rc_in_J(cml, cmh, events, slack=cfg.slack)
        r.name = f"rc_monotone_in_J[{k}]"
        reports.append(r)

        free = model.ModelInstance(
            region=lo.region, bc=lattice.free_bc(), couplings=lo.couplings,
            field=model.Zero(), beta=lo.beta,
        )
        cmf = graphical.ClusterModel.from_instance(free)
        # the wired measure lives on the same interior edge set, with every
        # frontier-adjacent vertex attached to the point at infinity
        in_region = set(cmf.sites)
        wired_idx = tuple(
            i for i, s in enumerate(cmf.sites)
            if any(nb not in in_region
                   for nb in lattice.neighbors(s, free.universe))
        )
        cmw = graphical.ClusterModel(
            n_free=cmf.n_free, g=cmf.g, edges=cmf.edges, K=cmf.K,
            wired_vertices=wired_idx, sites=cmf.sites,
        )
        events = [
            graphical.random_increasing_edge_event(rng, cmf.n_edges)
            for _ in range(10)
        ]
        r = graphical.free_wired_domination(cmf, cmw, events, slack=cfg.slack)
        r.name = f"free_le_wired[{k}]"
        reports.append(r)

    ok = _write_report(cfg, reports)
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# simulations

def cmd_snapshot(args):
    cfg = _load_config(args)
    _echo_config(cfg)
    inst = _instance(cfg)
    grid = spin_mc.snapshot(
        inst, sweeps=cfg.sweeps, seed=split_seed(cfg.seed, 10),
    )
    artifacts.write_pgm(os.path.join(cfg.directory, "snapshot.pgm"), grid)
    return 0


def cmd_profile(args):
    cfg = _load_config(args)
    _echo_config(cfg)
    inst = _instance(cfg)
    prof = spin_mc.estimate_profile(
        inst, sweeps=cfg.sweeps, burn_in=cfg.burn_in, thin=cfg.thin,
        seed=split_seed(cfg.seed, 11),
    )
    artifacts.write_csv(
        os.path.join(cfg.directory, "profile.csv"),
        ("layer", "mean", "stderr", "tau_int", "samples"), prof.as_rows(),
    )
    return 0


def _pick_estimator(cfg):
    n_sites = (2 * cfg.n + 1) ** (cfg.d - 1) * cfg.m
    if n_sites <= exact.ENUM_CAP:
        return "exact"
    if cfg.d == 2 and cfg.m <= transfer_matrix.STRIP_HEIGHT_CAP:
        return "strip"
    return thermo.McSchedule(
        sweeps=cfg.sweeps, burn_in=cfg.burn_in, thin=cfg.thin,
        seed=split_seed(cfg.seed, 12),
    )


def _field_params(cfg):
    if isinstance(cfg.field, model.DecayHat):
        return cfg.field.lam, cfg.field.delta
    raise WettingLabError(
        "tau-scan and lambda-c need model.field = decay(...)"
    )


def cmd_tau_scan(args):
    cfg = _load_config(args)
    _echo_config(cfg)
    if not isinstance(cfg.coupling, model.Uniform):
        raise WettingLabError("tau-scan needs model.coupling = uniform(...)")
    _, delta = _field_params(cfg)
    estimator = _pick_estimator(cfg)
    if args.lambda_max == 0:
        grid = [0.0]
    else:
        grid = np.linspace(0.0, args.lambda_max, args.points).tolist()
    quad = (("gauss", 32) if not isinstance(estimator, thermo.McSchedule)
            else ("trapezoid", 8))

    def compute():
        curve = thermo.tau_curve(
            cfg.coupling.J, delta, grid, (cfg.n, cfg.m), quadrature=quad,
            estimator=estimator, beta=cfg.beta,
        )
        return curve.rows()

    rows = _cached("tau-scan", {
        "J": cfg.coupling.J, "delta": delta, "grid": grid, "n": cfg.n,
        "m": cfg.m, "beta": cfg.beta, "quad": list(quad),
        "estimator": str(estimator),
    }, compute)
    artifacts.write_csv(
        os.path.join(cfg.directory, "tau_curve.csv"),
        ("lambda", "tau", "stderr", "n", "m", "depth", "rule"), rows,
    )
    return 0


def cmd_lambda_c(args):
    cfg = _load_config(args)
    _echo_config(cfg)
    if not isinstance(cfg.coupling, model.Uniform):
        raise WettingLabError("lambda-c needs model.coupling = uniform(...)")
    _, delta = _field_params(cfg)
    boxes = []
    for token in args.boxes.split(","):
        n, _, m = token.partition("x")
        boxes.append((int(n), int(m) if m else int(n)))
    grid = np.linspace(0.0, args.lambda_max, args.points).tolist()
    estimators = []
    for n, m in boxes:
        probe = config.ExperimentConfig(
            d=cfg.d, n=n, m=m, sweeps=cfg.sweeps, burn_in=cfg.burn_in,
            thin=cfg.thin, seed=cfg.seed,
        )
        estimators.append(_pick_estimator(probe))
    # one estimator kind must cover the whole ladder for comparability
    estimator = estimators[-1]
    scan = thermo.lambda_c_scan(
        cfg.coupling.J, delta, grid, boxes, estimator=estimator,
        vanish_threshold=cfg.vanish, beta=cfg.beta, d=cfg.d,
    )
    rows = []
    for box, samples in scan.integrand_by_box.items():
        for s in samples:
            rows.append((box[0], box[1], s.s, s.total, s.stderr))
    artifacts.write_csv(
        os.path.join(cfg.directory, "integrand.csv"),
        ("n", "m", "lambda", "integrand", "stderr"), rows,
    )
    lines = [
        f"crossing = {scan.crossing}",
        f"plateau_onset = {scan.plateau_onset}",
        f"monotone_audit_passed = {scan.monotone_audit_passed}",
        f"vanish_threshold = {scan.vanish_threshold}",
        f"nonsummable_flag = {scan.nonsummable_flag}",
        f"open_ended = {scan.open_ended}",
    ]
    if args.wall_only_audit:
        wall = thermo.lambda_c_scan(
            cfg.coupling.J, delta, grid, boxes, estimator=estimator,
            vanish_threshold=cfg.vanish, beta=cfg.beta, d=cfg.d,
            wall_only=True,
        )
        lines.append(f"wall_only_crossing = {wall.crossing}")
    artifacts.write_text(
        os.path.join(cfg.directory, "scan.txt"), "\n".join(lines) + "\n"
    )
    return 0


def cmd_figures(args):
    cfg = _load_config(args)
    _echo_config(cfg)
    for tag, lam in (("1", 1.0), ("0.03", 0.03)):
        inst = model.ModelInstance(
            region=lattice.SemiBox(d=2, n=args.n, m=args.n),
            bc=lattice.minus_bc(), couplings=model.Uniform(1.0),
            field=model.DecayHat(lam, 2.0), beta=0.5,
        )
        grid = spin_mc.snapshot(
            inst, sweeps=args.sweeps, seed=split_seed(cfg.seed, 13),
        )
        artifacts.write_pgm(
            os.path.join(cfg.directory, f"figure_lambda_{tag}.pgm"), grid
        )
    return 0


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise WettingLabError(message)


def _add_common(sp):
    sp.add_argument("--config", help="key-value config file")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--seed", type=int, help="master seed override")
    sp.add_argument("--jobs", type=int, default=1,
                    help="max concurrent experiments (determinism unaffected)")


def build_parser():
    parser = _Parser(prog="wetting-lab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify-exact", help="enumerable-instance suites")
    _add_common(sp)
    sp.add_argument("--preset", choices=sorted(_VERIFY_PRESETS), default="tiny")
    sp.add_argument("--trials", type=int, default=200)
    sp.set_defaults(func=cmd_verify_exact)

    sp = sub.add_parser("verify-graphical", help="random-cluster suites")
    _add_common(sp)
    sp.add_argument("--instances", type=int, default=20)
    sp.set_defaults(func=cmd_verify_graphical)

    sp = sub.add_parser("snapshot", help="single-run configuration raster")
    _add_common(sp)
    sp.set_defaults(func=cmd_snapshot)

    sp = sub.add_parser("profile", help="per-layer magnetization profile")
    _add_common(sp)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("tau-scan", help="wall free energy curve")
    _add_common(sp)
    sp.add_argument("--lambda-max", type=float, default=1.0)
    sp.add_argument("--points", type=int, default=6)
    sp.set_defaults(func=cmd_tau_scan)

    sp = sub.add_parser("lambda-c", help="critical wall-influence scan")
    _add_common(sp)
    sp.add_argument("--lambda-max", type=float, default=1.5)
    sp.add_argument("--points", type=int, default=7)
    sp.add_argument("--boxes", default="4x4,6x6")
    sp.add_argument("--wall-only-audit", action="store_true")
    sp.set_defaults(func=cmd_lambda_c)

    sp = sub.add_parser("figures", help="reference snapshots")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--sweeps", type=int, default=20000)
    sp.set_defaults(func=cmd_figures)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (WettingLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
