import itertools
import math

import numpy as np
import pytest

from wetting_lab import exact, graphical, lattice, model
from wetting_lab.errors import (CapacityError, ConditioningError,
                                ConfigurationError)


def spin_partition(cm):
    """Brute-force partition function of the spin system a ClusterModel
    encodes: free spins summed, ghost spins frozen."""
    z = 0.0
    for values in itertools.product((-1, 1), repeat=cm.n_free):
        x = float(np.dot(cm.g, values))
        for (a, b), k in zip(cm.edges, cm.K):
            sa = values[a] if a < cm.n_free else int(cm.ghost_spins[a - cm.n_free])
            sb = values[b] if b < cm.n_free else int(cm.ghost_spins[b - cm.n_free])
            x += k * sa * sb
        z += math.exp(x)
    return z


def instance_for(bc, field, beta=1.0, J=0.7, n=1, m=2):
    return model.ModelInstance(
        region=lattice.SemiBox(d=2, n=n, m=m), bc=bc,
        couplings=model.Uniform(J), field=field, beta=beta,
    )


def test_union_find_groups():
    uf = graphical.UnionFind(5)
    uf.union(0, 1)
    uf.union(3, 4)
    groups = {frozenset(g) for g in uf.groups()}
    assert groups == {frozenset({0, 1}), frozenset({2}), frozenset({3, 4})}


def test_rc_partition_identity_against_spin_model():
    """Binding identity of the edge expansion: expanding each Boltzmann
    factor as e^{-K}(1 + delta(e^{2K}-1)) and summing spins cluster by
    cluster gives sum_w w_RC(w) = e^{sum K - sum g} * Z_spin (the cluster
    factors are normalized to the all-plus assignment, hence the e^{-sum g})."""
    for bc, field in [
        (lattice.plus_bc(), model.DecayHat(0.5, 2.0)),
        (lattice.free_bc(), model.WallOnly(0.8)),
        (lattice.minus_bc(), model.Zero()),
    ]:
        cm = graphical.ClusterModel.from_instance(
            instance_for(bc, field, beta=0.9)
        )
        z_rc = sum(
            graphical.rc_weight(bits, cm, signed_ok=True)
            for bits in graphical.all_edge_configs(cm.n_edges)
        )
        expected = math.exp(
            float(np.sum(cm.K)) - float(np.sum(cm.g))
        ) * spin_partition(cm)
        assert z_rc == pytest.approx(expected, rel=1e-10)


def test_single_free_edge_opens_with_probability_tanh():
    K = 0.85
    cm = graphical.ClusterModel(
        n_free=2, g=np.zeros(2), edges=[(0, 1)], K=np.array([K]),
    )
    configs, probs = graphical.rc_exact_distribution(cm)
    p_open = sum(p for bits, p in zip(configs, probs) if bits[0] == 1)
    assert p_open == pytest.approx(math.tanh(K), abs=1e-12)


def test_conflicting_ghost_cluster_has_zero_weight():
    cm = graphical.ClusterModel(
        n_free=1, g=np.zeros(1), edges=[(0, 1), (0, 2)],
        K=np.array([0.5, 0.5]),
        ghost_spins=np.array([1, -1], dtype=np.int8),
    )
    assert graphical.rc_log_weight(np.array([1, 1]), cm) == -np.inf
    assert graphical.rc_weight(np.array([1, 0]), cm) > 0


def test_wired_cluster_factor_is_one():
    g = 3.7  # any field value: the wired cluster factor must ignore it
    cm = graphical.ClusterModel(
        n_free=1, g=np.array([g]), edges=[], K=np.zeros(0),
        wired_vertices=(0,),
    )
    assert graphical.rc_log_weight(np.zeros(0, dtype=np.int8), cm) == \
        pytest.approx(0.0)


def test_minus_ghost_cluster_weight():
    # one free vertex with field g joined to a -1 ghost by an open edge:
    # weight (e^{2K} - 1) * e^{-2g}
    K, g = 0.6, 0.4
    cm = graphical.ClusterModel(
        n_free=1, g=np.array([g]), edges=[(0, 1)], K=np.array([K]),
        ghost_spins=np.array([-1], dtype=np.int8),
    )
    got = graphical.rc_weight(np.array([1]), cm)
    assert got == pytest.approx(math.expm1(2 * K) * math.exp(-2 * g))


def test_negative_fields_require_opt_in():
    cm = graphical.ClusterModel(
        n_free=1, g=np.array([-0.5]), edges=[], K=np.zeros(0),
    )
    with pytest.raises(ConfigurationError):
        graphical.rc_log_weight(np.zeros(0, dtype=np.int8), cm)
    assert np.isfinite(
        graphical.rc_log_weight(np.zeros(0, dtype=np.int8), cm, signed_ok=True)
    )


def test_es_weight_definition():
    K, g = 0.9, 0.3
    cm = graphical.ClusterModel(
        n_free=2, g=np.array([g, 0.0]), edges=[(0, 1)], K=np.array([K]),
    )
    agree = np.array([1, 1], dtype=np.int8)
    disagree = np.array([1, -1], dtype=np.int8)
    open_e = np.array([1], dtype=np.int8)
    closed = np.array([0], dtype=np.int8)
    assert graphical.es_weight(agree, open_e, cm) == \
        pytest.approx(math.expm1(2 * K) * math.exp(g))
    assert graphical.es_weight(disagree, open_e, cm) == 0.0
    assert graphical.es_weight(disagree, closed, cm) == \
        pytest.approx(math.exp(g - 0.0))


def es_tv_check(instance):
    cm = graphical.ClusterModel.from_instance(instance)
    spins, edges, joint = graphical.es_joint_distribution(cm)
    probs, sconfigs = exact.full_distribution(
        exact.RawModel.from_assembled(model.assemble(instance)),
        instance.beta,
    )
    order = {tuple(s): i for i, s in enumerate(sconfigs)}
    gibbs = np.array([probs[order[tuple(s)]] for s in spins])
    tv_spin = 0.5 * np.sum(np.abs(joint.sum(axis=1) - gibbs))
    _, rc = graphical.rc_exact_distribution(cm)
    tv_edge = 0.5 * np.sum(np.abs(joint.sum(axis=0) - rc))
    return tv_spin, tv_edge


def test_es_marginals_match_spin_and_rc_measures():
    for bc, field, beta in [
        (lattice.plus_bc(), model.DecayHat(0.6, 2.0), 1.0),
        (lattice.free_bc(), model.WallOnly(0.4), 0.8),
        (lattice.plus_bc(), model.CenteredDecay(0.5, 1.5), 1.2),
    ]:
        tv_spin, tv_edge = es_tv_check(instance_for(bc, field, beta=beta))
        assert tv_spin <= 1e-12
        assert tv_edge <= 1e-12


def test_sample_edges_conditional_frequency():
    K = 0.7
    cm = graphical.ClusterModel(
        n_free=2, g=np.zeros(2), edges=[(0, 1)], K=np.array([K]),
    )
    rng = np.random.default_rng(3)
    n, hits = 4000, 0
    spins = np.array([1, 1], dtype=np.int8)
    for _ in range(n):
        hits += int(graphical.sample_edges_given_spins(spins, cm, rng)[0])
    p = -math.expm1(-2 * K)
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(hits / n - p) < 4 * sigma
    # disagreeing spins never open the edge
    spins = np.array([1, -1], dtype=np.int8)
    assert all(
        graphical.sample_edges_given_spins(spins, cm, rng)[0] == 0
        for _ in range(100)
    )


def test_sample_spins_conditional_frequency():
    g = 0.5
    cm = graphical.ClusterModel(
        n_free=1, g=np.array([g]), edges=[], K=np.zeros(0),
    )
    rng = np.random.default_rng(4)
    n = 4000
    plus = sum(
        int(graphical.sample_spins_given_edges(
            np.zeros(0, dtype=np.int8), cm, rng)[0] == 1)
        for _ in range(n)
    )
    p = math.exp(g) / (2 * math.cosh(g))
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(plus / n - p) < 4 * sigma


def test_sample_spins_rejects_wired_clusters():
    cm = graphical.ClusterModel(
        n_free=1, g=np.zeros(1), edges=[], K=np.zeros(0),
        wired_vertices=(0,),
    )
    with pytest.raises(ConditioningError):
        graphical.sample_spins_given_edges(
            np.zeros(0, dtype=np.int8), cm, np.random.default_rng(0)
        )


def test_sw_transition_matrix_is_stochastic_and_gibbs_stationary():
    inst = instance_for(lattice.plus_bc(), model.DecayHat(0.5, 2.0),
                        beta=0.9, n=1, m=1)
    cm = graphical.ClusterModel.from_instance(inst)
    spins, P = graphical.sw_transition_matrix(cm)
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
    probs, sconfigs = exact.full_distribution(
        exact.RawModel.from_assembled(model.assemble(inst)), inst.beta
    )
    order = {tuple(s): i for i, s in enumerate(sconfigs)}
    gibbs = np.array([probs[order[tuple(s)]] for s in spins])
    assert 0.5 * np.sum(np.abs(gibbs @ P - gibbs)) <= 1e-12


def test_sw_step_runs_and_returns_valid_spins():
    inst = instance_for(lattice.plus_bc(), model.WallOnly(0.3))
    cm = graphical.ClusterModel.from_instance(inst)
    rng = np.random.default_rng(7)
    spins = np.ones(cm.n_free, dtype=np.int8)
    for _ in range(50):
        spins = graphical.sw_step(spins, cm, rng)
        assert set(np.unique(spins)) <= {-1, 1}


def test_rc_heat_bath_edge_single_edge_law():
    K = 0.65
    cm = graphical.ClusterModel(
        n_free=2, g=np.zeros(2), edges=[(0, 1)], K=np.array([K]),
    )
    rng = np.random.default_rng(11)
    bits = np.zeros(1, dtype=np.int8)
    n, acc = 3000, 0
    for _ in range(n):
        bits = graphical.rc_heat_bath_edge(bits, 0, cm, rng)
        acc += int(bits[0])
    p = math.tanh(K)
    sigma = math.sqrt(p * (1 - p) / n)   # iid resampling: no memory
    assert abs(acc / n - p) < 4 * sigma


def test_rc_edge_sweep_preserves_distribution_empirically():
    inst = instance_for(lattice.free_bc(), model.WallOnly(0.5), n=1, m=1)
    cm = graphical.ClusterModel.from_instance(inst)
    configs, probs = graphical.rc_exact_distribution(cm)
    index = {tuple(b): i for i, b in enumerate(configs)}
    rng = np.random.default_rng(13)
    bits = np.zeros(cm.n_edges, dtype=np.int8)
    counts = np.zeros(len(configs))
    sweeps = 3000
    for _ in range(sweeps):
        bits = graphical.rc_edge_sweep(bits, cm, rng)
        counts[index[tuple(bits)]] += 1
    emp = counts / sweeps
    # loose stochastic agreement; the exact 4-sigma version lives in the
    # acceptance suite on the 4-edge cycle
    assert 0.5 * np.sum(np.abs(emp - probs)) < 0.08


def test_rc_fkg_check_passes():
    cm = graphical.ClusterModel.from_instance(
        instance_for(lattice.plus_bc(), model.DecayHat(0.4, 2.0))
    )
    rep = graphical.rc_fkg_check(cm, trials=60, rng_seed=1)
    assert rep.passed


def test_compare_rc_in_J_orders_increasing_events():
    low = instance_for(lattice.plus_bc(), model.WallOnly(0.3), J=0.4)
    high = instance_for(lattice.plus_bc(), model.WallOnly(0.3), J=0.9)
    cml = graphical.ClusterModel.from_instance(low)
    cmh = graphical.ClusterModel.from_instance(high)
    rng = np.random.default_rng(2)
    events = [graphical.random_increasing_edge_event(rng, cml.n_edges)
              for _ in range(8)]
    rep = graphical.compare_rc_in_J(cml, cmh, events)
    assert rep.passed
    with pytest.raises(ConfigurationError):
        graphical.compare_rc_in_J(cmh, cml, events)


def test_free_wired_domination():
    inst = instance_for(lattice.free_bc(), model.Zero(), J=0.8)
    cmf = graphical.ClusterModel.from_instance(inst)
    in_region = set(cmf.sites)
    wired_idx = tuple(
        i for i, s in enumerate(cmf.sites)
        if any(nb not in in_region
               for nb in lattice.neighbors(s, inst.universe))
    )
    cmw = graphical.ClusterModel(
        n_free=cmf.n_free, g=cmf.g, edges=cmf.edges, K=cmf.K,
        wired_vertices=wired_idx, sites=cmf.sites,
    )
    rng = np.random.default_rng(6)
    events = [graphical.random_increasing_edge_event(rng, cmf.n_edges)
              for _ in range(8)]
    rep = graphical.free_wired_domination(cmf, cmw, events)
    assert rep.passed


def test_edge_enumeration_cap():
    with pytest.raises(CapacityError):
        graphical.all_edge_configs(21)


def test_percolation_proxy_probabilities():
    radii = [1, 2]
    probs = graphical.percolation_proxy(
        1.0, model.Zero(), 0.5, radii, samples=40, seed=0, burn_in=10,
    )
    vals = [probs[r] for r in radii]
    assert all(0.0 <= v <= 1.0 for v in vals)
    again = graphical.percolation_proxy(
        1.0, model.Zero(), 0.5, radii, samples=40, seed=0, burn_in=10,
    )
    assert probs == again
