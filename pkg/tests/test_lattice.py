import itertools

import pytest

from wetting_lab import lattice
from wetting_lab.errors import CapacityError, ConfigurationError


def test_neighbors_full_universe():
    nbs = lattice.neighbors((0, 0), lattice.FULL)
    assert nbs == {(1, 0), (-1, 0), (0, 1), (0, -1)}


def test_neighbors_clipped_at_wall():
    # sites below height 1 do not exist in the half-space
    nbs = lattice.neighbors((0, 1), lattice.SEMI_INFINITE)
    assert nbs == {(1, 1), (-1, 1), (0, 2)}
    assert len(lattice.neighbors((0, 0, 1), lattice.SEMI_INFINITE)) == 5


def test_mirror_site_swaps_wall_and_zero_layer():
    assert lattice.mirror_site((2, 1)) == (-2, 0)
    assert lattice.mirror_site((0, 3)) == (0, -2)
    for s in [(1, 2), (-3, 1), (0, 5)]:
        assert lattice.mirror_site(lattice.mirror_site(s)) == s


def test_reflections():
    assert lattice.reflect_across_wall_plane((4, 2)) == (4, -1)
    assert lattice.negate_last((4, 2)) == (4, -2)


def test_semibox_sites_sorted_and_counted():
    box = lattice.SemiBox(d=2, n=2, m=3)
    sites = lattice.sites_of(box)
    assert len(sites) == box.cardinality() == 5 * 3
    assert sites == sorted(sites)
    assert all(1 <= s[-1] <= 3 and -2 <= s[0] <= 2 for s in sites)


def test_semibox_three_dimensional():
    box = lattice.SemiBox(d=3, n=1, m=2)
    assert box.cardinality() == 9 * 2
    assert len(lattice.sites_of(box)) == 18


def test_wall_sites():
    box = lattice.SemiBox(d=2, n=1, m=2)
    assert lattice.wall_sites(box) == [(-1, 1), (0, 1), (1, 1)]


def test_extended_box_reflections():
    mirror = lattice.ExtendedBox(d=2, n=1, reflection="mirror")
    sites = set(lattice.sites_of(mirror))
    assert {s[-1] for s in sites} == {0, 1}
    negate = lattice.ExtendedBox(d=2, n=1, reflection="negate")
    assert {s[-1] for s in lattice.sites_of(negate)} == {-1, 1}
    assert mirror.cardinality() == negate.cardinality() == 6


def test_full_box():
    box = lattice.FullBox(d=2, m=1, n=2)
    assert box.cardinality() == 3 * 5
    assert box.default_universe() == lattice.FULL


def test_explicit_region():
    reg = lattice.Explicit({(0, 1), (0, 2)})
    assert reg.d == 2
    assert reg.cardinality() == 2
    with pytest.raises(ValueError):
        lattice.Explicit({(0, 1), (0, 1, 1)})


def test_boundary_edges_smallest_box():
    # SemiBox(1,1): three wall sites in a row.  Interior: the 2 horizontal
    # bonds.  Frontier: 3 bonds up plus one sideways bond at each end; no
    # bonds below the wall exist in the half-space.
    interior, frontier = lattice.boundary_edges(lattice.SemiBox(d=2, n=1, m=1))
    assert len(interior) == 2
    assert len(frontier) == 5
    assert all(isinstance(e, frozenset) and len(e) == 2 for e in interior)


def test_boundary_edges_against_direct_enumeration():
    box = lattice.SemiBox(d=2, n=2, m=3)
    inside = set(lattice.sites_of(box))
    expected_interior = set()
    expected_frontier = set()
    for s in inside:
        for axis, step in itertools.product((0, 1), (-1, 1)):
            nb = list(s)
            nb[axis] += step
            nb = tuple(nb)
            if nb[-1] < 1:
                continue
            if nb in inside:
                expected_interior.add(frozenset((s, nb)))
            else:
                expected_frontier.add(frozenset((s, nb)))
    interior, frontier = lattice.boundary_edges(box)
    assert interior == expected_interior
    assert frontier == expected_frontier


def test_boundary_edges_full_universe_includes_below_wall():
    _, frontier_semi = lattice.boundary_edges(
        lattice.SemiBox(d=2, n=1, m=1), lattice.SEMI_INFINITE
    )
    _, frontier_full = lattice.boundary_edges(
        lattice.SemiBox(d=2, n=1, m=1), lattice.FULL
    )
    assert len(frontier_full) == len(frontier_semi) + 3


def test_site_cap():
    with pytest.raises(CapacityError):
        lattice.sites_of(lattice.SemiBox(d=2, n=4000, m=4000))


def test_boundary_condition_spins():
    assert lattice.plus_bc().spin_at((5, -2)) == 1
    assert lattice.minus_bc().spin_at((5, -2)) == -1
    mp = lattice.minus_plus_bc()
    assert mp.spin_at((0, 3)) == -1
    assert mp.spin_at((0, 0)) == 1
    assert lattice.free_bc().spin_at((0, 0)) is None
    fixed = lattice.fixed_bc({(0, 0): -1})
    assert fixed.spin_at((0, 0)) == -1
    with pytest.raises(ConfigurationError):
        fixed.spin_at((9, 9))
