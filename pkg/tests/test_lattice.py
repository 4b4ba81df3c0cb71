"""Cluster geometry: bond tables, plaquettes, symmetries, momenta."""

import numpy as np
import pytest

from plaqed.lattice import (allowed_momenta, build_cluster, cluster_by_name,
                            distinct_pairs, enumerate_plaquettes)


def test_catalog_sizes():
    for name, n in (("16", 16), ("20", 20), ("32", 32)):
        c = cluster_by_name(name)
        assert c.n_sites == n
        assert len(c.bonds1) == 2 * n
        assert len(c.bonds2) == 2 * n
        assert len(c.bonds3) == 2 * n
        assert len(enumerate_plaquettes(c)) == 2 * n


def test_rejects_bad_spanning_vectors():
    with pytest.raises(ValueError):
        build_cluster(((2, 2), (1, 0)))    # odd coordinate sum
    with pytest.raises(ValueError):
        build_cluster(((2, 2), (4, 4)))    # collinear


def test_bond_sublattice_rules(c16, c20, c32):
    for c in (c16, c20, c32):
        sub = c.sublattice
        assert all(sub[i] != sub[j] for i, j in c.bonds1)
        assert all(sub[i] == sub[j] for i, j in c.bonds2)
        assert all(sub[i] == sub[j] for i, j in c.bonds3)


def test_bond_multiplicities(c16, c20, c32):
    # bonds1/bonds2 have no duplicate unordered pairs on the catalog; the
    # 4x4 torus doubles every axial pair (length-4 wrap), the tilted
    # clusters do not
    for c in (c16, c20, c32):
        assert len(distinct_pairs(c.bonds1)) == 2 * c.n_sites
        assert len(distinct_pairs(c.bonds2)) == 2 * c.n_sites
    assert len(distinct_pairs(c16.bonds3)) == c16.n_sites
    assert len(distinct_pairs(c20.bonds3)) == 2 * c20.n_sites
    assert len(distinct_pairs(c32.bonds3)) == 2 * c32.n_sites


def test_translations_form_a_free_group(c20):
    n = c20.n_sites
    trans = c20.translations
    ident = c20.identity_translation()
    assert np.array_equal(trans[ident], np.arange(n))
    # free action: only the identity fixes any site
    for t in range(n):
        if t != ident:
            assert not np.any(trans[t] == np.arange(n))
    # closure: composition of two translations is a translation
    seen = {tuple(trans[t]) for t in range(n)}
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.integers(n, size=2)
        comp = trans[a][trans[b]]
        assert tuple(comp) in seen


def test_plaquette_structure(c16, c20):
    for c in (c16, c20):
        plaqs = enumerate_plaquettes(c)
        horizontal = [p for p in plaqs if p.orientation == "horizontal"]
        vertical = [p for p in plaqs if p.orientation == "vertical"]
        assert len(horizontal) == c.n_sites and len(vertical) == c.n_sites
        assert len({frozenset(p.sites) for p in plaqs}) == 2 * c.n_sites
        diag = set(distinct_pairs(c.bonds2))
        axial = set(distinct_pairs(c.bonds3))
        for p in plaqs:
            for tri in (p.a_triple, p.b_triple):
                pairs = [(min(a, b), max(a, b))
                         for i, a in enumerate(tri) for b in tri[i + 1:]]
                assert sum(pr in diag for pr in pairs) == 2
                assert sum(pr in axial for pr in pairs) == 1


def test_plaquette_set_closed_under_translations(c20):
    plaqs = enumerate_plaquettes(c20)
    keys = {(p.orientation, frozenset(p.sites)) for p in plaqs}
    for t in range(0, c20.n_sites, 7):
        perm = c20.translations[t]
        for p in plaqs[:10]:
            image = (p.orientation, frozenset(int(perm[s]) for s in p.sites))
            assert image in keys


def test_sublattice_forms_rotated_square_lattice(c20):
    # A-site coordinates map to u=(x+y)/2, v=(y-x)/2; diagonal bonds become
    # nearest neighbors of that lattice and axial bonds its second neighbors
    coords = c20.site_coords
    for bonds, expected in ((c20.bonds2, {(1, 0), (0, 1)}),
                            (c20.bonds3, {(1, 1), (1, -1)})):
        for i, j in bonds[:20]:
            if c20.sublattice[i] != 0:
                continue
            # displacement on the torus: take the generating direction
            dx, dy = (coords[j] - coords[i])
            # reduce modulo the spanning lattice to the short representative
            best = min(
                ((dx + a * 4 + b * -2, dy + a * 2 + b * 4)
                 for a in range(-2, 3) for b in range(-2, 3)),
                key=lambda v: v[0] ** 2 + v[1] ** 2)
            u, v = (best[0] + best[1]) // 2, (best[1] - best[0]) // 2
            assert (abs(u), abs(v)) in {(abs(a), abs(b)) for a, b in expected}


def test_momentum_sets(c16, c20, c32):
    for c in (c16, c20, c32):
        moms = allowed_momenta(c)
        assert len(moms) == c.n_sites
        labels = {m.label for m in moms}
        assert "(0,0)" in labels and "(pi,pi)" in labels
    labels16 = {m.label for m in allowed_momenta(c16)}
    assert {"(pi,0)", "(0,pi)", "(pi,pi)", "(pi,pi/2)"} <= labels16
    assert "(pi,pi/2)" not in {m.label for m in allowed_momenta(c20)}
    assert "(pi,pi/2)" in {m.label for m in allowed_momenta(c32)}


def test_point_group_permutes_momenta(c16, c20):
    for c in (c16, c20):
        moms = {(m.vx, m.vy) for m in allowed_momenta(c)}
        for op in c.point_group_ops:
            for vx, vy in moms:
                gv = op.matrix @ np.array([vx, vy])
                assert (int(gv[0]) % c.n_sites, int(gv[1]) % c.n_sites) in moms


def test_point_groups_of_catalog(c16, c20, c32):
    assert {op.name for op in c16.point_group_ops} == \
        {"e", "r90", "r180", "r270", "mx", "my", "md", "mad"}
    assert {op.name for op in c20.point_group_ops} == {"e", "r90", "r180", "r270"}
    assert {op.name for op in c32.point_group_ops} == \
        {"e", "r90", "r180", "r270", "mx", "my", "md", "mad"}


def test_momentum_parsing_helpers(c16):
    m = c16.momentum_from_k(np.pi, 0.0)
    assert (m.vx, m.vy) == (8, 0)
    with pytest.raises(ValueError):
        c16.momentum_from_k(1.0, 0.0)
    with pytest.raises(ValueError):
        c16.momentum(3, 1)  # not on the reciprocal lattice of the torus


def test_plaquettes_rejected_on_tiny_cluster():
    c4 = build_cluster(((2, 0), (0, 2)))
    assert c4.n_sites == 4
    with pytest.raises(ValueError):
        enumerate_plaquettes(c4)


def test_cluster_dump_contains_tables(c16):
    text = c16.to_text()
    assert "bonds1" in text and "plaquettes (32):" in text
    assert "allowed momenta:" in text
