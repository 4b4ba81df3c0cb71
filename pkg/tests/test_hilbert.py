"""Configuration bases: dimensions, symmetrization, representative lookup."""

from math import comb

import numpy as np
import pytest

from plaqed import kernels
from plaqed.hilbert import (build_momentum_basis, build_sz_basis,
                            expand_to_plain, find_representative, load_basis,
                            project_to_sector, save_basis)
from plaqed.lattice import allowed_momenta, build_cluster

from .oracle import brute_force_orbit_count


def test_sz_dimensions(c16, c20):
    assert build_sz_basis(c16, 0).dim == 12870
    assert build_sz_basis(c20, 0).dim == 184756
    c4 = build_cluster(((2, 0), (0, 2)))
    assert build_sz_basis(c4, 2).dim == 1


def test_sz_validation(c16):
    with pytest.raises(ValueError):
        build_sz_basis(c16, 0.5)
    with pytest.raises(ValueError):
        build_sz_basis(c16, 9)


def test_momentum_completeness(c16, c20):
    for c, sz in ((c16, 0), (c16, 1), (c20, 0)):
        total = sum(build_momentum_basis(c, sz, m).dim for m in allowed_momenta(c))
        assert total == comb(c.n_sites, c.n_sites // 2 + sz)


def test_zone_center_dimension_matches_orbit_count(c16, c20):
    # Burnside lower bound with equality violated by symmetric orbits
    b16 = build_momentum_basis(c16, 0, c16.momentum(0, 0))
    assert b16.dim >= 12870 // 16
    assert b16.dim == brute_force_orbit_count(c16, 8)
    b20 = build_momentum_basis(c20, 0, c20.momentum(0, 0))
    assert b20.dim == 9278                       # frozen brute-force orbit count
    assert b20.dim >= 184756 // 20


def test_find_representative_identity_and_phases(c16):
    m = c16.momentum(8, 0)   # (pi, 0)
    basis = build_momentum_basis(c16, 0, m)
    rep = basis.reps[5]
    idx, phase = find_representative(rep, basis)
    assert idx == 5 and phase == pytest.approx(1.0)
    # translate by (1, 0): phase exp(-i k.t) = -1 at k = (pi, 0)
    t10 = c16.site_index((1, 0))
    cfg = kernels.translate_configs(np.array([rep], dtype=np.uint64),
                                    c16.translations[t10])[0]
    idx, phase = find_representative(cfg, basis)
    assert idx == 5
    assert phase == pytest.approx(-1.0)
    # zone center: always phase 1
    b0 = build_momentum_basis(c16, 0, c16.momentum(0, 0))
    cfg0 = kernels.translate_configs(np.array([b0.reps[17]], dtype=np.uint64),
                                     c16.translations[t10])[0]
    idx0, phase0 = find_representative(cfg0, b0)
    assert idx0 == 17 and phase0 == pytest.approx(1.0)


def test_find_representative_round_trip(c20):
    m = c20.momentum(10, 0)
    basis = build_momentum_basis(c20, 0, m)
    rng = np.random.default_rng(7)
    for _ in range(100):
        j = int(rng.integers(basis.dim))
        t = int(rng.integers(c20.n_sites))
        cfg = kernels.translate_configs(
            np.array([basis.reps[j]], dtype=np.uint64), c20.translations[t])[0]
        res = find_representative(cfg, basis)
        assert res is not None and res[0] == j


def test_find_representative_errors_and_absence(c16):
    m = c16.momentum(8, 0)
    basis = build_momentum_basis(c16, 0, m)
    with pytest.raises(ValueError):
        find_representative(np.uint64(0b111), basis)   # wrong popcount
    # a translation-invariant configuration (alternating columns) is
    # incompatible with (pi, 0)... find one config whose orbit is absent
    table_reps = basis._table.reps
    absent = [r for r in table_reps if basis.lookup(r) < 0]
    assert absent, "sector excludes some orbits"
    assert find_representative(absent[0], basis) is None


def test_norms_match_explicit_symmetrization(c16):
    plain = build_sz_basis(c16, 0)
    m = c16.momentum(4, 8)
    basis = build_momentum_basis(c16, 0, m)
    phases = c16.phases(m)
    rng = np.random.default_rng(3)
    for j in rng.integers(basis.dim, size=12):
        vec = np.zeros(plain.dim, dtype=np.complex128)
        rep = np.array([basis.reps[j]], dtype=np.uint64)
        for t in range(c16.n_sites):
            cfg = kernels.translate_configs(rep, c16.translations[t])[0]
            vec[plain.lookup(cfg)] += phases[t] / c16.n_sites
        assert np.linalg.norm(vec) == pytest.approx(basis.norms[j], abs=1e-12)


def test_expand_project_round_trip(c16):
    plain = build_sz_basis(c16, 0)
    m = c16.momentum(4, 4)
    basis = build_momentum_basis(c16, 0, m)
    rng = np.random.default_rng(11)
    v = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    v /= np.linalg.norm(v)
    dense = expand_to_plain(v, basis, plain)
    assert np.linalg.norm(dense) == pytest.approx(1.0, abs=1e-12)
    back = project_to_sector(dense, plain, basis)
    assert np.allclose(back, v, atol=1e-12)


def test_momentum_rejected_when_not_allowed(c20):
    from plaqed.lattice import Momentum
    with pytest.raises(ValueError):
        build_momentum_basis(c20, 0, Momentum(1, 0, 20))


def test_basis_cache_round_trip(tmp_path, c16):
    basis = build_momentum_basis(c16, 0, c16.momentum(8, 8))
    path = tmp_path / "basis.npz"
    save_basis(path, basis)
    loaded = load_basis(path, c16)
    assert loaded.dim == basis.dim
    assert np.array_equal(loaded.reps, basis.reps)
    from plaqed.lattice import cluster_by_name
    with pytest.raises(ValueError):
        load_basis(path, cluster_by_name("20"))
