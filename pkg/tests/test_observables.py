"""Structure factors, dimer correlations, scaling fits, level tables."""

import numpy as np
import pytest

from plaqed.eigensolver import lowest_eigenpairs
from plaqed.hamiltonian import ModelParams, build_operator
from plaqed.hilbert import (apply_site_permutation, build_momentum_basis,
                            build_sz_basis, expand_to_plain)
from plaqed.lattice import allowed_momenta
from plaqed.observables import (dimer_correlations, energy_differences,
                                fss_extrapolate, spin_correlation_classes,
                                structure_factor,
                                structure_factor_product_state)
from plaqed.vbs import build_ss_state


def test_polarized_state_zone_center(c16):
    top = build_sz_basis(c16, 8)       # fully polarized: one configuration
    state = np.ones(1, dtype=np.complex128)
    val = structure_factor(state, top, c16.momentum(0, 0))
    assert val == pytest.approx(0.25, abs=1e-12)


def test_neel_state_at_pi_pi(c16):
    plain = build_sz_basis(c16, 0)
    cfg = 0
    for s, (x, y) in enumerate(c16.site_coords):
        if (x + y) % 2 == 0:
            cfg |= 1 << s
    state = np.zeros(plain.dim, dtype=np.complex128)
    state[plain.lookup(np.uint64(cfg))] = 1.0
    val = structure_factor(state, plain, c16.momentum(8, 8))
    assert val == pytest.approx(0.25, abs=1e-12)


def test_product_state_structure_factor_analytic(c16, c20):
    # only intra-dimer correlations contribute: 3/(2(N+2)) at Q=(pi,0)
    for c in (c16, c20):
        st = build_ss_state(c, (0, 0))
        q = c.momentum(c.n_sites // 2, 0)
        val = structure_factor_product_state(st, q)
        assert val == pytest.approx(1.5 / (c.n_sites + 2), abs=1e-12)


def test_dense_and_sparse_structure_factors_agree(c16):
    st = build_ss_state(c16, (1, 1))
    plain = build_sz_basis(c16, 0)
    dense = st.to_plain(plain).astype(np.complex128)
    for v in ((8, 0), (0, 0), (8, 8)):
        q = c16.momentum(*v)
        assert structure_factor(dense, plain, q) == pytest.approx(
            structure_factor_product_state(st, q), abs=1e-12)


def _ground_state(c, params, vm, m=1, seed=0):
    basis = build_momentum_basis(c, 0, c.momentum(*vm))
    op = build_operator(c, params)
    res = lowest_eigenpairs(op, basis, m, 1e-10, seed=seed)
    return basis, res.eigenvectors[:, 0]


def test_singlet_sum_rule(c16):
    # (1/N) sum_Q M^2(Q) (N+2) = 3/4 for a global singlet eigenstate
    basis, state = _ground_state(c16, ModelParams(j=1.0, gamma=0.0, delta=0.0),
                                 (0, 0))
    total = sum(structure_factor(state, basis, q) for q in allowed_momenta(c16))
    assert total * (c16.n_sites + 2) / c16.n_sites == pytest.approx(0.75, abs=1e-10)


def test_sector_and_plain_paths_agree(c16):
    params = ModelParams(j=1.0, gamma=0.2, delta=0.5)
    basis, state = _ground_state(c16, params, (0, 0))
    plain = build_sz_basis(c16, 0)
    dense = expand_to_plain(state, basis, plain)
    for v in ((8, 0), (8, 8), (4, 4)):
        q = c16.momentum(*v)
        assert structure_factor(state, basis, q) == pytest.approx(
            structure_factor(dense, plain, q), abs=1e-10)
    rep_s = dimer_correlations(state, basis, "second")
    rep_p = dimer_correlations(dense, plain, "second")
    for a, b in zip(rep_s.entries, rep_p.entries):
        assert (a.site, a.r2) == (b.site, b.r2)
        assert a.value == pytest.approx(b.value, abs=1e-10)
    assert rep_s.farthest.value == pytest.approx(rep_p.farthest.value, abs=1e-10)


def test_translation_consistency(c16):
    basis, state = _ground_state(c16, ModelParams(j=1.0, gamma=0.3, delta=0.6),
                                 (8, 0))
    q = c16.momentum(8, 8)
    before = structure_factor(state, basis, q)
    moved = apply_site_permutation(
        basis, c16.translations[c16.site_index((1, 1))], state)
    moved /= np.linalg.norm(moved)
    assert structure_factor(moved, basis, q) == pytest.approx(before, abs=1e-10)


def test_product_state_connected_correlations_vanish(c16):
    st = build_ss_state(c16, (0, 0))
    plain = build_sz_basis(c16, 0)
    dense = st.to_plain(plain).astype(np.complex128)
    rep = dimer_correlations(dense, plain, "second")
    assert rep.reference_value == pytest.approx(-0.75, abs=1e-12)
    assert max(abs(e.value) for e in rep.entries) < 1e-12


def test_farthest_entry_selection(c20):
    st = build_ss_state(c20, (0, 0))
    plain = build_sz_basis(c20, 0)
    dense = st.to_plain(plain).astype(np.complex128)
    rep = dimer_correlations(dense, plain, "second")
    assert rep.farthest is not None
    assert rep.farthest.in_reference_pattern
    assert not rep.farthest.overlaps_reference
    dists = [e.distance for e in rep.entries
             if e.in_reference_pattern and not e.overlaps_reference]
    assert rep.farthest.distance == pytest.approx(max(dists))


def test_first_neighbor_class(c16):
    basis, state = _ground_state(c16, ModelParams(j=1.0, gamma=0.0, delta=0.15),
                                 (0, 0))
    rep = dimer_correlations(state, basis, "first")
    assert rep.r1 == (1, 0)
    assert len(rep.entries) == 2 * c16.n_sites - 1
    assert rep.farthest.r2 == (1, 0)


def test_fss_fit():
    fit = fss_extrapolate([(20, 0.1), (32, 0.1)])
    assert fit.m0_squared == pytest.approx(0.8, abs=1e-12)
    assert fit.const == pytest.approx(0.0, abs=1e-12)
    assert not fit.order_absent
    fit0 = fss_extrapolate([(20, 0.05), (32, 0.05 * np.sqrt(20.0 / 32.0))])
    assert fit0.m0_squared == pytest.approx(0.0, abs=1e-12)
    fit_neg = fss_extrapolate([(20, 0.02), (32, 0.002)])
    assert fit_neg.m0_squared < 0
    assert fit_neg.order_absent
    with pytest.raises(ValueError):
        fss_extrapolate([(20, 0.1)])
    with pytest.raises(ValueError):
        fss_extrapolate([(20, 0.1), (20, 0.2)])


def test_energy_differences_with_spin_tags(c16):
    op = build_operator(c16, ModelParams(j=1.0, gamma=0.5, delta=1.0))
    spectra = []
    for sz in (0, 1):
        for vm in ((0, 0), (8, 0)):
            basis = build_momentum_basis(c16, sz, c16.momentum(*vm))
            spectra.append(lowest_eigenpairs(op, basis, 3, 1e-10, seed=2))
    rows = energy_differences(spectra)
    assert rows[0].difference == pytest.approx(0.0, abs=1e-12)
    zero_rows = [r for r in rows if r.sz == 0 and abs(r.energy) < 1e-9]
    assert zero_rows and all(r.tag == "singlet" for r in zero_rows)
    assert any(r.tag == "triplet" for r in rows if r.sz == 0)


def test_unnormalized_states_rejected(c16):
    plain = build_sz_basis(c16, 0)
    state = np.ones(plain.dim, dtype=np.complex128)
    with pytest.raises(ValueError):
        structure_factor(state, plain, c16.momentum(0, 0))
    with pytest.raises(ValueError):
        dimer_correlations(state, plain)


def test_disallowed_momentum_rejected(c16):
    from plaqed.lattice import Momentum
    plain = build_sz_basis(c16, 0)
    st = build_ss_state(c16, (0, 0)).to_plain(plain).astype(np.complex128)
    with pytest.raises(ValueError):
        structure_factor(st, plain, Momentum(1, 2, 16))


def test_correlation_classes_identity(c16):
    basis, state = _ground_state(c16, ModelParams(j=1.0, gamma=0.0, delta=0.0),
                                 (0, 0))
    classes = spin_correlation_classes(state, basis)
    ident = c16.identity_translation()
    assert classes[ident] == pytest.approx(0.75)
    # global singlet: correlations sum to zero over the lattice
    assert np.sum(classes) == pytest.approx(0.0, abs=1e-10)
