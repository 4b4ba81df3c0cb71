"""Dimer-covering enumeration and the incidence-counting identities."""

import numpy as np
import pytest

from plaqed.coverings import (CoveringConstraintProblem,
                              check_counting_identities,
                              enumerate_valid_coverings)
from plaqed.hamiltonian import ModelParams, build_operator
from plaqed.lattice import distinct_pairs
from plaqed.vbs import SS_OFFSETS, build_product_state, ss_pattern


def test_covering_counts(c16, c20):
    assert len(enumerate_valid_coverings(c16)) == 6
    assert len(enumerate_valid_coverings(c20)) == 4


@pytest.mark.extended
def test_covering_count_large(c32):
    assert len(enumerate_valid_coverings(c32)) == 4


def test_coverings_contain_the_diagonal_patterns(c16, c20):
    for c, extra in ((c16, 2), (c20, 0)):
        found = {p.dimers for p in enumerate_valid_coverings(c)}
        ss = {ss_pattern(c, off).dimers for off in SS_OFFSETS}
        assert ss <= found
        assert len(found - ss) == extra


def test_extra_coverings_are_axial(c16):
    extras = [p for p in enumerate_valid_coverings(c16)
              if set(p.bond_class) == {"axial"}]
    assert len(extras) == 2


def test_every_covering_product_state_is_annihilated(c16, c20):
    for c in (c16, c20):
        op = build_operator(c, ModelParams(j=1.0, gamma=0.4, delta=1.0))
        for pattern in enumerate_valid_coverings(c):
            st = build_product_state(c, pattern)
            _, amps = op.apply_sparse(st.configs, st.amps)
            assert np.linalg.norm(amps) <= 1e-12


def test_deterministic_order(c16):
    a = [p.dimers for p in enumerate_valid_coverings(c16)]
    b = [p.dimers for p in enumerate_valid_coverings(c16)]
    assert a == b


def test_nearest_neighbor_dimers_never_help(c16, c20):
    # admitting nearest-neighbor bonds widens the matching space but the
    # plaquette rule already forces all-diagonal/axial coverings
    for c in (c16, c20):
        base = enumerate_valid_coverings(c)
        widened = enumerate_valid_coverings(
            CoveringConstraintProblem.for_cluster(c, include_nearest=True))
        assert {p.dimers for p in widened} == {p.dimers for p in base}


def test_counting_identities(c16, c20):
    r16 = check_counting_identities(c16)
    assert r16.identity_ok and r16.diagonal_ok and r16.axial_ok
    assert r16.diagonal_counts == {4: 32}
    # length-4 wrap: every axial pair sits in four rectangles
    assert r16.axial_counts == {4: 16}
    r20 = check_counting_identities(c20)
    assert r20.identity_ok and r20.diagonal_ok and r20.axial_ok
    assert r20.diagonal_counts == {4: 40}
    assert r20.axial_counts == {2: 40}


def test_bond_count_helper(c20):
    report = check_counting_identities(c20)
    diag = distinct_pairs(c20.bonds2)[0]
    axial = distinct_pairs(c20.bonds3)[0]
    assert report.bond_count(c20, diag) == 4
    assert report.bond_count(c20, axial) == 2
