"""Measured quantities: Q-dependent magnetic susceptibility, dimer-dimer
correlations, energy-difference tables and finite-size-scaling fits.

Two evaluation paths exist for two- and four-point functions: a direct
per-bond path over plain-basis (or sparse product-state) amplitudes, and a
translation-averaged path acting inside a momentum sector.  For momentum
eigenstates the translation average equals the per-bond value, and the two
paths agree; tests pin this down on the small clusters.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .hamiltonian import TermGroup, apply_group
from .hilbert import config_bits
from .lattice import allowed_momenta
from .vbs import ss_pattern

_IMAG_TOL = 1e-7


def _check_normalized(state, atol=1e-8):
    nrm = np.linalg.norm(state)
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"state norm {nrm} is not 1 within {atol}")


def _expect(group, basis, state):
    return complex(np.vdot(state, apply_group(group, basis, state)))


def _real(value, what):
    if abs(value.imag) > _IMAG_TOL:
        raise ValueError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def spin_correlation_classes(state, basis):
    """C[t] = (1/N) sum_s <S_s . S_(s+u_t)> for every translation t.

    Momentum sectors use the translation-averaged bond sum (exact for
    momentum eigenstates); the plain basis averages explicit pair values.
    """
    _check_normalized(state)
    cluster = basis.cluster
    n = cluster.n_sites
    out = np.empty(n)
    ident = cluster.identity_translation()
    if basis.momentum is None:
        pair = spin_pair_correlations(state, basis)
        for t in range(n):
            out[t] = np.mean([pair[s, cluster.translations[t][s]] for s in range(n)])
        return out
    for t in range(n):
        if t == ident:
            out[t] = 0.75
            continue
        pairs = [(s, int(cluster.translations[t][s])) for s in range(n)]
        group = TermGroup.heisenberg(pairs, f"cls{t}@{cluster.key}")
        out[t] = _real(_expect(group, basis, state), f"C[{t}]") / n
    return out


def spin_pair_correlations(state, basis):
    """<S_i . S_j> for all site pairs of a plain-basis state."""
    _check_normalized(state)
    if basis.momentum is not None:
        raise ValueError("spin_pair_correlations expects a plain Sz basis")
    n = basis.cluster.n_sites
    bits = config_bits(basis.reps, n).astype(np.float64) - 0.5
    prob = np.abs(np.asarray(state)) ** 2
    out = np.empty((n, n))
    for i in range(n):
        out[i, i] = 0.75
        for j in range(i + 1, n):
            zz = float(prob @ (bits[:, i] * bits[:, j]))
            differ = bits[:, i] != bits[:, j]
            mask = np.uint64((1 << i) | (1 << j))
            dst = basis.reps[differ] ^ mask
            pos = np.searchsorted(basis.reps, dst)
            flip = complex(np.vdot(state[pos], state[differ]))
            out[i, j] = out[j, i] = zz + 0.5 * _real(flip, f"<S_{i}.S_{j}>")
    return out


def structure_factor(state, basis, momentum):
    """M_N^2(Q) = (1/(N(N+2))) sum_ij <S_i.S_j> exp(iQ.(r_j - r_i))."""
    cluster = basis.cluster
    if momentum not in set(allowed_momenta(cluster)):
        raise ValueError(f"momentum {momentum} not allowed on cluster {cluster.key}")
    classes = spin_correlation_classes(state, basis)
    phases = np.conj(cluster.phases(momentum))  # exp(+i Q . u_t)
    val = complex(np.sum(classes * phases)) / (cluster.n_sites + 2)
    return _real(val, f"M^2({momentum.label})")


def structure_factor_product_state(vbs_state, momentum):
    """Structure factor of a sparse dimer-product state (exact sparse sums)."""
    cluster = vbs_state.cluster
    if momentum not in set(allowed_momenta(cluster)):
        raise ValueError(f"momentum {momentum} not allowed on cluster {cluster.key}")
    n = cluster.n_sites
    configs, amps = vbs_state.configs, vbs_state.amps
    bits = config_bits(configs, n).astype(np.float64) - 0.5
    prob = amps ** 2
    coords = cluster.site_coords
    kx, ky = momentum.k
    total = 0.0 + 0.0j
    for i in range(n):
        for j in range(n):
            if i == j:
                cij = 0.75
            else:
                zz = float(prob @ (bits[:, i] * bits[:, j]))
                differ = bits[:, i] != bits[:, j]
                mask = np.uint64((1 << i) | (1 << j))
                dst = configs[differ] ^ mask
                pos = np.minimum(np.searchsorted(configs, dst), configs.shape[0] - 1)
                hit = configs[pos] == dst
                flip = float(np.sum(amps[pos[hit]] * amps[differ][hit]))
                cij = zz + 0.5 * flip
            phase = np.exp(1j * (kx * (coords[j][0] - coords[i][0])
                                 + ky * (coords[j][1] - coords[i][1])))
            total += cij * phase
    return _real(total / (n * (n + 2)), f"M^2({momentum.label})")


_CLASS_DIRECTIONS = {
    "first": ((1, 0), (0, 1)),
    "second": ((1, 1), (1, -1)),
}


@dataclass
class DimerCorrelationEntry:
    site: int            # target bond start site
    r: tuple             # its coordinates
    r2: tuple            # target bond direction
    value: float         # connected correlator
    distance: float      # minimal-image midpoint distance to the reference
    overlaps_reference: bool
    in_reference_pattern: bool


@dataclass
class DimerCorrelationReport:
    bond_class: str
    reference_site: int
    r1: tuple
    reference_value: float          # <S_0 . S_r1>
    entries: list
    farthest: DimerCorrelationEntry = None   # D_N(r_m)


def _midpoint_distance(cluster, a2, b2):
    """Minimal-image distance between bond midpoints (arguments are twice
    the midpoints, integer)."""
    t1, t2 = (np.array(v) for v in cluster.spanning_vectors)
    d = np.array(a2) - np.array(b2)
    best = math.inf
    for a in range(-2, 3):
        for b in range(-2, 3):
            v = d + 2 * (a * t1 + b * t2)
            best = min(best, float(np.hypot(v[0], v[1])) / 2.0)
    return best


def dimer_correlations(state, basis, bond_class="second", reference=None):
    """Connected dimer-dimer correlations
    <(S_0.S_r1)(S_r.S_r+r2)> - <S_0.S_r1><S_r.S_r+r2> for every bond of the
    class.

    The reference bond starts at the origin site with r1 = (1,1) (second-
    neighbor class) or (1,0) (first-neighbor class) unless overridden by
    reference=(site, r1).  farthest (D_N(r_m)) picks the target at maximal
    torus midpoint distance among non-overlapping targets belonging to the
    reference bond's own dimer pattern (second class) or parallel to the
    reference (first class).
    """
    _check_normalized(state)
    if bond_class not in _CLASS_DIRECTIONS:
        raise ValueError(f"bond_class must be one of {sorted(_CLASS_DIRECTIONS)}")
    cluster = basis.cluster
    n = cluster.n_sites
    directions = _CLASS_DIRECTIONS[bond_class]
    if reference is None:
        ref_site = cluster.site_index((0, 0))
        r1 = directions[0] if bond_class == "first" else (1, 1)
    else:
        ref_site, r1 = reference
        r1 = tuple(r1)
    ref_pair = (ref_site, cluster.site_index(cluster.site_coords[ref_site] + r1))

    sector = basis.momentum is not None
    classes = spin_correlation_classes(state, basis) if sector else None
    pair_corr = None if sector else spin_pair_correlations(state, basis)

    def bond_mean(i, j, d):
        if sector:
            return classes[cluster.site_index(d)]
        return pair_corr[i, j]

    ref_value = bond_mean(ref_pair[0], ref_pair[1], r1)

    # reference dimer pattern for the r_m selection (second class)
    pattern_pairs = set()
    if bond_class == "second":
        offset = tuple(int(c) % 2 for c in cluster.site_coords[ref_site])
        pattern_pairs = set(ss_pattern(cluster, offset).dimers)

    ref2 = 2 * cluster.site_coords[ref_site] + np.array(r1)
    entries = []
    for s in range(n):
        for d in directions:
            t = cluster.site_index(cluster.site_coords[s] + d)
            if (s, d) == (ref_pair[0], r1):
                continue
            quad = (ref_pair[0], ref_pair[1], s, t)
            if sector:
                pairs = [tuple(int(cluster.translations[tt][q]) for q in quad)
                         for tt in range(n)]
                group = TermGroup.build(
                    [(kernels.KIND_DP, p, 1.0) for p in pairs], "dd")
                raw = _real(_expect(group, basis, state), "dimer corr") / n
            else:
                group = TermGroup.build([(kernels.KIND_DP, quad, 1.0)], "dd")
                raw = _real(_expect(group, basis, state), "dimer corr")
            value = raw - ref_value * bond_mean(s, t, d)
            overlaps = len({ref_pair[0], ref_pair[1], s, t}) < 4
            key = (min(s, t), max(s, t))
            entries.append(DimerCorrelationEntry(
                site=s, r=tuple(int(c) for c in cluster.site_coords[s]),
                r2=d, value=value,
                distance=_midpoint_distance(cluster, ref2,
                                            2 * cluster.site_coords[s] + np.array(d)),
                overlaps_reference=overlaps,
                in_reference_pattern=key in pattern_pairs))

    if bond_class == "second":
        candidates = [e for e in entries
                      if e.in_reference_pattern and not e.overlaps_reference]
    else:
        candidates = [e for e in entries
                      if e.r2 == tuple(r1) and not e.overlaps_reference]
    farthest = max(candidates, key=lambda e: (e.distance, (-e.site, e.r2))) \
        if candidates else None
    return DimerCorrelationReport(
        bond_class=bond_class, reference_site=ref_pair[0], r1=tuple(r1),
        reference_value=ref_value, entries=entries, farthest=farthest)


@dataclass
class FssFit:
    """Finite-size extrapolation M_N^2 = m0^2/8 + const/sqrt(N)."""

    points: tuple
    m0_squared: float
    const: float
    order_absent: bool


def fss_extrapolate(points):
    """Least-squares fit of M_N^2 against 1/sqrt(N); exact for two sizes.

    Returns m0^2 = 8 x intercept; m0^2 <= 0 is reported as order absent.
    """
    points = [(int(n), float(v)) for n, v in points]
    if len(points) < 2:
        raise ValueError("need at least two cluster sizes")
    sizes = [n for n, _ in points]
    if len(set(sizes)) != len(sizes):
        raise ValueError("duplicate cluster sizes in extrapolation input")
    x = np.array([1.0 / math.sqrt(n) for n, _ in points])
    y = np.array([v for _, v in points])
    slope, intercept = np.polyfit(x, y, 1)
    m0sq = 8.0 * float(intercept)
    return FssFit(points=tuple(points), m0_squared=m0sq, const=float(slope),
                  order_absent=m0sq <= 0.0)


@dataclass
class EnergyLevel:
    sz: float
    momentum: object
    level: int
    energy: float
    difference: float
    tag: str = None      # "singlet" / "triplet" for sz=0 levels when resolvable


def energy_differences(spectra, rtol=1e-8):
    """Levels of all given sector spectra relative to the global minimum.

    Sz=0 levels acquire a singlet/triplet tag when sz=1 spectra are
    supplied: a level matching an sz=1 energy (within the degeneracy
    threshold) is part of a spin multiplet.
    """
    if not spectra:
        return []
    e0 = min(float(r.eigenvalues[0]) for r in spectra if len(r.eigenvalues))
    sz1_levels = np.array(sorted(
        float(e) for r in spectra for e in r.eigenvalues
        if r.sector[0] is not None and abs(r.sector[0] - 1.0) < 1e-9))
    rows = []
    for r in spectra:
        sz, mom = r.sector
        for i, e in enumerate(r.eigenvalues):
            tag = None
            if sz is not None and abs(sz) < 1e-9 and sz1_levels.size:
                near = np.min(np.abs(sz1_levels - e))
                tag = "triplet" if near <= rtol * max(1.0, abs(e)) else "singlet"
            rows.append(EnergyLevel(sz=sz, momentum=mom, level=i,
                                    energy=float(e), difference=float(e) - e0,
                                    tag=tag))
    rows.sort(key=lambda r: (r.energy, str(r.momentum), r.level))
    return rows
