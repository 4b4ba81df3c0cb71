"""Dimer-product valence-bond states.

The four Shastry-Sutherland product states (diagonal dimers, alternating
orientation, period 2) are exact zero-energy eigenstates of the plaquette
Hamiltonian; their translated copies are labeled by offsets (0,0), (1,0),
(0,1), (1,1).  On the 16-site cluster two additional all-axial patterns
wrap the length-4 boundary and are likewise annihilated.

Product states are stored sparsely: 2^(N/2) configurations of amplitude
+-2^(-N/4).  The singlet sign convention puts the lexicographically
smaller site first in each dimer: (|up_a down_b> - |down_a up_b>)/sqrt(2).
"""

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import project_sparse_to_sector
from .lattice import distinct_pairs

SS_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class DimerPattern:
    """Perfect matching of the cluster into site pairs.

    dimers are ordered pairs (smaller site index first), sorted; bond_class
    classifies each dimer as "diagonal" (2nd neighbor), "axial" (3rd
    neighbor, distance 2) or "nearest".
    """

    dimers: tuple
    bond_class: tuple
    offset: tuple = None

    @property
    def n_dimers(self):
        return len(self.dimers)


def classify_pair(cluster, i, j):
    key = (min(i, j), max(i, j))
    for name, bonds in (("nearest", cluster.bonds1), ("diagonal", cluster.bonds2),
                        ("axial", cluster.bonds3)):
        if key in set(distinct_pairs(bonds)):
            return name
    return "other"


def make_pattern(cluster, pairs, offset=None):
    """DimerPattern from site pairs; validates the perfect matching."""
    seen = set()
    dimers = []
    for i, j in pairs:
        i, j = int(i), int(j)
        if i == j or i in seen or j in seen:
            raise ValueError("pairs do not form a perfect matching")
        seen.update((i, j))
        dimers.append((min(i, j), max(i, j)))
    if len(seen) != cluster.n_sites:
        raise ValueError(f"matching covers {len(seen)} of {cluster.n_sites} sites")
    dimers = tuple(sorted(dimers))
    classes = tuple(classify_pair(cluster, i, j) for i, j in dimers)
    return DimerPattern(dimers=dimers, bond_class=classes, offset=offset)


def ss_pattern(cluster, offset):
    """Shastry-Sutherland diagonal-dimer pattern translated by offset.

    Sites congruent to offset mod 2 pair along (+1,+1); sites congruent to
    offset+(1,0) pair along (+1,-1).  Requires even spanning coordinates
    (guaranteed by build_cluster) so the period-2 pattern closes.
    """
    offset = tuple(int(o) % 2 for o in offset)
    if offset not in SS_OFFSETS:
        raise ValueError(f"offset must be one of {SS_OFFSETS}")
    pairs = []
    for s, (x, y) in enumerate(cluster.site_coords):
        rx, ry = (x - offset[0]) % 2, (y - offset[1]) % 2
        if (rx, ry) == (0, 0):
            pairs.append((s, cluster.site_index((x + 1, y + 1))))
        elif (rx, ry) == (1, 0):
            pairs.append((s, cluster.site_index((x + 1, y - 1))))
    return make_pattern(cluster, pairs, offset=offset)


def extra_axial_patterns(cluster):
    """The two additional zero-energy patterns of the 16-site cluster.

    All dimers are axial and wrap the length-4 boundary: one sublattice
    pairs along (0,2), the other along (2,0); the second pattern is the
    (1,0) translate of the first.  Raises when the cluster geometry does
    not close the construction (only length-4 spans do).
    """
    patterns = []
    for flip in (0, 1):
        pairs = []
        used = set()
        for s, (x, y) in enumerate(cluster.site_coords):
            if s in used:
                continue
            vertical = cluster.sublattice[s] == flip
            t = cluster.site_index((x, y + 2) if vertical else (x + 2, y))
            if t == s or t in used:
                raise ValueError(f"cluster {cluster.key} does not support the "
                                 "axial winding patterns")
            used.update((s, t))
            pairs.append((s, t))
        patterns.append(make_pattern(cluster, pairs, offset=None))
    return patterns


@dataclass
class VbsState:
    """Normalized dimer-product state in sparse plain-basis form."""

    pattern: DimerPattern
    cluster: object
    configs: np.ndarray   # sorted uint64, 2^(N/2) entries
    amps: np.ndarray      # float64, magnitude 2^(-N/4)

    @property
    def sign_convention(self):
        return "lexicographically smaller site first; +amplitude on up at first site"

    def to_plain(self, basis):
        """Dense vector over a plain Sz=0 basis."""
        if basis.momentum is not None:
            raise ValueError("to_plain expects a plain Sz basis")
        v = np.zeros(basis.dim)
        pos = np.searchsorted(basis.reps, self.configs)
        v[pos] = self.amps
        return v

    def to_sector(self, basis):
        """Projection onto a momentum sector (not normalized)."""
        return project_sparse_to_sector(self.configs, self.amps, basis)


def build_product_state(cluster, pattern):
    """Product of singlets over the pattern dimers, as a sparse state."""
    n = cluster.n_sites
    configs = np.zeros(1, dtype=np.uint64)
    amps = np.ones(1)
    for a, b in pattern.dimers:
        up_a = configs | np.uint64(1 << a)
        up_b = configs | np.uint64(1 << b)
        configs = np.concatenate([up_a, up_b])
        amps = np.concatenate([amps, -amps]) / math.sqrt(2.0)
    order = np.argsort(configs)
    return VbsState(pattern=pattern, cluster=cluster,
                    configs=configs[order], amps=amps[order])


def build_ss_state(cluster, offset):
    """Shastry-Sutherland product state at the given offset."""
    return build_product_state(cluster, ss_pattern(cluster, offset))


def sparse_dot(state_a, state_b):
    """<a|b> for two sparse states on a common cluster."""
    pos = np.searchsorted(state_a.configs, state_b.configs)
    pos_c = np.minimum(pos, state_a.configs.shape[0] - 1)
    hit = state_a.configs[pos_c] == state_b.configs
    return float(np.sum(state_a.amps[pos_c[hit]] * state_b.amps[hit]))


def gram_matrix(states):
    """Overlap matrix of dimer-product states.

    Symmetric with unit diagonal; off-diagonal magnitudes equal
    2^(n_loops - N/2) with n_loops the transition-graph loop count.
    """
    k = len(states)
    g = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            g[i, j] = g[j, i] = sparse_dot(states[i], states[j])
    return g


def transition_loops(pattern_a, pattern_b):
    """Number of loops in the union of two perfect matchings (shared
    dimers count as 2-cycles)."""
    partner_a = {}
    partner_b = {}
    for i, j in pattern_a.dimers:
        partner_a[i] = j
        partner_a[j] = i
    for i, j in pattern_b.dimers:
        partner_b[i] = j
        partner_b[j] = i
    unvisited = set(partner_a)
    loops = 0
    while unvisited:
        s = min(unvisited)
        loops += 1
        cur, use_a = s, True
        while True:
            unvisited.discard(cur)
            cur = (partner_a if use_a else partner_b)[cur]
            use_a = not use_a
            if cur == s and use_a:
                break
    return loops


@dataclass
class GroundSpaceOverlap:
    """Principal-angle overlap between the computed ground space and the
    span of dimer-product states."""

    overlap: float                 # min squared projection, computed -> products
    overlap_states_onto_computed: float
    ground_dim: int
    state_rank: int
    dimension_mismatch: bool
    sector_multiplicity: dict      # (sz, momentum) -> zero-state count


def ground_space_overlap(spectra, states, zero_tol=1e-8):
    """Overlap of the zero-energy eigenspace with the span of product states.

    spectra: SpectrumResults with eigenvectors and bases; eigenvectors with
    |E| <= zero_tol enter the computed span.  A dimension mismatch between
    spans is flagged, never silently truncated.
    """
    ground = []
    mult = {}
    for res in spectra:
        if res.eigenvectors is None or res.basis is None:
            raise ValueError("ground_space_overlap needs eigenvectors and bases")
        sel = np.nonzero(np.abs(res.eigenvalues) <= zero_tol)[0]
        if sel.size:
            mult[res.sector] = int(sel.size)
        for i in sel:
            ground.append((res.basis, res.eigenvectors[:, i]))
    gram = gram_matrix(states)
    evals_g, evecs_g = np.linalg.eigh(gram)
    rank = int(np.sum(evals_g > 1e-12))
    # cross overlaps <g_i|psi_j> evaluated sector by sector
    cross = np.zeros((len(ground), len(states)), dtype=np.complex128)
    for i, (basis, vec) in enumerate(ground):
        for j, st in enumerate(states):
            cross[i, j] = np.vdot(vec, st.to_sector(basis))
    # projector onto the product-state span in the nonsingular Gram eigenbasis
    keep = evals_g > 1e-12
    w = evecs_g[:, keep] / np.sqrt(evals_g[keep])
    cw = cross @ w       # <g_i | orthonormalized state_l>
    if len(ground):
        s_round = cw @ cw.conj().T
        overlap = float(np.clip(np.linalg.eigvalsh(s_round)[0].real, 0.0, 1.0))
    else:
        overlap = 0.0
    t_round = cw.conj().T @ cw
    reverse = float(np.clip(np.linalg.eigvalsh(t_round)[0].real, 0.0, 1.0)) \
        if rank else 0.0
    return GroundSpaceOverlap(
        overlap=overlap,
        overlap_states_onto_computed=reverse,
        ground_dim=len(ground),
        state_rank=rank,
        dimension_mismatch=len(ground) != rank,
        sector_multiplicity=mult)


def pattern_diagram(cluster, pattern):
    """Text diagram: sites on the coordinate grid, each labeled by the
    letter of its dimer (torus wraps show as split letters)."""
    letters = {}
    for d, (i, j) in enumerate(pattern.dimers):
        c = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"[d % 52]
        letters[i] = c
        letters[j] = c
    coords = cluster.site_coords
    xs, ys = coords[:, 0], coords[:, 1]
    lines = []
    for y in range(int(ys.max()), int(ys.min()) - 1, -1):
        row = []
        for x in range(int(xs.min()), int(xs.max()) + 1):
            idx = np.nonzero((xs == x) & (ys == y))[0]
            row.append(letters[int(idx[0])] if idx.size else " ")
        lines.append(" ".join(row))
    lines.append("")
    for (i, j), cls in zip(pattern.dimers, pattern.bond_class):
        lines.append(f"  {letters[i]}: ({coords[i][0]},{coords[i][1]})-"
                     f"({coords[j][0]},{coords[j][1]}) [{cls}]")
    return "\n".join(lines)
