"""The model Hamiltonian as a matrix-free operator.

H = J(1-gamma)(1-delta) * sum_<ij> S_i.S_j
  + J gamma (1-delta)   * sum_<<ij>> S_i.S_j
  + J delta             * sum_plaquettes (1/4) P^A P^B

with P the quartet projector |S_i+S_j+S_k|^2 - 3/4 on a same-sublattice
triple.  P equals the sum of the three pair transpositions on the triple,
so each plaquette term is applied as nine two-swap compositions per basis
state; the symbolic two-/four-spin expansion is kept as a cross-check.

Operators are organized as unit-strength term groups (bonds1, bonds2,
plaquettes) with parameter-dependent coefficients, so parameter sweeps
reuse cached per-sector matrices.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .hilbert import build_sz_basis, expand_to_plain
from .lattice import enumerate_plaquettes

#: terms with |coefficient| below this are dropped from the operator
COEF_THRESHOLD = 1e-15

#: target branch count per expand_terms chunk
_CHUNK_BRANCHES = 1 << 22

#: sector matrices are built (and cached) up to this dimension; larger
#: sectors are applied on the fly
MATRIX_DIM_LIMIT = 4_000_000


@dataclass(frozen=True)
class ModelParams:
    """Couplings (J, gamma, delta); J > 0, gamma and delta in [0, 1]."""

    j: float = 1.0
    gamma: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.j <= 0:
            raise ValueError("energy scale j must be positive")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError("delta must lie in [0, 1]")

    @property
    def coef_bonds1(self):
        return self.j * (1.0 - self.gamma) * (1.0 - self.delta)

    @property
    def coef_bonds2(self):
        return self.j * self.gamma * (1.0 - self.delta)

    @property
    def coef_plaquette(self):
        """Per-plaquette coefficient of P^A P^B."""
        return self.j * self.delta / 4.0


@dataclass(frozen=True)
class BondTerm:
    pair: tuple
    coefficient: float


@dataclass(frozen=True)
class PlaquetteTerm:
    a_transpositions: tuple  # three site pairs within the A triple
    b_transpositions: tuple
    coefficient: float


class TermGroup:
    """Encoded list of local terms sharing one coefficient.

    kinds/sites/coefs are the arrays understood by kernels.expand_terms;
    fingerprint keys per-sector matrix caches.
    """

    def __init__(self, kinds, sites, coefs, fingerprint):
        self.kinds = np.asarray(kinds, dtype=np.int64)
        self.sites = np.asarray(sites, dtype=np.int64).reshape(-1, 6)
        self.coefs = np.asarray(coefs, dtype=np.float64)
        self.fingerprint = fingerprint

    def __len__(self):
        return len(self.kinds)

    @property
    def branches_per_config(self):
        return int(sum(kernels.BRANCH_MAX[int(k)] for k in self.kinds))

    @staticmethod
    def build(entries, fingerprint):
        """entries: iterable of (kind, sites-tuple, coef)."""
        kinds, sites, coefs = [], [], []
        for kind, ss, coef in entries:
            kinds.append(kind)
            row = list(ss) + [0] * (6 - len(ss))
            sites.append(row)
            coefs.append(coef)
        if not kinds:
            return TermGroup(np.empty(0, dtype=np.int64),
                             np.empty((0, 6), dtype=np.int64),
                             np.empty(0), fingerprint)
        return TermGroup(kinds, sites, coefs, fingerprint)

    @staticmethod
    def heisenberg(pairs, fingerprint, coef=1.0):
        return TermGroup.build(
            [(kernels.KIND_HB, (i, j), coef) for i, j in pairs], fingerprint)

    @staticmethod
    def transpositions(pairs, fingerprint, coef=1.0):
        return TermGroup.build(
            [(kernels.KIND_TRANS, (i, j), coef) for i, j in pairs], fingerprint)


def plaquette_group(cluster):
    """Unit-strength P^A P^B products over all 2N plaquettes."""
    entries = [(kernels.KIND_PP, p.a_triple + p.b_triple, 1.0)
               for p in enumerate_plaquettes(cluster)]
    return TermGroup.build(entries, f"plaquettes@{cluster.key}")


def plaquette_group_expanded(cluster):
    """The same plaquette products expanded into two- and four-spin
    exchange terms (cross-check form):
    P^A P^B = 4 sum_ab (S.S)_a (S.S)_b + 3 sum_a (S.S)_a + 3 sum_b (S.S)_b + 9/4.
    """
    entries = []
    for p in enumerate_plaquettes(cluster):
        a = p.a_triple
        b = p.b_triple
        a_pairs = [(a[0], a[1]), (a[0], a[2]), (a[1], a[2])]
        b_pairs = [(b[0], b[1]), (b[0], b[2]), (b[1], b[2])]
        for i, j in a_pairs:
            for k, l in b_pairs:
                entries.append((kernels.KIND_DP, (i, j, k, l), 4.0))
        for i, j in a_pairs + b_pairs:
            entries.append((kernels.KIND_HB, (i, j), 3.0))
        entries.append((kernels.KIND_ID, (), 2.25))
    return TermGroup.build(entries, f"plaquettes-expanded@{cluster.key}")


def total_spin_group(cluster, sites=None, fingerprint=None):
    """S_tot^2 (over the given sites) as a term group:
    sum_{i<j} 2 S_i.S_j + (3/4) n."""
    if sites is None:
        sites = range(cluster.n_sites)
    sites = list(sites)
    entries = [(kernels.KIND_HB, (i, j), 2.0)
               for a, i in enumerate(sites) for j in sites[a + 1:]]
    entries.append((kernels.KIND_ID, (), 0.75 * len(sites)))
    return TermGroup.build(entries, fingerprint or f"stot2@{cluster.key}:{len(sites)}")


def sublattice_spin_group(cluster, which):
    """Squared total spin of sublattice A (which=0) or B (which=1)."""
    sites = np.nonzero(cluster.sublattice == which)[0]
    return total_spin_group(cluster, sites, f"ssub2-{which}@{cluster.key}")


def _chunk_size(group, dim):
    bpc = max(1, group.branches_per_config)
    return max(1, min(dim, _CHUNK_BRANCHES // bpc))


def apply_group(group, basis, v, out=None):
    """Matrix-free w += group . v over a sector basis.

    On a momentum sector the group must commute with every translation
    (e.g. be a translation-complete sum of local terms); the plain Sz basis
    imposes no such restriction.
    """
    v = np.asarray(v)
    if v.shape[0] != basis.dim:
        raise ValueError(f"vector dimension {v.shape[0]} != basis dimension {basis.dim}")
    w = out if out is not None else np.zeros(basis.dim, dtype=np.complex128)
    if len(group) == 0 or basis.dim == 0:
        return w
    step = _chunk_size(group, basis.dim)
    for start in range(0, basis.dim, step):
        stop = min(start + step, basis.dim)
        src, dst, amp = kernels.expand_terms(
            basis.reps[start:stop], group.kinds, group.sites, group.coefs)
        rows, factors = basis.map_configs(dst)
        ok = rows >= 0
        src = src[ok] + start
        vals = amp[ok] * factors[ok] / basis.norms[src]
        np.add.at(w, rows[ok], vals * v[src])
    return w


def group_matrix(group, basis):
    """Sparse CSR matrix of a term group over a sector basis (cached on
    the basis)."""
    cached = basis._matrix_cache.get(group.fingerprint)
    if cached is not None:
        return cached
    parts = []
    step = _chunk_size(group, max(basis.dim, 1))
    for start in range(0, basis.dim, step):
        stop = min(start + step, basis.dim)
        src, dst, amp = kernels.expand_terms(
            basis.reps[start:stop], group.kinds, group.sites, group.coefs)
        rows, factors = basis.map_configs(dst)
        ok = rows >= 0
        src = src[ok] + start
        vals = amp[ok] * factors[ok] / basis.norms[src]
        parts.append(sp.coo_matrix((vals, (rows[ok], src)),
                                   shape=(basis.dim, basis.dim)))
    if parts:
        mat = sum(p.tocsr() for p in parts).tocsr() if len(parts) > 1 else parts[0].tocsr()
    else:
        mat = sp.csr_matrix((basis.dim, basis.dim), dtype=np.complex128)
    mat.sum_duplicates()
    basis._matrix_cache[group.fingerprint] = mat
    return mat


def apply_group_sparse(group, configs, amps, coef=1.0):
    """Apply a term group to a sparse plain-basis vector.

    Returns (configs', amps') sorted by configuration; no basis needed.
    """
    src, dst, amp = kernels.expand_terms(
        np.asarray(configs, dtype=np.uint64), group.kinds, group.sites, group.coefs)
    vals = coef * amp * np.asarray(amps)[src]
    uniq, inverse = np.unique(dst, return_inverse=True)
    out = np.zeros(uniq.shape[0], dtype=vals.dtype)
    np.add.at(out, inverse, vals)
    return uniq, out


@dataclass
class HamiltonianOperator:
    """H(J, gamma, delta) as a collection of unit-strength term groups with
    parameter-dependent coefficients.  Immutable; apply() is read-only."""

    cluster: object
    params: ModelParams
    groups: dict
    coefs: dict

    def apply(self, basis, v, use_matrix="auto"):
        """H.v over a sector basis.  Hermitian; conserves total Sz."""
        v = np.asarray(v)
        if v.shape[0] != basis.dim:
            raise ValueError(f"vector dimension {v.shape[0]} != basis dimension {basis.dim}")
        if use_matrix == "auto":
            use_matrix = basis.dim <= MATRIX_DIM_LIMIT and (
                basis.momentum is None or basis._table.configs is not None)
        if use_matrix:
            return self.sector_matrix(basis) @ v.astype(np.complex128)
        w = np.zeros(basis.dim, dtype=np.complex128)
        for name, group in self.groups.items():
            gw = apply_group(group, basis, v)
            w += self.coefs[name] * gw
        return w

    def sector_matrix(self, basis):
        """Sum of cached per-group CSR matrices with current coefficients."""
        mat = None
        for name, group in self.groups.items():
            gm = group_matrix(group, basis)
            mat = self.coefs[name] * gm if mat is None else mat + self.coefs[name] * gm
        if mat is None:
            mat = sp.csr_matrix((basis.dim, basis.dim), dtype=np.complex128)
        return mat

    def matvec(self, basis, use_matrix="auto"):
        """Closure v -> H.v for the eigensolver."""
        if use_matrix == "auto":
            use_matrix = basis.dim <= MATRIX_DIM_LIMIT and (
                basis.momentum is None or basis._table.configs is not None)
        if use_matrix:
            mat = self.sector_matrix(basis)
            return lambda v: mat @ v
        return lambda v: self.apply(basis, v, use_matrix=False)

    def apply_sparse(self, configs, amps):
        """H applied to a sparse plain-basis vector; returns (configs, amps)."""
        parts_c, parts_a = [], []
        for name, group in self.groups.items():
            c, a = apply_group_sparse(group, configs, amps, self.coefs[name])
            parts_c.append(c)
            parts_a.append(a)
        if not parts_c:
            return np.empty(0, dtype=np.uint64), np.empty(0)
        allc = np.concatenate(parts_c)
        alla = np.concatenate(parts_a)
        uniq, inverse = np.unique(allc, return_inverse=True)
        out = np.zeros(uniq.shape[0], dtype=alla.dtype)
        np.add.at(out, inverse, alla)
        return uniq, out

    @property
    def bond_terms(self):
        """Heisenberg bond terms with their coefficients (spec view)."""
        out = []
        for name, attr in (("bonds1", "coef_bonds1"), ("bonds2", "coef_bonds2")):
            if name in self.groups:
                coef = self.coefs[name]
                bonds = getattr(self.cluster, name)
                out.extend(BondTerm(pair=(int(i), int(j)), coefficient=coef)
                           for i, j in bonds)
        return out

    @property
    def plaquette_terms(self):
        if "plaquettes" not in self.groups:
            return []
        coef = self.coefs["plaquettes"]
        out = []
        for p in enumerate_plaquettes(self.cluster):
            a = p.a_triple
            b = p.b_triple
            out.append(PlaquetteTerm(
                a_transpositions=((a[0], a[1]), (a[0], a[2]), (a[1], a[2])),
                b_transpositions=((b[0], b[1]), (b[0], b[2]), (b[1], b[2])),
                coefficient=coef))
        return out


def build_operator(cluster, params):
    """Assemble H(J, gamma, delta) for a cluster.  Groups with coefficient
    below COEF_THRESHOLD are dropped."""
    groups = {}
    coefs = {}
    candidates = [
        ("bonds1", params.coef_bonds1,
         lambda: TermGroup.heisenberg(cluster.bonds1, f"bonds1@{cluster.key}")),
        ("bonds2", params.coef_bonds2,
         lambda: TermGroup.heisenberg(cluster.bonds2, f"bonds2@{cluster.key}")),
        ("plaquettes", params.coef_plaquette, lambda: plaquette_group(cluster)),
    ]
    for name, coef, make in candidates:
        if abs(coef) >= COEF_THRESHOLD:
            groups[name] = make()
            coefs[name] = coef
    return HamiltonianOperator(cluster=cluster, params=params, groups=groups,
                               coefs=coefs)


def apply(op, basis, v):
    """Module-level alias for HamiltonianOperator.apply."""
    return op.apply(basis, v)


def apply_projector(triple, v, basis):
    """Quartet projector P = |S_i+S_j+S_k|^2 - 3/4 = T_ij + T_ik + T_jk
    applied to a plain-basis vector."""
    if basis.momentum is not None:
        raise ValueError("apply_projector expects a plain Sz basis")
    i, j, k = triple
    group = TermGroup.transpositions([(i, j), (i, k), (j, k)],
                                     f"proj:{i},{j},{k}@{basis.cluster.key}")
    return apply_group(group, basis, np.asarray(v, dtype=np.complex128))


def plaquette_expectation(triple_kind, state, basis, atol=1e-8):
    """<P> on the chosen triple (A or B) of every plaquette.

    Requires a normalized state; values lie in [0, 3].  Momentum-sector
    states are expanded to the plain basis when the cluster allows it,
    otherwise the translation-averaged value is reported per orientation
    (exact for momentum eigenstates, whose per-plaquette values are
    homogeneous within a translation orbit).
    """
    state = np.asarray(state)
    nrm = np.linalg.norm(state)
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"state norm {nrm} is not 1 within {atol}; normalize explicitly")
    cluster = basis.cluster
    plaqs = enumerate_plaquettes(cluster)
    triples = [p.a_triple if triple_kind == "A" else p.b_triple for p in plaqs]

    if basis.momentum is not None and basis._table.configs is not None:
        plain = build_sz_basis(cluster, basis.sz)
        dense = expand_to_plain(state, basis, plain)
        return plaquette_expectation(triple_kind, dense, plain, atol=atol)

    if basis.momentum is None:
        vals = np.empty(len(plaqs))
        for idx, (i, j, k) in enumerate(triples):
            pv = apply_projector((i, j, k), state, basis)
            vals[idx] = np.real(np.vdot(state, pv))
        return vals

    # large cluster: translation-averaged projector per orientation
    vals = np.empty(len(plaqs))
    for orientation in ("horizontal", "vertical"):
        idxs = [n for n, p in enumerate(plaqs) if p.orientation == orientation]
        entries = []
        for n in idxs:
            i, j, k = triples[n]
            entries.extend([(kernels.KIND_TRANS, (i, j), 1.0),
                            (kernels.KIND_TRANS, (i, k), 1.0),
                            (kernels.KIND_TRANS, (j, k), 1.0)])
        group = TermGroup.build(entries, f"proj-avg-{triple_kind}-{orientation}@{cluster.key}")
        pv = apply_group(group, basis, state)
        mean = np.real(np.vdot(state, pv)) / len(idxs)
        for n in idxs:
            vals[n] = mean
    return vals
