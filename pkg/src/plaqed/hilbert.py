"""Spin-1/2 configuration bases.

Configurations are uint64 words (bit s = spin-up at site s) restricted to
a total-Sz sector, optionally symmetrized over the translation group into
momentum sectors.  A momentum-sector state is labeled by an orbit-minimal
representative r and normalized as |r;k> = P_k|r> / ||P_k r|| with
P_k = (1/N) sum_t exp(-i k.u_t) T_t.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lattice import allowed_momenta

# Full per-configuration lookup tables are built up to this many sites;
# larger clusters stream orbit representatives and resolve generated
# configurations on the fly.
FULL_TABLE_LIMIT = 26

_SZ_TABLE_CACHE = {}

CACHE_FORMAT = "plaqed-basis-v1"


def _n_up(cluster, sz):
    n = cluster.n_sites
    n_up = n / 2 + sz
    if abs(n_up - round(n_up)) > 1e-12 or not (0 <= round(n_up) <= n):
        raise ValueError(f"invalid sz={sz} for {n} sites")
    return int(round(n_up))


@dataclass
class SzTable:
    """Translation-orbit structure of one total-Sz sector (shared by all
    momentum sectors of that Sz)."""

    cluster: object
    n_up: int
    configs: np.ndarray      # sorted uint64; None when streamed (large N)
    rep_id: np.ndarray       # index into reps of each config's orbit minimum
    t_idx: np.ndarray        # first translation mapping config to its orbit minimum
    reps: np.ndarray         # sorted uint64 orbit minima
    stab_bits: np.ndarray    # uint64 bitmask over translation indices fixing each rep
    _sectors: dict = field(default_factory=dict, repr=False)
    _stab_count: np.ndarray = field(default=None, repr=False)

    @property
    def stab_count(self):
        if self._stab_count is None:
            self._stab_count = np.bitwise_count(self.stab_bits).astype(np.int64)
        return self._stab_count


def sz_table(cluster, sz):
    """Cached orbit table for (cluster, sz)."""
    n_up = _n_up(cluster, sz)
    key = (cluster.key, n_up)
    tab = _SZ_TABLE_CACHE.get(key)
    if tab is not None:
        return tab
    perms = cluster.translations
    if cluster.n_sites <= FULL_TABLE_LIMIT:
        configs = kernels.popcount_configs(cluster.n_sites, n_up)
        mins, t_idx = kernels.orbit_minimize(configs, perms)
        reps = configs[mins == configs]
        rep_id = np.searchsorted(reps, mins).astype(np.int64)
        t_idx = t_idx.astype(np.int64)
    else:
        configs = rep_id = t_idx = None
        reps = kernels.popcount_reps_stream(cluster.n_sites, n_up, perms)
    stab_bits = np.zeros(reps.shape[0], dtype=np.uint64)
    for t in range(cluster.n_sites):
        eq = kernels.translate_configs(reps, perms[t]) == reps
        stab_bits |= eq.astype(np.uint64) << np.uint64(t)
    tab = SzTable(cluster=cluster, n_up=n_up, configs=configs, rep_id=rep_id,
                  t_idx=t_idx, reps=reps, stab_bits=stab_bits)
    _SZ_TABLE_CACHE[key] = tab
    return tab


@dataclass
class SectorBasis:
    """Basis of one (Sz, momentum) sector.

    For momentum=None this is the plain Sz basis (reps = all configurations,
    unit norms).  Immutable after construction.
    """

    cluster: object
    sz: float
    momentum: object            # Momentum or None
    reps: np.ndarray            # sorted uint64
    norms: np.ndarray           # ||P_k r||; ones for the plain basis
    _table: SzTable = field(default=None, repr=False)
    _sector_of_rep: np.ndarray = field(default=None, repr=False)
    _phases: np.ndarray = field(default=None, repr=False)
    _matrix_cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self):
        return int(self.reps.shape[0])

    @property
    def n_up(self):
        return _n_up(self.cluster, self.sz)

    def lookup(self, config):
        """Index of a representative, or -1 when absent."""
        i = int(np.searchsorted(self.reps, np.uint64(config)))
        if i < self.dim and self.reps[i] == np.uint64(config):
            return i
        return -1

    def map_configs(self, dst):
        """Resolve generated configurations against this basis.

        Returns (rows, factors): for each configuration, the sector index
        of its symmetrized state (-1 when the orbit is absent from this
        sector) and the factor chi[t] * norms[row] such that
        P_k|dst> = factor * |row;k>.  Plain basis: identity mapping.
        """
        if self.momentum is None:
            rows = np.searchsorted(self.reps, dst).astype(np.int64)
            return rows, np.ones(dst.shape[0], dtype=np.complex128)
        tab = self._table
        if tab.configs is not None:
            pos = np.searchsorted(tab.configs, dst)
            rows = self._sector_of_rep[tab.rep_id[pos]]
            ti = tab.t_idx[pos]
        else:
            mins, ti = kernels.orbit_minimize(dst, self.cluster.translations)
            rid = np.minimum(np.searchsorted(tab.reps, mins), tab.reps.shape[0] - 1)
            rows = np.where(tab.reps[rid] == mins, self._sector_of_rep[rid], -1)
        ok = rows >= 0
        factors = np.where(ok, self._phases[ti] * self.norms[np.where(ok, rows, 0)], 0.0)
        return rows, factors


def build_sz_basis(cluster, sz):
    """Plain total-Sz basis; dimension C(N, N/2 + sz), ascending order."""
    tab = sz_table(cluster, sz)
    if tab.configs is None:
        raise ValueError(f"plain Sz basis too large to materialize for {cluster.key}")
    return SectorBasis(cluster=cluster, sz=sz, momentum=None, reps=tab.configs,
                       norms=np.ones(tab.configs.shape[0]), _table=tab)


def build_momentum_basis(cluster, sz, momentum):
    """Translation-symmetrized basis of the (sz, k) sector.

    Representatives are orbit minima whose stabilizer is compatible with k
    (all stabilizer phases equal 1); dimensions over all k sum to the plain
    Sz dimension.
    """
    if momentum not in set(allowed_momenta(cluster)):
        raise ValueError(f"momentum {momentum} not allowed on cluster {cluster.key}")
    tab = sz_table(cluster, sz)
    cached = tab._sectors.get(momentum)
    if cached is not None:
        return cached
    n = cluster.n_sites
    phases = cluster.phases(momentum)
    nontrivial = np.nonzero(np.abs(phases - 1.0) > 1e-12)[0]
    incompatible = np.zeros(tab.reps.shape[0], dtype=bool)
    for t in nontrivial:
        incompatible |= ((tab.stab_bits >> np.uint64(t)) & np.uint64(1)).astype(bool)
    keep = ~incompatible
    reps = tab.reps[keep]
    stab = tab.stab_count[keep]
    norms = np.sqrt(stab / n)
    sector_of_rep = np.full(tab.reps.shape[0], -1, dtype=np.int64)
    sector_of_rep[np.nonzero(keep)[0]] = np.arange(reps.shape[0])
    basis = SectorBasis(cluster=cluster, sz=sz, momentum=momentum, reps=reps,
                        norms=norms, _table=tab, _sector_of_rep=sector_of_rep,
                        _phases=phases)
    tab._sectors[momentum] = basis
    return basis


def find_representative(config, basis):
    """Representative index and accumulated momentum phase of a configuration.

    For config = T_t(rep), returns (rep index, exp(-i k.t)).  Returns None
    when the configuration's orbit is incompatible with the sector momentum.
    Raises on a popcount outside the basis Sz sector.
    """
    config = np.uint64(config)
    if bin(int(config)).count("1") != basis.n_up:
        raise ValueError("configuration popcount does not match the Sz sector")
    if basis.momentum is None:
        return basis.lookup(config), 1.0 + 0.0j
    mins, t_star = kernels.orbit_minimize(
        np.array([config], dtype=np.uint64), basis.cluster.translations)
    idx = basis.lookup(mins[0])
    if idx < 0:
        return None
    # config = T_{-t*}(rep), so the translation from rep to config is -t*.
    phase = np.conj(basis._phases[t_star[0]])
    return idx, complex(phase)


def apply_site_permutation(basis, perm, v):
    """Action of a site permutation on a sector vector.

    Valid for permutations mapping the sector to itself (translations, or
    little-group point operations at the sector momentum).
    """
    dst = kernels.translate_configs(basis.reps, np.asarray(perm, dtype=np.int64))
    rows, factors = basis.map_configs(dst)
    w = np.zeros(basis.dim, dtype=np.complex128)
    ok = rows >= 0
    np.add.at(w, rows[ok], v[ok] * factors[ok] / basis.norms[ok])
    return w


def expand_to_plain(v, basis, plain_basis):
    """Expand a momentum-sector vector into the plain Sz basis."""
    if basis.momentum is None:
        return v.astype(np.complex128)
    n = basis.cluster.n_sites
    w = np.zeros(plain_basis.dim, dtype=np.complex128)
    coef = v / (n * basis.norms)
    for t in range(n):
        dst = kernels.translate_configs(basis.reps, basis.cluster.translations[t])
        pos = np.searchsorted(plain_basis.reps, dst)
        np.add.at(w, pos, basis._phases[t] * coef)
    return w


def project_to_sector(w, plain_basis, basis):
    """Project a plain-basis vector onto a momentum sector (adjoint of
    expand_to_plain)."""
    n = basis.cluster.n_sites
    v = np.zeros(basis.dim, dtype=np.complex128)
    for t in range(n):
        dst = kernels.translate_configs(basis.reps, basis.cluster.translations[t])
        pos = np.searchsorted(plain_basis.reps, dst)
        v += np.conj(basis._phases[t]) * w[pos]
    return v / (n * basis.norms)


def project_sparse_to_sector(configs, amps, basis):
    """Project a sparse plain-basis vector (configs, amps) onto a sector."""
    v = np.zeros(basis.dim, dtype=np.complex128)
    if basis.dim == 0:
        return v
    if basis.momentum is None:
        pos = np.searchsorted(basis.reps, configs)
        np.add.at(v, pos, amps)
        return v
    mins, t_star = kernels.orbit_minimize(
        np.asarray(configs, dtype=np.uint64), basis.cluster.translations)
    rid = np.minimum(np.searchsorted(basis.reps, mins), basis.dim - 1)
    ok = basis.reps[rid] == mins
    # <r;k|c> = norms[r] * chi[t*] with T_{t*} c = r
    vals = np.asarray(amps) * basis._phases[t_star] * basis.norms[rid]
    np.add.at(v, rid[ok], vals[ok])
    return v


def config_bits(configs, n_sites):
    """(len(configs), n_sites) uint8 matrix of configuration bits."""
    out = np.empty((configs.shape[0], n_sites), dtype=np.uint8)
    for s in range(n_sites):
        out[:, s] = (configs >> np.uint64(s)) & np.uint64(1)
    return out


def save_basis(path, basis):
    """Write a sector basis cache file with a versioned header."""
    t1, t2 = basis.cluster.spanning_vectors
    mom = (-1, -1) if basis.momentum is None else (basis.momentum.vx, basis.momentum.vy)
    np.savez_compressed(
        path, format=CACHE_FORMAT, spanning=np.array([t1, t2], dtype=np.int64),
        sz=float(basis.sz), momentum=np.array(mom, dtype=np.int64),
        reps=basis.reps, norms=basis.norms)


def load_basis(path, cluster):
    """Load a sector basis cache; validates header against the cluster."""
    with np.load(path, allow_pickle=False) as data:
        if str(data["format"]) != CACHE_FORMAT:
            raise ValueError(f"unsupported basis cache format {data['format']!r}")
        t1, t2 = (tuple(v) for v in data["spanning"])
        if (t1, t2) != cluster.spanning_vectors:
            raise ValueError("basis cache belongs to a different cluster")
        sz = float(data["sz"])
        vx, vy = (int(x) for x in data["momentum"])
        momentum = None if vx < 0 else cluster.momentum(vx, vy)
        if momentum is None:
            basis = build_sz_basis(cluster, sz)
        else:
            basis = build_momentum_basis(cluster, sz, momentum)
        if not np.array_equal(basis.reps, data["reps"]):
            raise ValueError("basis cache representatives do not match rebuild")
        return basis
