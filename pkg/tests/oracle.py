"""Independent oracles for the test suite.

Everything here deliberately avoids the package's production machinery:
the dense oracle builds spin operators as Kronecker-product matrices over
the full 2^N space; the sparse oracle builds the plain-Sz-basis matrix by
straightforward per-configuration loops and diagonalizes with ARPACK; the
orbit counter enumerates translation orbits directly.  These provide the
reference values the production path (momentum sectors + custom Lanczos +
bit kernels) is checked against.
"""

from itertools import combinations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from plaqed.lattice import enumerate_plaquettes


def dense_spin_ops(n_sites):
    """S^x, S^y, S^z for every site as dense 2^n matrices (bit s of the
    basis index = spin at site s)."""
    sx = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
    sy = np.array([[0, -0.5j], [0.5j, 0]], dtype=complex)
    sz = np.array([[0.5, 0], [0, -0.5]], dtype=complex)
    ops = []
    for s in range(n_sites):
        mats = []
        for m in (sx, sy, sz):
            full = np.eye(1, dtype=complex)
            for q in range(n_sites):
                full = np.kron(m if q == s else np.eye(2), full)
            mats.append(full)
        ops.append(mats)
    return ops


def dense_hamiltonian(cluster, params):
    """H(J, gamma, delta) over the full 2^N space from operator algebra."""
    n = cluster.n_sites
    ops = dense_spin_ops(n)
    eye = np.eye(2 ** n, dtype=complex)

    def sdot(i, j):
        return sum(ops[i][a] @ ops[j][a] for a in range(3))

    h = np.zeros_like(eye)
    c1 = params.j * (1 - params.gamma) * (1 - params.delta)
    c2 = params.j * params.gamma * (1 - params.delta)
    for i, j in cluster.bonds1:
        h += c1 * sdot(i, j)
    for i, j in cluster.bonds2:
        h += c2 * sdot(i, j)
    if params.delta:
        for p in enumerate_plaquettes(cluster):
            a, b = p.a_triple, p.b_triple
            pa = 2 * (sdot(a[0], a[1]) + sdot(a[0], a[2]) + sdot(a[1], a[2])) + 1.5 * eye
            pb = 2 * (sdot(b[0], b[1]) + sdot(b[0], b[2]) + sdot(b[1], b[2])) + 1.5 * eye
            h += (params.j * params.delta / 4.0) * (pa @ pb)
    return h


def dense_sz_eigenvalues(cluster, params, n_up):
    """Exact spectrum of one Sz sector from the dense 2^N Hamiltonian."""
    h = dense_hamiltonian(cluster, params)
    n = cluster.n_sites
    sel = [cfg for cfg in range(2 ** n) if bin(cfg).count("1") == n_up]
    return np.linalg.eigvalsh(h[np.ix_(sel, sel)])


def sz_basis_configs(n_sites, n_up):
    out = []
    for comb in combinations(range(n_sites), n_up):
        w = 0
        for s in comb:
            w |= 1 << s
        out.append(w)
    return sorted(out)


def _transpose_bits(cfg, i, j):
    bi = (cfg >> i) & 1
    bj = (cfg >> j) & 1
    if bi == bj:
        return cfg
    return cfg ^ ((1 << i) | (1 << j))


def sparse_sz_hamiltonian(cluster, params, n_up):
    """Plain-Sz-basis matrix built by per-configuration loops (no bit
    kernels, no symmetrization)."""
    n = cluster.n_sites
    configs = sz_basis_configs(n, n_up)
    index = {cfg: i for i, cfg in enumerate(configs)}
    c1 = params.j * (1 - params.gamma) * (1 - params.delta)
    c2 = params.j * params.gamma * (1 - params.delta)
    cp = params.j * params.delta / 4.0
    bond_groups = [(c1, cluster.bonds1), (c2, cluster.bonds2)]
    plaqs = enumerate_plaquettes(cluster) if abs(cp) > 0 else []
    rows, cols, vals = [], [], []
    for col, cfg in enumerate(configs):
        acc = {}
        for coef, bonds in bond_groups:
            if abs(coef) < 1e-15:
                continue
            for i, j in bonds:
                i, j = int(i), int(j)
                if ((cfg >> i) ^ (cfg >> j)) & 1:
                    acc[cfg] = acc.get(cfg, 0.0) - 0.25 * coef
                    dst = cfg ^ ((1 << i) | (1 << j))
                    acc[dst] = acc.get(dst, 0.0) + 0.5 * coef
                else:
                    acc[cfg] = acc.get(cfg, 0.0) + 0.25 * coef
        for p in plaqs:
            a, b = p.a_triple, p.b_triple
            for pa in ((a[0], a[1]), (a[0], a[2]), (a[1], a[2])):
                for pb in ((b[0], b[1]), (b[0], b[2]), (b[1], b[2])):
                    dst = _transpose_bits(_transpose_bits(cfg, pb[0], pb[1]),
                                          pa[0], pa[1])
                    acc[dst] = acc.get(dst, 0.0) + cp
        for dst, v in acc.items():
            rows.append(index[dst])
            cols.append(col)
            vals.append(v)
    dim = len(configs)
    return sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()


def arpack_ground_energy(cluster, params, n_up=None, k=1):
    """Ground energy of the plain Sz sector via ARPACK (independent of the
    production Lanczos and the momentum machinery)."""
    if n_up is None:
        n_up = cluster.n_sites // 2
    h = sparse_sz_hamiltonian(cluster, params, n_up)
    vals = spl.eigsh(h, k=max(k, 2), which="SA", tol=0, maxiter=50000,
                     return_eigenvectors=False)
    return float(np.min(vals))


def brute_force_orbit_count(cluster, n_up):
    """Number of translation orbits in an Sz sector (counts the k=(0,0)
    momentum-sector dimension), by direct orbit enumeration."""
    configs = sz_basis_configs(cluster.n_sites, n_up)
    perms = cluster.translations
    seen = set()
    orbits = 0
    for cfg in configs:
        if cfg in seen:
            continue
        orbits += 1
        for t in range(cluster.n_sites):
            img = 0
            c = cfg
            for s in range(cluster.n_sites):
                if (c >> s) & 1:
                    img |= 1 << int(perms[t][s])
            seen.add(img)
    return orbits
