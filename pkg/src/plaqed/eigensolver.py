"""Lowest eigenpairs of the sector Hamiltonians.

Lanczos with full reorthogonalization; degenerate multiplets are resolved
by restarting with deflation against converged vectors, so multiplicity
counts are exact.  Small sectors fall back to dense diagonalization.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .hilbert import apply_site_permutation, build_momentum_basis
from .lattice import allowed_momenta

DEFAULT_TOL = 1e-10
#: eigenvalues within 1e-8 * max(1, |lambda|) are reported as one multiplet
DEGENERACY_RTOL = 1e-8
#: sectors up to this dimension are solved densely under method="auto"
DENSE_LIMIT = 900


class ConvergenceError(RuntimeError):
    """Raised when the iteration cap is hit before m pairs converge."""

    def __init__(self, message, *, converged=0, requested=0, n_matvec=0,
                 best_residual=None):
        super().__init__(message)
        self.converged = converged
        self.requested = requested
        self.n_matvec = n_matvec
        self.best_residual = best_residual


@dataclass
class SpectrumResult:
    """Converged eigenpairs of one (sz, momentum) sector."""

    sector: tuple                 # (sz, Momentum or None)
    eigenvalues: np.ndarray       # ascending
    eigenvectors: np.ndarray      # (dim, m) orthonormal columns, or None
    residual_norms: np.ndarray
    basis: object = None
    seed: int = 0
    n_matvec: int = 0
    point_group_labels: list = None

    @property
    def dim(self):
        return None if self.basis is None else self.basis.dim

    def multiplicity_groups(self, rtol=DEGENERACY_RTOL):
        """Eigenvalue multiplets grouped by rtol * max(1, |lambda|)."""
        groups = []
        for e in self.eigenvalues:
            if groups and abs(e - groups[-1][0]) <= rtol * max(1.0, abs(e)):
                groups[-1][1].append(e)
            else:
                groups.append((e, [e]))
        return [(g[0], len(g[1])) for g in groups]


def _as_matvec(op, basis):
    """Normalize (operator, basis) to (matvec, dim, dense_matrix_or_None)."""
    if hasattr(op, "matvec") and hasattr(op, "sector_matrix"):
        dim = basis.dim
        return op.matvec(basis), dim, (lambda: op.sector_matrix(basis).toarray())
    if sp.issparse(op):
        return (lambda v: op @ v), op.shape[0], (lambda: op.toarray())
    if isinstance(op, np.ndarray):
        return (lambda v: op @ v), op.shape[0], (lambda: op)
    if callable(op):
        dim = basis.dim if hasattr(basis, "dim") else int(basis)
        return op, dim, None
    raise TypeError(f"unsupported operator type {type(op)!r}")


def lowest_eigenpairs(op, basis, m, tol=DEFAULT_TOL, *, seed=0, method="auto",
                      max_krylov=None, max_matvec=None, want_vectors=True):
    """The m lowest eigenpairs of a Hermitian sector operator.

    op: HamiltonianOperator, scipy sparse matrix, ndarray, or matvec callable.
    basis: SectorBasis (or the dimension when op is a callable).

    Residual norms ||H v - lambda v|| of all returned pairs are at most tol
    and the eigenvector set is orthonormal; non-convergence raises
    ConvergenceError.  An empty sector yields an empty result.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    matvec, dim, dense_maker = _as_matvec(op, basis)
    sector = (getattr(basis, "sz", None), getattr(basis, "momentum", None))
    sb = basis if hasattr(basis, "dim") else None
    if dim == 0:
        return SpectrumResult(sector=sector, eigenvalues=np.empty(0),
                              eigenvectors=np.empty((0, 0), dtype=np.complex128),
                              residual_norms=np.empty(0), basis=sb, seed=seed)
    m_eff = min(m, dim)

    if method == "auto":
        method = "dense" if dim <= DENSE_LIMIT else "lanczos"
    if method == "dense":
        dense = dense_maker() if dense_maker is not None else _matrix_from_matvec(matvec, dim)
        evals, evecs = np.linalg.eigh(dense)
        evals, evecs = evals[:m_eff], evecs[:, :m_eff]
        resid = np.array([np.linalg.norm(dense @ evecs[:, i] - evals[i] * evecs[:, i])
                          for i in range(m_eff)])
        return SpectrumResult(sector=sector, eigenvalues=evals,
                              eigenvectors=evecs if want_vectors else None,
                              residual_norms=resid, basis=sb, seed=seed, n_matvec=0)
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")

    evals, evecs, resid, n_mv = _lanczos_deflated(
        matvec, dim, m_eff, tol, seed,
        max_krylov=max_krylov or (350 if dim <= 200_000 else 80),
        max_matvec=max_matvec or 10 * m_eff * 50)
    return SpectrumResult(sector=sector, eigenvalues=evals,
                          eigenvectors=evecs if want_vectors else None,
                          residual_norms=resid, basis=sb, seed=seed, n_matvec=n_mv)


def _matrix_from_matvec(matvec, dim):
    cols = np.empty((dim, dim), dtype=np.complex128)
    e = np.zeros(dim, dtype=np.complex128)
    for i in range(dim):
        e[i] = 1.0
        cols[:, i] = matvec(e)
        e[i] = 0.0
    return cols


def _orthogonalize(w, vecs):
    """Two-pass classical Gram-Schmidt of w against orthonormal columns."""
    for _ in range(2):
        if vecs.shape[1]:
            w = w - vecs @ (vecs.conj().T @ w)
    return w


def _lanczos_deflated(matvec, dim, m, tol, seed, max_krylov, max_matvec):
    rng = np.random.default_rng(seed)
    locked = np.empty((dim, 0), dtype=np.complex128)
    locked_vals = []
    locked_resid = []
    n_mv = 0
    start = None          # warm start from an unconverged Ritz vector
    stagnant = 0
    best_resid = np.inf

    while len(locked_vals) < m:
        if n_mv >= max_matvec:
            raise ConvergenceError(
                f"Lanczos did not converge {m} pairs within {max_matvec} "
                f"matrix applications ({len(locked_vals)} converged, "
                f"best residual {best_resid:.3e})",
                converged=len(locked_vals), requested=m, n_matvec=n_mv,
                best_residual=best_resid)
        if start is not None:
            v = start
            start = None
        else:
            v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v = _orthogonalize(v.astype(np.complex128), locked)
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            continue
        v /= nv

        V = np.empty((dim, min(max_krylov, dim - locked.shape[1]) + 1),
                     dtype=np.complex128)
        V[:, 0] = v
        alphas, betas = [], []
        j = 0
        breakdown = False
        while True:
            w = matvec(V[:, j])
            n_mv += 1
            w = _orthogonalize(w, locked)
            alpha = float(np.real(np.vdot(V[:, j], w)))
            alphas.append(alpha)
            w = w - alpha * V[:, j]
            if j > 0:
                w = w - betas[-1] * V[:, j - 1]
            w = _orthogonalize(w, V[:, :j + 1])
            beta = float(np.linalg.norm(w))
            if beta < 1e-13 * max(1.0, abs(alpha)):
                breakdown = True
            j += 1
            if breakdown or j >= V.shape[1] - 1 or j + locked.shape[1] >= dim \
                    or n_mv >= max_matvec:
                break
            betas.append(beta)
            V[:, j] = w / beta
            if j < 2:
                continue
            # cheap convergence probe on the tridiagonal problem
            need = m - len(locked_vals)
            theta, s = scipy.linalg.eigh_tridiagonal(alphas, betas[: j - 1])
            est = np.abs(beta * s[-1, :])
            nconv = 0
            for i in range(min(need, len(theta))):
                if est[i] <= 0.1 * tol:
                    nconv += 1
                else:
                    break
            if nconv >= need:
                break

        # Ritz pairs of the final tridiagonal
        theta, s = scipy.linalg.eigh_tridiagonal(alphas, betas[: len(alphas) - 1])
        ritz = V[:, :len(alphas)] @ s
        newly = 0
        for i in range(len(theta)):
            if len(locked_vals) >= m:
                break
            y = _orthogonalize(ritz[:, i], locked)
            ny = np.linalg.norm(y)
            if ny < 1e-8:
                continue
            y /= ny
            r = matvec(y) - theta[i] * y
            n_mv += 1
            rn = float(np.linalg.norm(r))
            best_resid = min(best_resid, rn)
            if rn <= tol:
                locked = np.concatenate([locked, y[:, None]], axis=1)
                locked_vals.append(float(theta[i]))
                locked_resid.append(rn)
                newly += 1
            else:
                if newly == 0 and not breakdown:
                    # lowest remaining pair unconverged: warm-restart from it
                    start = y
                break
        if newly == 0:
            stagnant += 1
            if breakdown:
                # invariant subspace exhausted and nothing new: the deflated
                # operator has no further distinct directions reachable;
                # try a fresh random start
                start = None
            if stagnant > 50:
                raise ConvergenceError(
                    f"Lanczos stagnated after {n_mv} matrix applications "
                    f"({len(locked_vals)}/{m} converged, best residual {best_resid:.3e})",
                    converged=len(locked_vals), requested=m, n_matvec=n_mv,
                    best_residual=best_resid)
        else:
            stagnant = 0

    order = np.argsort(locked_vals)
    evals = np.asarray(locked_vals)[order]
    evecs = locked[:, order]
    resid = np.asarray(locked_resid)[order]
    return evals, evecs, resid, n_mv


def low_level_count(op, basis, threshold, tol=DEFAULT_TOL, *, seed=0,
                    m0=2, cap=32, method="auto"):
    """Number of levels below an energy threshold, with the level count
    adaptively enlarged until the first level above the threshold is seen
    (no missing degenerate copies).

    Returns (count, SpectrumResult of the final solve).
    """
    m = min(max(1, m0), max(basis.dim, 1))
    while True:
        res = lowest_eigenpairs(op, basis, m, tol, seed=seed, method=method)
        below = int(np.sum(res.eigenvalues < threshold))
        if below < len(res.eigenvalues) or m >= min(cap, basis.dim):
            return below, res
        m = min(2 * m, cap, basis.dim)


def ground_multiplicity(op, basis, rtol=DEGENERACY_RTOL, tol=DEFAULT_TOL, *,
                        seed=0, cap=32, method="auto"):
    """Multiplicity of the lowest level of a sector, resolved adaptively."""
    if basis.dim == 0:
        return 0, None
    res = lowest_eigenpairs(op, basis, 1, tol, seed=seed, method=method)
    e0 = float(res.eigenvalues[0])
    return low_level_count(op, basis, e0 + rtol * max(1.0, abs(e0)), tol,
                           seed=seed, cap=cap, method=method)


def spin_gap(op_sz0, op_sz1=None, *, momenta=None, tol=DEFAULT_TOL, seed=0,
             method="auto"):
    """Spin gap: min over sz=1 sector minima minus the global sz=0 minimum.

    op_sz1 defaults to the same operator (it conserves Sz).  Returns a
    GapResult; a negative gap is flagged, not rejected.
    """
    op = op_sz0
    op1 = op_sz1 if op_sz1 is not None else op
    cluster = op.cluster
    if momenta is None:
        momenta = allowed_momenta(cluster)
    minima = {}
    for sz, the_op in ((0, op), (1, op1)):
        for mom in momenta:
            basis = build_momentum_basis(cluster, sz, mom)
            if basis.dim == 0:
                continue
            res = lowest_eigenpairs(the_op, basis, 1, tol, seed=seed,
                                    method=method, want_vectors=False)
            minima[(sz, mom)] = float(res.eigenvalues[0])
    e0 = min(v for (sz, _), v in minima.items() if sz == 0)
    e1 = min(v for (sz, _), v in minima.items() if sz == 1)
    return GapResult(gap=e1 - e0, e0_sz0=e0, e0_sz1=e1, sector_minima=minima,
                     negative=(e1 - e0) < 0)


@dataclass
class GapResult:
    gap: float
    e0_sz0: float
    e0_sz1: float
    sector_minima: dict
    negative: bool = False


@dataclass
class PointGroupLabel:
    name: str
    characters: dict
    momentum: object
    ambiguous: bool = False

    def __str__(self):
        return self.name


def little_group(cluster, momentum):
    """Point-group operations of the cluster that fix the momentum."""
    n = cluster.n_sites
    v = np.array([momentum.vx, momentum.vy], dtype=np.int64)
    ops = []
    for op in cluster.point_group_ops:
        gv = (op.matrix @ v) % n
        if gv[0] == momentum.vx % n and gv[1] == momentum.vy % n:
            ops.append(op)
    return ops


def label_point_group(vec, basis, char_tol=1e-6):
    """Point-group character signature of a converged eigenvector.

    Works at momenta fixed by part of the cluster point group; returns the
    irrep name when the characters identify one, otherwise an ambiguous
    label carrying the raw characters (degenerate multiplets).
    """
    cluster = basis.cluster
    ops = [op for op in little_group(cluster, basis.momentum) if op.name != "e"]
    chars = {}
    for op in ops:
        gv = apply_site_permutation(basis, op.perm, vec)
        chars[op.name] = complex(np.vdot(vec, gv))
    name, ambiguous = _classify_characters(chars, char_tol)
    return PointGroupLabel(name=name, characters=chars, momentum=basis.momentum,
                           ambiguous=ambiguous)


def _near(x, target, tol):
    return abs(x - target) <= tol


def _classify_characters(chars, tol):
    if not chars:
        return "A", False
    vals = list(chars.values())
    if any(abs(abs(c) - 1.0) > 1e-3 for c in vals):
        return "?", True
    if all(_near(c, 1.0, tol) for c in vals):
        return "A1" if len(chars) > 1 else "A", False
    has_c4 = "r90" in chars
    has_refl = any(k in chars for k in ("mx", "my", "md", "mad"))
    if has_c4 and has_refl:
        c4 = chars["r90"]
        sv = chars.get("mx", chars.get("my"))
        sd = chars.get("md", chars.get("mad"))
        table = {(1, 1, 1): "A1", (1, -1, -1): "A2",
                 (-1, 1, -1): "B1", (-1, -1, 1): "B2"}
        key = tuple(int(round(np.real(x))) for x in (c4, sv, sd))
        if key in table and all(_near(x, k, tol) for x, k in zip((c4, sv, sd), key)):
            return table[key], False
        return "E?", True
    if has_c4:
        c4 = chars["r90"]
        if _near(c4, 1.0, tol):
            return "A", False
        if _near(c4, -1.0, tol):
            return "B", False
        if _near(c4, 1j, tol):
            return "E(+i)", False
        if _near(c4, -1j, tol):
            return "E(-i)", False
        return "?", True
    if "r180" in chars and has_refl:
        c2 = chars["r180"]
        refl = [chars[k] for k in ("mx", "my", "md", "mad") if k in chars]
        key = (int(round(np.real(c2))),) + tuple(int(round(np.real(r))) for r in refl[:2])
        table = {(1, 1, 1): "A1", (1, -1, -1): "A2",
                 (-1, 1, -1): "B1", (-1, -1, 1): "B2"}
        if key in table:
            return table[key], False
        return "?", True
    # single nontrivial operation
    c = vals[0]
    if _near(c, 1.0, tol):
        return "A", False
    if _near(c, -1.0, tol):
        return "B", False
    return "?", True
