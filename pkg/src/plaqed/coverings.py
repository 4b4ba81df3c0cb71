"""Exhaustive dimer-covering search.

Enumerates perfect matchings built from diagonal (2nd-neighbor) and axial
(3rd-neighbor) bonds such that every six-site plaquette contains at least
one dimer lying entirely inside its A or B triple; any such covering's
product state is annihilated by every plaquette projector product.
Backtracking over sites in index order with forward checking of the
plaquette rule keeps the search desk-scale through 32 sites.
"""

from dataclasses import dataclass, field

import numpy as np

from .lattice import distinct_pairs, enumerate_plaquettes
from .vbs import make_pattern


@dataclass
class CoveringConstraintProblem:
    """Matching bonds + the per-plaquette satisfaction rule."""

    cluster: object
    allowed_bonds: list          # distinct unordered (i, j) pairs
    include_nearest: bool = False

    @classmethod
    def for_cluster(cls, cluster, include_nearest=False):
        bonds = distinct_pairs(np.vstack([cluster.bonds2, cluster.bonds3]))
        if include_nearest:
            # nearest-neighbor dimers can never sit inside a same-sublattice
            # triple, so they only widen the matching space (exploratory)
            bonds = bonds + distinct_pairs(cluster.bonds1)
        return cls(cluster=cluster, allowed_bonds=bonds,
                   include_nearest=include_nearest)


def _plaquette_candidates(cluster, allowed):
    """Per plaquette: the allowed pairs lying inside one of its triples."""
    pairset = set(allowed)
    out = []
    for p in enumerate_plaquettes(cluster):
        cand = []
        for tri in (p.a_triple, p.b_triple):
            for a in range(3):
                for b in range(a + 1, 3):
                    key = (min(tri[a], tri[b]), max(tri[a], tri[b]))
                    if key in pairset:
                        cand.append(key)
        out.append(tuple(cand))
    return out


def enumerate_valid_coverings(problem):
    """All perfect matchings over the allowed bonds satisfying the
    plaquette rule, in deterministic (site-index lexicographic) order.

    Accepts a CoveringConstraintProblem or a Cluster.
    """
    if not isinstance(problem, CoveringConstraintProblem):
        problem = CoveringConstraintProblem.for_cluster(problem)
    cluster = problem.cluster
    n = cluster.n_sites
    plaq_cand = _plaquette_candidates(cluster, problem.allowed_bonds)
    partners = {s: [] for s in range(n)}
    for i, j in problem.allowed_bonds:
        partners[i].append(j)
        partners[j].append(i)
    for s in partners:
        partners[s].sort()

    matched = [-1] * n
    chosen = set()
    results = []

    def feasible():
        for cand in plaq_cand:
            satisfied = False
            alive = False
            for pr in cand:
                if pr in chosen:
                    satisfied = True
                    break
                if matched[pr[0]] < 0 and matched[pr[1]] < 0:
                    alive = True
            if not (satisfied or alive):
                return False
        return True

    def recurse(start):
        s = start
        while s < n and matched[s] >= 0:
            s += 1
        if s == n:
            if all(any(pr in chosen for pr in cand) for cand in plaq_cand):
                results.append(tuple(sorted(chosen)))
            return
        for p in partners[s]:
            if p > s and matched[p] < 0:
                matched[s] = p
                matched[p] = s
                key = (s, p)
                chosen.add(key)
                if feasible():
                    recurse(s + 1)
                chosen.discard(key)
                matched[s] = -1
                matched[p] = -1

    recurse(0)
    return [make_pattern(cluster, pairs) for pairs in results]


@dataclass
class CountingReport:
    """Incidence counts behind the covering argument: plaquette count vs
    4 x dimer count, and per-bond plaquette membership by bond class."""

    n_sites: int
    n_plaquettes: int
    identity_ok: bool               # 2N == 4 * (N/2)
    diagonal_counts: dict = field(default_factory=dict)  # count -> #bonds
    axial_counts: dict = field(default_factory=dict)
    diagonal_ok: bool = False       # every diagonal bond in exactly 4
    axial_ok: bool = False          # every axial bond in 2 or 4

    def bond_count(self, cluster, pair):
        """Number of plaquettes containing the pair inside one triple."""
        return _bond_plaquette_count(cluster, pair)


def _bond_plaquette_count(cluster, pair):
    key = (min(pair), max(pair))
    count = 0
    for p in enumerate_plaquettes(cluster):
        for tri in (p.a_triple, p.b_triple):
            if key[0] in tri and key[1] in tri:
                count += 1
    return count


def check_counting_identities(cluster):
    """Verify the plaquette/dimer incidence counts on a cluster."""
    plaqs = enumerate_plaquettes(cluster)
    n = cluster.n_sites
    diag = distinct_pairs(cluster.bonds2)
    axial = distinct_pairs(cluster.bonds3)
    diag_counts = {}
    for pair in diag:
        c = _bond_plaquette_count(cluster, pair)
        diag_counts[c] = diag_counts.get(c, 0) + 1
    axial_counts = {}
    for pair in axial:
        c = _bond_plaquette_count(cluster, pair)
        axial_counts[c] = axial_counts.get(c, 0) + 1
    return CountingReport(
        n_sites=n,
        n_plaquettes=len(plaqs),
        identity_ok=(len(plaqs) == 2 * n == 4 * (n // 2)),
        diagonal_counts=diag_counts,
        axial_counts=axial_counts,
        diagonal_ok=(set(diag_counts) == {4}),
        axial_ok=(set(axial_counts) <= {2, 4}),
    )
