"""Finite periodic square-lattice clusters.

A cluster is the quotient of the square lattice by two integer spanning
vectors.  Both spanning vectors must have even coordinate sum so the A/B
sublattice checkerboard is consistent on the torus.  Site indexing is
deterministic: canonical coordinates sorted lexicographically.
"""

import math
from dataclasses import dataclass, field

import numpy as np

#: Standard cluster shapes.  The 16-site cluster is the plain 4x4 torus;
#: the 20- and 32-site shapes are the canonical tilted bipartite clusters
#: compatible with the momenta used in the sweeps.
CLUSTER_SHAPES = {
    "16": ((4, 0), (0, 4)),
    "20": ((4, 2), (-2, 4)),
    "32": ((4, 4), (-4, 4)),
}

_BOND_DIRECTIONS = {
    1: ((1, 0), (0, 1)),
    2: ((1, 1), (1, -1)),
    3: ((2, 0), (0, 2)),
}

_POINT_OP_MATRICES = (
    ("e", ((1, 0), (0, 1))),
    ("r90", ((0, -1), (1, 0))),
    ("r180", ((-1, 0), (0, -1))),
    ("r270", ((0, 1), (-1, 0))),
    ("mx", ((-1, 0), (0, 1))),
    ("my", ((1, 0), (0, -1))),
    ("md", ((0, 1), (1, 0))),
    ("mad", ((0, -1), (-1, 0))),
)


@dataclass(frozen=True)
class Momentum:
    """Torus momentum k = 2*pi*(vx, vy)/n with integer components."""

    vx: int
    vy: int
    n: int

    @property
    def k(self):
        return (2.0 * math.pi * self.vx / self.n, 2.0 * math.pi * self.vy / self.n)

    @property
    def label(self):
        return f"({_pi_fraction(2 * self.vx, self.n)},{_pi_fraction(2 * self.vy, self.n)})"

    def __str__(self):
        return self.label


def _pi_fraction(num, den):
    """Format num/den * pi, reduced, as a compact string."""
    num %= 2 * den  # momenta live on [0, 2*pi)
    if num == 0:
        return "0"
    g = math.gcd(num, den)
    p, q = num // g, den // g
    head = "pi" if p == 1 else f"{p}pi"
    return head if q == 1 else f"{head}/{q}"


@dataclass(frozen=True)
class Plaquette:
    """Six-site rectangular plaquette (3x2 or 2x3) with its two
    same-sublattice triples."""

    sites: tuple
    orientation: str  # "horizontal" (3x2) or "vertical" (2x3)
    a_triple: tuple
    b_triple: tuple


@dataclass
class PointGroupOp:
    name: str
    matrix: np.ndarray  # 2x2 integer
    perm: np.ndarray    # site permutation


@dataclass
class Cluster:
    """Periodic cluster: geometry, bond tables and symmetry operations.

    Immutable after construction; safe to share across workers.
    """

    spanning_vectors: tuple
    n_sites: int
    site_coords: np.ndarray   # (N, 2) int
    sublattice: np.ndarray    # (N,) int8, 0 = A, 1 = B
    bonds1: np.ndarray        # (2N, 2) ordered (site, site+d), d in {(1,0),(0,1)}
    bonds2: np.ndarray        # d in {(1,1),(1,-1)}
    bonds3: np.ndarray        # d in {(2,0),(0,2)}
    translations: np.ndarray  # (N, N) int64; row t translates by site_coords[t]
    point_group_ops: list = field(default_factory=list)
    _site_lookup: dict = field(default_factory=dict, repr=False)
    _mat: np.ndarray = None
    _adj: np.ndarray = None
    _det: int = 0
    _momenta: list = field(default=None, repr=False)
    _plaquettes: list = field(default=None, repr=False)

    @property
    def key(self):
        (a, b), (c, d) = self.spanning_vectors
        return f"{self.n_sites}[{a},{b};{c},{d}]"

    def canonical(self, coord):
        """Canonical representative of a lattice coordinate on the torus."""
        w = self._adj @ np.asarray(coord, dtype=np.int64)
        w %= self._det
        x = (self._mat @ w) // self._det
        return (int(x[0]), int(x[1]))

    def site_index(self, coord):
        return self._site_lookup[self.canonical(coord)]

    def identity_translation(self):
        """Index of the translation by (0, 0)."""
        return self._site_lookup[(0, 0)]

    def in_lattice(self, vec):
        """Whether an integer vector belongs to the spanning lattice."""
        w = self._adj @ np.asarray(vec, dtype=np.int64)
        return bool(np.all(w % self._det == 0))

    def momentum(self, vx, vy):
        """Validated momentum 2*pi*(vx, vy)/N."""
        n = self.n_sites
        vx %= n
        vy %= n
        m = Momentum(vx, vy, n)
        if m not in set(allowed_momenta(self)):
            raise ValueError(f"momentum {m.label} not allowed on cluster {self.key}")
        return m

    def momentum_from_k(self, kx, ky, tol=1e-9):
        """Momentum nearest to physical (kx, ky); must match exactly."""
        n = self.n_sites
        vx = round(kx * n / (2.0 * math.pi))
        vy = round(ky * n / (2.0 * math.pi))
        if (abs(kx - 2.0 * math.pi * vx / n) > tol
                or abs(ky - 2.0 * math.pi * vy / n) > tol):
            raise ValueError(f"({kx}, {ky}) is not a torus momentum of cluster {self.key}")
        return self.momentum(vx, vy)

    def phase_exponents(self, momentum):
        """(v . u_t) mod N for every translation t; the translation phase
        is exp(-2i*pi/N)**exponent."""
        v = np.array([momentum.vx, momentum.vy], dtype=np.int64)
        return (self.site_coords @ v) % self.n_sites

    def phases(self, momentum):
        """chi[t] = exp(-i k . u_t) for every translation t."""
        expo = self.phase_exponents(momentum)
        return np.exp(-2j * np.pi * expo / self.n_sites)

    def to_text(self):
        """Site/bond/plaquette tables as plain text."""
        lines = [f"cluster {self.key}",
                 f"spanning vectors: {self.spanning_vectors[0]} {self.spanning_vectors[1]}",
                 "", "sites (index, x, y, sublattice):"]
        for s, (x, y) in enumerate(self.site_coords):
            lines.append(f"  {s:3d}  {x:3d} {y:3d}  {'AB'[self.sublattice[s]]}")
        for name, bonds in (("bonds1", self.bonds1), ("bonds2", self.bonds2),
                            ("bonds3", self.bonds3)):
            lines.append("")
            lines.append(f"{name} ({len(bonds)} ordered pairs):")
            lines.append("  " + " ".join(f"({i},{j})" for i, j in bonds))
        plaqs = enumerate_plaquettes(self)
        lines.append("")
        lines.append(f"plaquettes ({len(plaqs)}):")
        for p in plaqs:
            lines.append(f"  {p.orientation[0]} sites={p.sites} A={p.a_triple} B={p.b_triple}")
        lines.append("")
        lines.append("allowed momenta: " + " ".join(m.label for m in allowed_momenta(self)))
        lines.append("point group: " + " ".join(op.name for op in self.point_group_ops))
        return "\n".join(lines)


def cluster_by_name(name):
    """Cluster from the standard catalog ("16", "20", "32")."""
    if name not in CLUSTER_SHAPES:
        raise ValueError(f"unknown cluster name {name!r}; known: {sorted(CLUSTER_SHAPES)}")
    return build_cluster(CLUSTER_SHAPES[name])


def build_cluster(spanning_vectors):
    """Build a periodic cluster from two integer spanning vectors.

    Rejects singular spans and spans with odd coordinate sum (which would
    break the A/B bipartition on the torus).
    """
    t1, t2 = (tuple(int(c) for c in v) for v in spanning_vectors)
    det = t1[0] * t2[1] - t2[0] * t1[1]
    if det == 0:
        raise ValueError("spanning vectors are collinear")
    if det < 0:
        t1, t2 = t2, t1
        det = -det
    for v in (t1, t2):
        if (v[0] + v[1]) % 2 != 0:
            raise ValueError(f"spanning vector {v} has odd coordinate sum; "
                             "A/B bipartition would be inconsistent")
    n = det
    mat = np.array([[t1[0], t2[0]], [t1[1], t2[1]]], dtype=np.int64)
    adj = np.array([[t2[1], -t2[0]], [-t1[1], t1[0]]], dtype=np.int64)

    def canon(x, y):
        w = adj @ np.array([x, y], dtype=np.int64)
        w %= det
        c = (mat @ w) // det
        return (int(c[0]), int(c[1]))

    span = abs(t1[0]) + abs(t2[0]), abs(t1[1]) + abs(t2[1])
    seen = set()
    for x in range(-span[0], span[0] + 1):
        for y in range(-span[1], span[1] + 1):
            seen.add(canon(x, y))
    if len(seen) != n:
        raise ValueError(f"site enumeration found {len(seen)} sites, expected {n}")
    coords = np.array(sorted(seen), dtype=np.int64)
    lookup = {(int(x), int(y)): s for s, (x, y) in enumerate(coords)}
    sub = ((coords[:, 0] + coords[:, 1]) % 2).astype(np.int8)

    def bond_table(directions):
        pairs = []
        for s, (x, y) in enumerate(coords):
            for dx, dy in directions:
                t = lookup[canon(x + dx, y + dy)]
                if t != s:
                    pairs.append((s, t))
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)

    bonds = {c: bond_table(dirs) for c, dirs in _BOND_DIRECTIONS.items()}

    trans = np.empty((n, n), dtype=np.int64)
    for t, (ux, uy) in enumerate(coords):
        for s, (x, y) in enumerate(coords):
            trans[t, s] = lookup[canon(x + ux, y + uy)]

    cluster = Cluster(
        spanning_vectors=(t1, t2),
        n_sites=n,
        site_coords=coords,
        sublattice=sub,
        bonds1=bonds[1],
        bonds2=bonds[2],
        bonds3=bonds[3],
        translations=trans,
        _site_lookup=lookup,
        _mat=mat,
        _adj=adj,
        _det=det,
    )

    ops = []
    for name, rows in _POINT_OP_MATRICES:
        g = np.array(rows, dtype=np.int64)
        if not (cluster.in_lattice(g @ np.array(t1)) and cluster.in_lattice(g @ np.array(t2))):
            continue
        perm = np.array([lookup[canon(*map(int, g @ c))] for c in coords], dtype=np.int64)
        ops.append(PointGroupOp(name=name, matrix=g, perm=perm))
    cluster.point_group_ops = ops
    return cluster


def enumerate_plaquettes(cluster):
    """All 2N six-site rectangular plaquettes (N horizontal 3x2, N vertical
    2x3), each with its A- and B-sublattice triples."""
    if cluster._plaquettes is not None:
        return cluster._plaquettes
    offsets = {
        "horizontal": ((0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)),
        "vertical": ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)),
    }
    plaqs = []
    for orientation, offs in offsets.items():
        for x, y in cluster.site_coords:
            sites = tuple(cluster.site_index((x + dx, y + dy)) for dx, dy in offs)
            if len(set(sites)) != 6:
                raise ValueError(f"cluster {cluster.key} too small for six-site plaquettes")
            a = tuple(s for s in sites if cluster.sublattice[s] == 0)
            b = tuple(s for s in sites if cluster.sublattice[s] == 1)
            if len(a) != 3 or len(b) != 3:
                raise ValueError("plaquette does not split 3/3 over sublattices")
            plaqs.append(Plaquette(sites=sites, orientation=orientation,
                                   a_triple=a, b_triple=b))
    cluster._plaquettes = plaqs
    return plaqs


def allowed_momenta(cluster):
    """The N torus momenta k = 2*pi*v/N with exp(i k . T) = 1 for both
    spanning vectors T."""
    if cluster._momenta is not None:
        return cluster._momenta
    n = cluster.n_sites
    t1, t2 = cluster.spanning_vectors
    out = []
    for vx in range(n):
        for vy in range(n):
            if ((vx * t1[0] + vy * t1[1]) % n == 0
                    and (vx * t2[0] + vy * t2[1]) % n == 0):
                out.append(Momentum(vx, vy, n))
    if len(out) != n:
        raise ValueError(f"momentum enumeration found {len(out)}, expected {n}")
    cluster._momenta = out
    return out


def distinct_pairs(bonds):
    """Unordered deduplication of an ordered bond table, order-preserving."""
    seen = set()
    out = []
    for i, j in bonds:
        key = (min(i, j), max(i, j))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out
