"""Periodic Vietoris-Rips persistence in dimensions 0 and 1.

dim 0 comes from union-find over edges sorted by torus length (deaths are
the merge radii, i.e. Kruskal tree edge lengths). dim 1 uses boundary-matrix
reduction over Z/2 on the edge/triangle filtration, with two exact
shortcuts: the cap radius is lowered to the enclosing radius (once one
vertex neighbours every other, the complex is a cone and H1 is and stays
trivial), and apparent pairs (triangle whose maximal facet's minimal
cofacet it is) are paired without reduction work.

Zero-persistence pairs (birth == death exactly) are dropped from diagrams.
Classes alive at the cap are reported with death = r_cap and flagged
essential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import PointPattern, torus_distance_matrix

__all__ = [
    "PersistenceDiagram",
    "persistence",
    "pd_wasserstein",
    "mean_cross_distance",
    "write_pd_csv",
]


@dataclass(frozen=True)
class PersistenceDiagram:
    births: np.ndarray
    deaths: np.ndarray
    dims: np.ndarray
    essential: np.ndarray
    r_cap: float

    def __post_init__(self):
        b = np.asarray(self.births, dtype=float)
        d = np.asarray(self.deaths, dtype=float)
        dm = np.asarray(self.dims, dtype=int)
        es = np.asarray(self.essential, dtype=bool)
        if not (b.shape == d.shape == dm.shape == es.shape):
            raise ValueError("diagram arrays must share one shape")
        if np.any(b > d) or np.any(b < 0):
            raise ValueError("need 0 <= birth <= death")
        for name, arr in (("births", b), ("deaths", d), ("dims", dm), ("essential", es)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.births)

    def restrict(self, dim):
        """(births, deaths) of one homology dimension."""
        m = self.dims == dim
        return self.births[m], self.deaths[m]

    def betti(self, r, dim):
        """Number of dim-classes alive at radius r (essential never die)."""
        m = self.dims == dim
        alive = (self.births[m] <= r) & ((r < self.deaths[m]) | self.essential[m])
        return int(np.count_nonzero(alive))


class _UnionFind:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[ri] = rj
        return True


def persistence(
    p: PointPattern, r_cap=0.5, size_cap=3000, max_dim=1, use_apparent_pairs=True
) -> PersistenceDiagram:
    """Persistence diagram of the periodic VR filtration up to r_cap.

    max_dim=0 skips the (much heavier) dim-1 reduction. Patterns above
    size_cap are rejected; thin them first (geometry.random_thin).
    """
    n = len(p)
    if n == 0:
        raise ValueError("pattern must be non-empty")
    if n > size_cap:
        raise ValueError(
            f"{n} points exceeds the size cap {size_cap}; "
            "thin the pattern first (geometry.random_thin)"
        )
    if not (r_cap > 0):
        raise ValueError("r_cap must be positive")
    D = torus_distance_matrix(p.points, p.points, p.window)
    if n == 1:
        return PersistenceDiagram([0.0], [r_cap], [0], [True], r_cap)
    # enclosing radius: from here on the complex is a cone, H1 stays trivial
    r_enc = float(D.max(axis=1).min())
    r_eff = min(float(r_cap), r_enc)
    iu, ju = np.triu_indices(n, 1)
    lengths = D[iu, ju]
    keep = lengths <= r_eff
    ei, ej, el = iu[keep], ju[keep], lengths[keep]
    order = np.lexsort((ej, ei, el))
    ei, ej, el = ei[order], ej[order], el[order]

    births, deaths, dims, ess = [], [], [], []
    uf = _UnionFind(n)
    is_cycle_edge = np.zeros(len(el), dtype=bool)
    for q in range(len(el)):
        if uf.union(int(ei[q]), int(ej[q])):
            births.append(0.0)
            deaths.append(float(el[q]))
            dims.append(0)
            ess.append(False)
        else:
            is_cycle_edge[q] = True
    n_components = n - (len(deaths))
    for _ in range(n_components):
        births.append(0.0)
        deaths.append(float(r_cap))
        dims.append(0)
        ess.append(True)

    if max_dim >= 1 and n >= 3 and len(el) > 0:
        b1, d1, e1 = _dim1_pairs(n, ei, ej, el, is_cycle_edge, r_cap, use_apparent_pairs)
        births += b1
        deaths += d1
        dims += [1] * len(b1)
        ess += e1
    return PersistenceDiagram(births, deaths, dims, ess, float(r_cap))


def _dim1_pairs(n, ei, ej, el, is_cycle_edge, r_cap, use_apparent_pairs):
    """(births, deaths, essential_flags) of dim-1 classes.

    Edge q's filtration position is q itself (the arrays arrive sorted);
    triangles are ordered by their descending-sorted edge positions, which
    refines filtration order because el is nondecreasing.
    """
    m = len(el)
    pos = np.full((n, n), -1, dtype=np.int64)
    pos[ei, ej] = np.arange(m)
    pos[ej, ei] = np.arange(m)
    adj = np.zeros((n, n), dtype=bool)
    adj[ei, ej] = True
    adj[ej, ei] = True

    tri_chunks = []
    for q in range(m):
        i, j = int(ei[q]), int(ej[q])
        ws = np.nonzero(adj[i] & adj[j])[0]
        ws = ws[ws > j]
        if len(ws):
            a = pos[i, ws]
            b = pos[j, ws]
            c = np.full(len(ws), pos[i, j])
            tri_chunks.append(np.stack([a, b, c], axis=1))
    if not tri_chunks:
        # every cycle edge is an unfillable loop
        births = [float(el[q]) for q in np.nonzero(is_cycle_edge)[0]]
        return births, [float(r_cap)] * len(births), [True] * len(births)
    tris = np.concatenate(tri_chunks, axis=0)
    tris = np.sort(tris, axis=1)  # ascending: [pmin, pmid, pmax]
    keyorder = np.lexsort((tris[:, 0], tris[:, 1], tris[:, 2]))
    tris = tris[keyorder]
    ntri = len(tris)

    consumed = np.zeros(ntri, dtype=bool)
    # columns are integer bitmasks over edge positions: XOR adds columns,
    # bit_length finds the pivot
    pivot_col = {}
    if use_apparent_pairs:
        # minimal cofacet of every edge; apparent iff that cofacet's maximal
        # facet is the edge itself
        arr_e = tris.ravel()
        arr_t = np.repeat(np.arange(ntri), 3)
        first = np.lexsort((arr_t, arr_e))
        arr_e, arr_t = arr_e[first], arr_t[first]
        head = np.ones(len(arr_e), dtype=bool)
        head[1:] = arr_e[1:] != arr_e[:-1]
        for edge_q, t in zip(arr_e[head], arr_t[head]):
            if tris[t, 2] == edge_q:
                consumed[t] = True
                pivot_col[int(edge_q)] = (
                    (1 << int(tris[t, 0]))
                    | (1 << int(tris[t, 1]))
                    | (1 << int(tris[t, 2]))
                )

    births, deaths = [], []
    get = pivot_col.get
    for t in range(ntri):
        if consumed[t]:
            continue
        p0, p1, p2 = tris[t]
        col = (1 << int(p0)) | (1 << int(p1)) | (1 << int(p2))
        filt = float(el[p2])
        while col:
            piv = col.bit_length() - 1
            other = get(piv)
            if other is None:
                pivot_col[piv] = col
                birth = float(el[piv])
                if filt > birth:
                    births.append(birth)
                    deaths.append(filt)
                break
            col ^= other
    essential_edges = [
        q for q in np.nonzero(is_cycle_edge)[0] if int(q) not in pivot_col
    ]
    ess = [False] * len(births)
    for q in essential_edges:
        births.append(float(el[q]))
        deaths.append(float(r_cap))
        ess.append(True)
    return births, deaths, ess


def pd_wasserstein(a: PersistenceDiagram, b: PersistenceDiagram, dim=0) -> float:
    """Order-1 Wasserstein distance, L-infinity ground metric, diagonal
    projections allowed at half persistence; exact optimal assignment."""
    from scipy.optimize import linear_sum_assignment

    ba, da = a.restrict(dim)
    bb, db = b.restrict(dim)
    na, nb = len(ba), len(bb)
    if na == 0 and nb == 0:
        return 0.0
    persa = (da - ba) / 2.0
    persb = (db - bb) / 2.0
    size = na + nb
    cross = np.maximum(
        np.abs(ba[:, None] - bb[None, :]), np.abs(da[:, None] - db[None, :])
    ) if na and nb else np.zeros((na, nb))
    finite_max = 0.0
    if cross.size:
        finite_max = float(cross.max())
    finite_max = max(finite_max, float(persa.max()) if na else 0.0,
                     float(persb.max()) if nb else 0.0)
    large = (size + 1.0) * (finite_max + 1.0)
    M = np.full((size, size), large)
    if na and nb:
        M[:na, :nb] = cross
    M[na:, nb:] = 0.0
    for i in range(na):
        M[i, nb + i] = persa[i]
    for j in range(nb):
        M[na + j, j] = persb[j]
    rows, cols = linear_sum_assignment(M)
    return float(M[rows, cols].sum())


def mean_cross_distance(group_a, group_b, dims=(0, 1)) -> float:
    """Mean over the full bipartite product of summed per-dim distances."""
    if not group_a or not group_b:
        raise ValueError("groups must be non-empty")
    total = 0.0
    for da in group_a:
        for db in group_b:
            total += sum(pd_wasserstein(da, db, dim=d) for d in dims)
    return total / (len(group_a) * len(group_b))


def write_pd_csv(pd: PersistenceDiagram, path):
    lines = ["birth,death,dim"]
    for b, d, dm in zip(pd.births, pd.deaths, pd.dims):
        lines.append(f"{float(b)!r},{float(d)!r},{int(dm)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
