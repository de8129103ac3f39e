"""Density-based clustering with deterministic border-point assignment.

Semantics:
  * a core point has at least ``min_pts`` points (itself included) within
    distance ``epsilon`` (closed ball);
  * clusters are the connected components of the core points under the
    within-epsilon relation;
  * a non-core point within epsilon of at least one core point is a border
    point and joins the cluster of the lowest-index such core point;
  * everything else is noise.

Cluster labels are assigned in order of each cluster's lowest core-point
index, so the labeling is a pure function of the input order. Neighbor
queries go through a uniform grid of cell size epsilon; for small inputs a
vectorized all-pairs path produces identical results faster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOISE = -1

_DENSE_LIMIT = 600  # below this, the all-pairs path wins on constant factors


@dataclass
class DbscanParams:
    epsilon: float
    min_pts: int
    max_cluster_extent: float


def sq_dist_matrix(pts: np.ndarray) -> np.ndarray:
    """Pairwise squared distances without large intermediate tensors."""
    sq = (pts**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        p = self.parent
        root = i
        while p[root] != root:
            root = p[root]
        while p[i] != root:
            p[i], i = root, p[i]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def _labels_from_components(uf: _UnionFind, core: np.ndarray) -> np.ndarray:
    """Cluster index per core point, numbered by lowest core index."""
    n = len(core)
    labels = np.full(n, NOISE, dtype=np.int64)
    remap: dict = {}
    for i in np.flatnonzero(core):
        root = uf.find(int(i))
        if root not in remap:
            remap[root] = len(remap)
        labels[i] = remap[root]
    return labels


def _neighbor_lists_grid(pts: np.ndarray, eps: float) -> list:
    """Indices within eps of each point, via a uniform grid of cell size eps."""
    cells = np.floor(pts / eps).astype(np.int64)
    buckets: dict = {}
    for i, key in enumerate(map(tuple, cells)):
        buckets.setdefault(key, []).append(i)
    bucket_arrays = {k: np.array(v, dtype=np.int64) for k, v in buckets.items()}

    eps2 = eps * eps
    neighbors = []
    offsets = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
    for i in range(len(pts)):
        cx, cy = int(cells[i, 0]), int(cells[i, 1])
        cand_parts = []
        for dx, dy in offsets:
            arr = bucket_arrays.get((cx + dx, cy + dy))
            if arr is not None:
                cand_parts.append(arr)
        cand = np.concatenate(cand_parts)
        d2 = np.sum((pts[cand] - pts[i]) ** 2, axis=1)
        neighbors.append(np.sort(cand[d2 <= eps2]))
    return neighbors


def _labels_from_neighbors(neighbors: list, min_pts: int) -> np.ndarray:
    n = len(neighbors)
    core = np.array([len(nb) >= min_pts for nb in neighbors], dtype=bool)
    uf = _UnionFind(n)
    for i in range(n):
        if not core[i]:
            continue
        for j in neighbors[i]:
            if j > i and core[j]:
                uf.union(i, int(j))
    labels = _labels_from_components(uf, core)
    for i in range(n):
        if core[i]:
            continue
        for j in neighbors[i]:  # sorted ascending, so first core wins
            if core[j]:
                labels[i] = labels[j]
                break
    return labels


def _labels_dense(pts: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    n = len(pts)
    adj = sq_dist_matrix(pts) <= eps * eps
    core = adj.sum(axis=1) >= min_pts
    core_adj = adj & core[:, None] & core[None, :]
    uf = _UnionFind(n)
    edges_i, edges_j = np.nonzero(np.triu(core_adj, k=1))
    for i, j in zip(edges_i.tolist(), edges_j.tolist()):
        uf.union(i, j)
    labels = _labels_from_components(uf, core)

    core_reach = adj & core[None, :]
    border = ~core & core_reach.any(axis=1)
    if border.any():
        # argmax picks the first (lowest-index) core neighbor.
        first_core = core_reach.argmax(axis=1)
        labels[border] = labels[first_core[border]]
    return labels


def dbscan(points, params: DbscanParams, use_grid: bool | None = None) -> np.ndarray:
    """Label each point with its cluster index, or NOISE (-1).

    ``use_grid`` forces the neighbor-query backend; by default small inputs
    take the vectorized all-pairs path. Both backends produce identical
    labels.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    if use_grid is None:
        use_grid = n > _DENSE_LIMIT
    if use_grid:
        neighbors = _neighbor_lists_grid(pts, params.epsilon)
        return _labels_from_neighbors(neighbors, params.min_pts)
    return _labels_dense(pts, params.epsilon, params.min_pts)
