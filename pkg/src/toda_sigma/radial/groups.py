"""Scale-separated grouping of planar points (single linkage with a ratio cut)."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform


def detect_groups(points, ratio: float = 100.0) -> list[list[int]]:
    """Partition ``points`` into groups of mutually comparable distances.

    Minimum-spanning-tree edges are merged shortest first.  Two singletons
    always merge; otherwise an edge of length ``d`` joins two clusters only
    when ``d <= ratio * scale`` where ``scale`` is the larger internal merge
    distance of the two.  Returns index lists sorted by first index.
    """
    if ratio <= 1:
        raise ValueError("ratio must be > 1")
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = len(pts)
    if m == 0:
        raise ValueError("need at least one point")
    if m == 1:
        return [[0]]
    dist = squareform(pdist(pts))

    # Prim's algorithm; m is small
    in_tree = np.zeros(m, dtype=bool)
    best = np.full(m, np.inf)
    link = np.full(m, -1)
    best[0] = 0.0
    edges = []
    for _ in range(m):
        k = int(np.argmin(np.where(in_tree, np.inf, best)))
        in_tree[k] = True
        if link[k] >= 0:
            edges.append((best[k], int(link[k]), k))
        closer = (~in_tree) & (dist[k] < best)
        best[closer] = dist[k][closer]
        link[closer] = k
    edges.sort()

    parent = list(range(m))
    scale = [0.0] * m
    size = [1] * m

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for d, a, b in edges:
        ra, rb = find(a), find(b)
        if size[ra] == 1 and size[rb] == 1:
            merge = True
        else:
            merge = d <= ratio * max(scale[ra], scale[rb])
        if merge:
            parent[rb] = ra
            size[ra] += size[rb]
            scale[ra] = max(scale[ra], scale[rb], d)

    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])
