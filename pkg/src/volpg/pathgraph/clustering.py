"""Spatial clustering of shading points.

Per compatibility class (volume points per medium, surface points per
surface), ceil(N/K) centers are drawn uniformly at random and every point
is assigned to its nearest center through a hash grid over positions:
the point's cell and its 26 neighbors are searched, falling back to a
brute-force scan over all centers when the neighborhood holds no center
or when the nearest candidate is farther than one cell (a center outside
the neighborhood could then be closer, so the fallback keeps assignments
exactly nearest). Oversized clusters (> 2K members) are split by
promoting a random member to a new center and reassigning, repeated
until every cluster fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Cluster:
    center: int  # record index of the cluster center
    members: np.ndarray  # record indices, ascending


def cluster_points(positions, class_keys, K: int, rng: np.random.Generator):
    """Cluster points within compatibility classes.

    Returns (cluster_id per point, list of Cluster). K >= 1; classes with
    fewer than K points form a single cluster.
    """
    if K < 1:
        raise ValueError("cluster size K must be >= 1")
    positions = np.asarray(positions, dtype=np.float64)
    class_keys = np.asarray(class_keys)
    n = positions.shape[0]
    cluster_id = np.full(n, -1, dtype=np.int64)
    clusters: list[Cluster] = []
    for key in np.unique(class_keys):
        rows = np.nonzero(class_keys == key)[0]
        _cluster_class(positions, rows, K, rng, cluster_id, clusters)
    return cluster_id, clusters


def _cluster_class(positions, rows, K, rng, cluster_id, clusters):
    n = rows.shape[0]
    pts = positions[rows]
    n_centers = (n + K - 1) // K
    center_rows = rng.choice(n, size=n_centers, replace=False)
    centers = pts[center_rows]

    assign = _nearest_center(pts, centers)
    groups = [list(np.nonzero(assign == c)[0]) for c in range(n_centers)]
    center_list = list(center_rows)

    # split until every cluster holds at most 2K members
    queue = [c for c in range(len(groups)) if len(groups[c]) > 2 * K]
    while queue:
        c = queue.pop()
        members = np.asarray(groups[c], dtype=np.int64)
        if members.shape[0] <= 2 * K:
            continue
        candidates = members[members != center_list[c]]
        if candidates.shape[0] == 0:
            candidates = members
        new_center = int(candidates[rng.integers(candidates.shape[0])])
        pair = pts[[center_list[c], new_center]]
        side = np.argmin(
            ((pts[members][:, None, :] - pair[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        keep = members[side == 0]
        moved = members[side == 1]
        if keep.shape[0] == 0 or moved.shape[0] == 0:
            # coincident points: split by halves so the loop always progresses
            half = members.shape[0] // 2
            keep, moved = members[:half], members[half:]
        groups[c] = list(keep)
        groups.append(list(moved))
        center_list.append(new_center)
        if len(keep) > 2 * K:
            queue.append(c)
        if len(moved) > 2 * K:
            queue.append(len(groups) - 1)

    for c, g in enumerate(groups):
        if not g:
            continue
        members = np.sort(rows[np.asarray(g, dtype=np.int64)])
        cid = len(clusters)
        cluster_id[members] = cid
        clusters.append(Cluster(center=int(rows[center_list[c]]), members=members))


def _nearest_center(pts, centers):
    """Exact nearest-center assignment via a hash grid with brute-force fallback."""
    n = pts.shape[0]
    m = centers.shape[0]
    if m == 1:
        return np.zeros(n, dtype=np.int64)
    lo = pts.min(axis=0)
    extent = pts.max(axis=0) - lo
    # cell size targeting ~m cells total, so a cell holds ~1 center
    volume = float(np.prod(np.maximum(extent, 1e-12)))
    cell = max((volume / m) ** (1.0 / 3.0), 1e-9)

    center_cells: dict[tuple, list] = {}
    ccoord = np.floor((centers - lo) / cell).astype(np.int64)
    for i in range(m):
        center_cells.setdefault(tuple(ccoord[i]), []).append(i)

    assign = np.full(n, -1, dtype=np.int64)
    pcoord = np.floor((pts - lo) / cell).astype(np.int64)
    order = np.lexsort((pcoord[:, 2], pcoord[:, 1], pcoord[:, 0]))
    sorted_cells = pcoord[order]
    boundaries = np.nonzero(np.any(sorted_cells[1:] != sorted_cells[:-1], axis=1))[0] + 1
    starts = np.concatenate(([0], boundaries, [n]))

    brute_rows = []
    for b in range(starts.shape[0] - 1):
        block = order[starts[b] : starts[b + 1]]
        cx, cy, cz = sorted_cells[starts[b]]
        cand = []
        for dx_ in (-1, 0, 1):
            for dy_ in (-1, 0, 1):
                for dz_ in (-1, 0, 1):
                    cand.extend(center_cells.get((cx + dx_, cy + dy_, cz + dz_), ()))
        if not cand:
            brute_rows.append(block)
            continue
        cand = np.asarray(sorted(cand), dtype=np.int64)
        d2 = ((pts[block][:, None, :] - centers[cand][None, :, :]) ** 2).sum(axis=2)
        best = np.argmin(d2, axis=1)
        best_d = np.sqrt(d2[np.arange(block.shape[0]), best])
        assign[block] = cand[best]
        # a center outside the 27-cell neighborhood could still be nearer
        too_far = best_d >= cell
        if np.any(too_far):
            brute_rows.append(block[too_far])

    if brute_rows:
        rows = np.concatenate(brute_rows)
        for start in range(0, rows.shape[0], 4096):
            chunk = rows[start : start + 4096]
            d2 = ((pts[chunk][:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            assign[chunk] = np.argmin(d2, axis=1)
    return assign
