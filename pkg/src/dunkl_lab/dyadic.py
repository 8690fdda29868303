"""Hytonen-Kairema dyadic cube families on the windowed grid, for the
Euclidean metric and for the orbit metric d, with audits of the five
structural properties.

Construction: nested delta^k-nets of grid nodes (greedy sweep in one
dimension, farthest-point selection otherwise), nearest-center membership
at the finest level with lexicographic tie-breaking, and top-down parent
repair -- each finer cube's node set is attached wholly to the cube of its
center's nearest coarser center.  That makes partition (iii) and nesting
(iv) true by construction; (i), (ii) and the ball sandwich (v) are audited
by brute force over the node set.

The orbit metric is realized on orbit representatives: for Z_2^N the
fundamental domain is the nonnegative orthant, and d(x, y) reduces to the
Euclidean distance between |x| and |y|, so cubes are built over the
representative points and every cube's node set is a union of full orbits.
"""

import numpy as np

from .reports import AuditReport


class ResolutionError(Exception):
    """delta^k_max under-resolves (or the range over-spans) the grid."""


def _metric_points(grid, metric):
    pts = grid.flat_nodes()
    if metric == "orbit":
        return np.abs(pts)
    if metric == "euclidean":
        return pts
    raise ValueError("metric must be 'euclidean' or 'orbit'")


def _net_1d(sorted_vals, existing_sorted, radius):
    """Extend an existing 1-d net: sweep the sorted values left to right and
    keep any value farther than ``radius`` from every center so far."""
    centers = list(existing_sorted)
    import bisect
    for v in sorted_vals:
        i = bisect.bisect_left(centers, v)
        near = False
        if i > 0 and v - centers[i - 1] <= radius:
            near = True
        if not near and i < len(centers) and centers[i] - v <= radius:
            near = True
        if not near:
            bisect.insort(centers, v)
    return np.asarray(centers)


def _net_fps(points, existing_idx, radius):
    """Greedy farthest-point extension of a net on an (m, N) point set;
    returns indices into ``points``.  Deterministic: seeds with the
    lexicographically smallest point, ties resolved by np.argmax order."""
    m = points.shape[0]
    idx = list(existing_idx)
    if not idx:
        seed = int(np.lexsort(points.T[::-1])[0])
        idx.append(seed)
    dist = np.full(m, np.inf)
    for i in idx:
        dist = np.minimum(dist, np.linalg.norm(points - points[i], axis=-1))
    while True:
        far = int(np.argmax(dist))
        if dist[far] <= radius:
            break
        idx.append(far)
        dist = np.minimum(dist,
                          np.linalg.norm(points - points[far], axis=-1))
    return idx


class CubeRef:
    def __init__(self, system, level, index):
        self.system = system
        self.level = int(level)
        self.index = int(index)

    def nodes(self):
        """Flat node indices belonging to this cube."""
        return np.nonzero(
            self.system.assignment[self.level] == self.index)[0]

    def center(self):
        return self.system.centers[self.level][self.index]

    def side(self):
        return self.system.delta ** self.level

    def mass(self):
        return float(self.system.cube_mass[self.level][self.index])

    def __repr__(self):
        return "CubeRef(level=%d, index=%d)" % (self.level, self.index)


class DyadicSystem:
    """Finite-depth cube family; see module docstring for construction."""

    def __init__(self, grid, metric, delta, k_min, k_max):
        self.grid = grid
        self.metric = metric
        self.delta = float(delta)
        self.k_min = int(k_min)
        self.k_max = int(k_max)
        self.points = _metric_points(grid, metric)
        self.weights = grid.weights.ravel()
        self.centers = {}     # level -> (m_level, N) center coordinates
        self.assignment = {}  # level -> flat-node -> cube index
        self.parent = {}      # level -> cube index -> parent cube index
        self.cube_mass = {}
        self._build()

    def levels(self):
        return range(self.k_min, self.k_max + 1)

    def _build(self):
        grid, pts = self.grid, self.points
        N = pts.shape[1]
        one_d = N == 1
        if one_d:
            uniq = np.unique(pts[:, 0])
        center_vals = None
        center_idx = []
        for k in self.levels():
            radius = self.delta ** k
            if one_d:
                center_vals = _net_1d(uniq, [] if center_vals is None
                                      else center_vals, radius)
                self.centers[k] = center_vals.reshape(-1, 1)
            else:
                center_idx = _net_fps(pts, center_idx, radius)
                self.centers[k] = pts[np.array(center_idx)]
        # finest-level membership: nearest center, lexicographic ties
        self.assignment[self.k_max] = self._nearest_center(
            self.k_max, pts)
        # parent links: nearest coarser center to each child center,
        # then wholesale reassignment of the child's node set
        for k in range(self.k_max - 1, self.k_min - 1, -1):
            child_centers = self.centers[k + 1]
            self.parent[k + 1] = self._nearest_center(k, child_centers)
            self.assignment[k] = self.parent[k + 1][self.assignment[k + 1]]
        for k in self.levels():
            m = self.centers[k].shape[0]
            self.cube_mass[k] = np.bincount(self.assignment[k],
                                            weights=self.weights,
                                            minlength=m)

    def _nearest_center(self, level, query):
        centers = self.centers[level]
        if centers.shape[1] == 1:
            c = centers[:, 0]
            q = query[:, 0]
            pos = np.searchsorted(c, q)
            lo = np.clip(pos - 1, 0, len(c) - 1)
            hi = np.clip(pos, 0, len(c) - 1)
            # ties broken toward the smaller (left) center
            pick = np.where(np.abs(q - c[lo]) <= np.abs(c[hi] - q), lo, hi)
            return pick
        from scipy.spatial import cKDTree
        _, pick = cKDTree(centers).query(query)
        return pick

    def cube(self, level, index):
        return CubeRef(self, level, index)

    def node_distance(self, a, b):
        return np.linalg.norm(np.atleast_2d(a) - np.atleast_2d(b), axis=-1)

    def summary(self):
        return {
            "metric": self.metric,
            "delta": self.delta,
            "levels": [int(k) for k in self.levels()],
            "cubes_per_level": {str(k): int(self.centers[k].shape[0])
                                for k in self.levels()},
            "masses": {str(k): self.cube_mass[k].tolist()
                       for k in self.levels()},
        }


def build_dyadic(grid, metric="euclidean", delta=1.0 / 24.0, k_min=0,
                 k_max=1):
    """Build a dyadic system; preconditions per the cube lemma."""
    if not (0 < delta <= 1.0 / 24.0):
        raise ValueError("delta must lie in (0, 1/24]")
    diam = 2.0 * grid.window_radius * np.sqrt(grid.dimension)
    if delta ** k_min > diam:
        raise ResolutionError("delta^k_min exceeds the window diameter")
    if delta ** k_max < 4.0 * grid.max_spacing():
        raise ResolutionError(
            "delta^k_max = %.3g under-resolves the grid (spacing %.3g)"
            % (delta ** k_max, grid.max_spacing()))
    return DyadicSystem(grid, metric, delta, k_min, k_max)


def audit_dyadic(system):
    """Brute-force verdicts for the five structural clauses."""
    pts = system.points
    clauses = {}
    first_bad = None

    def record(name, ok, info=None):
        nonlocal first_bad
        clauses[name] = {"passed": bool(ok), "violations": info or 0}
        if not ok and first_bad is None:
            first_bad = {"clause": name, "detail": info}

    # (i) separation, (ii) covering
    sep_bad = 0
    cover_bad = 0
    sep_detail = None
    for k in system.levels():
        r = system.delta ** k
        c = system.centers[k]
        if c.shape[1] == 1:
            gaps = np.diff(c[:, 0])
            bad = np.sum(gaps <= r - 1e-12)
            if bad and sep_detail is None:
                j = int(np.argmax(gaps <= r - 1e-12))
                sep_detail = {"level": k, "centers": [float(c[j, 0]),
                                                      float(c[j + 1, 0])]}
            sep_bad += int(bad)
        else:
            from scipy.spatial import cKDTree
            tree = cKDTree(c)
            pairs = tree.query_pairs(r - 1e-12)
            sep_bad += len(pairs)
            if pairs and sep_detail is None:
                sep_detail = {"level": k, "pair": sorted(pairs)[0]}
        near = system._nearest_center(k, pts)
        dist = np.linalg.norm(pts - c[near], axis=-1)
        cover_bad += int(np.sum(dist > r + 1e-12))
    record("i_separation", sep_bad == 0, sep_bad or sep_detail)
    record("ii_covering", cover_bad == 0, cover_bad)

    # (iii) partition: every node assigned exactly once per level
    part_bad = 0
    for k in system.levels():
        a = system.assignment[k]
        m = system.centers[k].shape[0]
        part_bad += int(np.sum((a < 0) | (a >= m)))
    record("iii_partition", part_bad == 0, part_bad)

    # (iv) nesting through parent links
    nest_bad = 0
    for k in range(system.k_min + 1, system.k_max + 1):
        ok = np.all(system.assignment[k - 1]
                    == system.parent[k][system.assignment[k]])
        nest_bad += int(not ok)
    record("iv_nesting", nest_bad == 0, nest_bad)

    # (v) ball sandwich B(x_Q, delta^k/6) subset Q subset B(x_Q, 2 delta^k)
    inner_bad = 0
    outer_bad = 0
    detail_v = None
    for k in system.levels():
        r = system.delta ** k
        c = system.centers[k]
        a = system.assignment[k]
        dist_own = np.linalg.norm(pts - c[a], axis=-1)
        n_out = int(np.sum(dist_own > 2.0 * r + 1e-12))
        outer_bad += n_out
        near = system._nearest_center(k, pts)
        dist_near = np.linalg.norm(pts - c[near], axis=-1)
        inner = dist_near <= r / 6.0 - 1e-12
        n_in = int(np.sum(inner & (a != near)))
        inner_bad += n_in
        if (n_out or n_in) and detail_v is None:
            detail_v = {"level": k, "outer": n_out, "inner": n_in}
    record("v_ball_sandwich", inner_bad == 0 and outer_bad == 0, detail_v)

    passed = all(v["passed"] for v in clauses.values())
    return AuditReport("dyadic", passed, {"clauses": clauses},
                       counterexample=first_bad)


def locate(system, x, k):
    """CubeRef of the level-k cube owning the nearest grid node to x."""
    if k not in system.assignment:
        raise ValueError("level %d not in system" % k)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > system.grid.window_radius):
        raise ValueError("point outside the window")
    q = np.abs(x) if system.metric == "orbit" else x
    i = int(np.argmin(np.linalg.norm(system.points - q, axis=-1)))
    return CubeRef(system, k, int(system.assignment[k][i]))


def inject_center_shift(system, level, index, shift):
    """Fault injection for the audit tests: move one center and rebuild
    nothing else (so separation/covering break detectably)."""
    import copy
    broken = copy.copy(system)
    broken.centers = {k: v.copy() for k, v in system.centers.items()}
    broken.centers[level][index] += shift
    return broken


class ScalePartition:
    """A single-level cube-like partition of the grid at a prescribed
    spatial scale (net + nearest-center membership).  Used by the atomic
    decomposition, whose spectral ladder runs at base 2 while full dyadic
    systems keep delta <= 1/24; only partition-at-scale structure is needed
    there, not nesting."""

    def __init__(self, grid, scale, metric="euclidean"):
        self.grid = grid
        self.scale = float(scale)
        self.metric = metric
        pts = _metric_points(grid, metric)
        self.points = pts
        if pts.shape[1] == 1:
            vals = np.unique(pts[:, 0])
            centers = _net_1d(vals, [], self.scale).reshape(-1, 1)
        else:
            idx = _net_fps(pts, [], self.scale)
            centers = pts[np.array(idx)]
        self.centers = centers
        if centers.shape[1] == 1:
            c = centers[:, 0]
            pos = np.searchsorted(c, pts[:, 0])
            lo = np.clip(pos - 1, 0, len(c) - 1)
            hi = np.clip(pos, 0, len(c) - 1)
            self.assignment = np.where(
                np.abs(pts[:, 0] - c[lo]) <= np.abs(c[hi] - pts[:, 0]),
                lo, hi)
        else:
            from scipy.spatial import cKDTree
            _, self.assignment = cKDTree(centers).query(pts)
        self.weights = grid.weights.ravel()
        self.cube_mass = np.bincount(self.assignment, weights=self.weights,
                                     minlength=centers.shape[0])

    def n_cubes(self):
        return self.centers.shape[0]

    def cube_nodes(self, index):
        return np.nonzero(self.assignment == index)[0]
