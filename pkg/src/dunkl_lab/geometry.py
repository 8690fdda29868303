"""Root-system data, the weight w, the measure dw, orbit distance, ball
volumes, quadrature grids and maximal functions.

Everything here is specialized to the product reflection group Z_2^N acting
by coordinate sign flips.  The roots are +/- sqrt(2) e_j with one
multiplicity k_j per axis, so the weight factorizes:

    w(x) = prod_j |sqrt(2) x_j|^{k_j} * |-sqrt(2) x_j|^{k_j}
         = prod_j 2^{k_j} |x_j|^{2 k_j}.

The per-axis factorization is what makes desk-scale quadrature and dense
transform matrices feasible; nothing in this module attempts a general
Weyl group.
"""

import math

import numpy as np
from scipy.special import gammaln, roots_jacobi, roots_legendre


class WindowOverflowError(Exception):
    """A ball (or other region) leaves the quadrature window."""


class RootData:
    """Root system, multiplicities and the derived measure constants.

    Parameters
    ----------
    multiplicities : sequence of nonnegative reals, one per coordinate axis.
    """

    def __init__(self, multiplicities):
        k = np.atleast_1d(np.asarray(multiplicities, dtype=float))
        if k.ndim != 1 or k.size == 0:
            raise ValueError("multiplicities must be a nonempty 1-d sequence")
        if np.any(k < 0) or not np.all(np.isfinite(k)):
            raise ValueError("multiplicities must be finite and nonnegative")
        self.multiplicities = k
        self.dimension = k.size
        # 2N normalized roots +/- sqrt(2) e_j, each carrying k_j.
        eye = np.eye(self.dimension)
        self.roots = np.sqrt(2.0) * np.concatenate([eye, -eye], axis=0)
        self.root_multiplicities = np.concatenate([k, k])
        # homogeneous dimension: N + sum over roots of k(nu) = N + 2 sum k_j
        self.homogeneous_dimension = self.dimension + 2.0 * float(np.sum(k))
        # c_k = int exp(-|x|^2/2) dw(x); per axis
        # 2^k * int |t|^{2k} e^{-t^2/2} dt = 2^k * 2^{k+1/2} Gamma(k+1/2).
        logck = float(
            np.sum((2.0 * k + 0.5) * math.log(2.0) + gammaln(k + 0.5))
        )
        self.ck_constant = math.exp(logck)
        self.group_order = 2 ** self.dimension
        self._ball_cache = {}

    def __repr__(self):
        return "RootData(k=%s)" % (list(self.multiplicities),)


def weight_at(root_data, x):
    """The weight w(x) = prod_{nu in R} |<x, nu>|^{k(nu)}.

    Accepts a single point or an array of shape (..., N); vanishes exactly
    on the coordinate hyperplanes with positive multiplicity.
    """
    x = np.asarray(x, dtype=float)
    if x.shape == () and root_data.dimension == 1:
        x = x.reshape(1)
    k = root_data.multiplicities
    # |<x, +/-sqrt2 e_j>|^{k_j} both signs -> (sqrt2 |x_j|)^{2 k_j}
    base = np.sqrt(2.0) * np.abs(x)
    with np.errstate(divide="ignore"):
        out = np.prod(base ** (2.0 * k), axis=-1)
    return out


def orbit_distance(root_data, x, y):
    """d(x, y) = min_{sigma in G} ||x - sigma(y)|| for G = Z_2^N.

    The minimum over independent per-axis sign flips is attained
    coordinatewise, so d(x,y) = || |x| - |y| ||.  Only the value is part of
    the contract; no minimizer is exposed.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = np.abs(x) - np.abs(y)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _axis_rule(k, x_max, n, panel_size=8):
    """Per-axis quadrature nodes/weights on [-x_max, x_max] for the measure
    2^k |t|^{2k} dt.

    Symmetric panel rule: the half-axis [0, x_max] is split into uniform
    panels; the panel touching the origin uses Gauss-Jacobi nodes (exact for
    the |t|^{2k} singularity), the rest use Gauss-Legendre with the smooth
    weight evaluated at the nodes.  Mirrored to the negative half-axis.
    """
    if n % (2 * panel_size) != 0:
        raise ValueError(
            "points_per_axis must be a multiple of %d" % (2 * panel_size,)
        )
    half = n // 2
    npanels = half // panel_size
    edges = np.linspace(0.0, x_max, npanels + 1)

    nodes = []
    weights = []
    # origin panel: int_0^a f(t) 2^k t^{2k} dt via Gauss-Jacobi(0, 2k)
    a = edges[1]
    xj, wj = roots_jacobi(panel_size, 0.0, 2.0 * k)
    t = a * (xj + 1.0) / 2.0
    wq = (2.0 ** k) * (a / 2.0) ** (2.0 * k + 1.0) * wj
    nodes.append(t)
    weights.append(wq)
    # remaining panels: Gauss-Legendre, weight factored in pointwise
    if npanels > 1:
        xl, wl = roots_legendre(panel_size)
        for i in range(1, npanels):
            lo, hi = edges[i], edges[i + 1]
            t = 0.5 * (hi - lo) * xl + 0.5 * (hi + lo)
            wq = 0.5 * (hi - lo) * wl * (2.0 ** k) * t ** (2.0 * k)
            nodes.append(t)
            weights.append(wq)
    t_pos = np.concatenate(nodes)
    w_pos = np.concatenate(weights)
    order = np.argsort(t_pos)
    t_pos, w_pos = t_pos[order], w_pos[order]
    t_full = np.concatenate([-t_pos[::-1], t_pos])
    w_full = np.concatenate([w_pos[::-1], w_pos])
    return t_full, w_full


class WeightedGrid:
    """Truncated tensor quadrature grid carrying dw-weights.

    axes[j] holds the n per-axis nodes, axis_weights[j] the matching
    per-axis quadrature weights (they already include the axis factor
    2^{k_j}|t|^{2k_j}); the full dw weight of a tensor node is the product.
    """

    def __init__(self, root_data, window_radius, points_per_axis,
                 panel_size=8, freq_radius=None):
        self.root_data = root_data
        self.window_radius = float(window_radius)
        self.points_per_axis = int(points_per_axis)
        self.panel_size = panel_size
        # frequency window for this grid's transform plan (defaults to the
        # spatial window; audits that need extra spectral headroom widen it)
        self.freq_radius = (float(freq_radius) if freq_radius is not None
                            else None)
        axes = []
        axis_weights = []
        for k in root_data.multiplicities:
            t, w = _axis_rule(float(k), self.window_radius,
                              self.points_per_axis, panel_size)
            axes.append(t)
            axis_weights.append(w)
        self.axes = axes
        self.axis_weights = axis_weights
        n = self.points_per_axis
        N = root_data.dimension
        self.shape = (n,) * N
        # full tensor weights (outer product); fine at desk scale
        wt = axis_weights[0]
        for j in range(1, N):
            wt = np.multiply.outer(wt, axis_weights[j])
        self.weights = wt
        self._norm_grids = None
        self._plan = None

    @property
    def dimension(self):
        return self.root_data.dimension

    def nodes(self):
        """All tensor nodes, shape (*self.shape, N)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def flat_nodes(self):
        return self.nodes().reshape(-1, self.dimension)

    def node_norms(self):
        """||x|| at every tensor node, shape self.shape."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.sqrt(sum(m * m for m in mesh))

    def max_spacing(self):
        return max(float(np.max(np.diff(ax))) for ax in self.axes)

    def integrate(self, values):
        return np.sum(values * self.weights)

    def __repr__(self):
        return "WeightedGrid(N=%d, X=%g, n=%d)" % (
            self.dimension, self.window_radius, self.points_per_axis)


class GridFunction:
    """Complex-valued samples on a WeightedGrid."""

    def __init__(self, grid, values):
        values = np.asarray(values)
        if values.shape != grid.shape:
            raise ValueError("values shape %s does not match grid shape %s"
                             % (values.shape, grid.shape))
        if not np.all(np.isfinite(values)):
            raise ValueError("GridFunction values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.nodes())))

    def copy(self):
        return GridFunction(self.grid, self.values.copy())

    def lp_norm(self, p):
        """L^p(dw) norm restricted to the window."""
        if p == np.inf:
            return float(np.max(np.abs(self.values)))
        return float(np.sum(np.abs(self.values) ** p
                            * self.grid.weights) ** (1.0 / p))

    def l2_inner(self, other):
        return complex(np.sum(self.values * np.conj(other.values)
                              * self.grid.weights))

    def integral(self):
        return complex(np.sum(self.values * self.grid.weights))

    def __add__(self, other):
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__


def _axis_weight_integral(k, a, b):
    """Exact int_a^b 2^k |t|^{2k} dt (signed endpoints allowed)."""
    p = 2.0 * k + 1.0

    def anti(t):
        return (2.0 ** k) * np.sign(t) * np.abs(t) ** p / p

    return anti(b) - anti(a)


_THETA_NODES, _THETA_WEIGHTS = roots_legendre(64)


def _ball_volume_rec(mult, center, r):
    """Semi-analytic dw-volume of the Euclidean ball B(center, r) for the
    product weight with per-axis multiplicities ``mult``.

    Innermost axis integrated in closed form; outer axes by Gauss-Legendre
    in the angle variable x = c + r sin(theta) (which removes the square-root
    endpoint singularity of the chord length).
    """
    if len(mult) == 1:
        return _axis_weight_integral(mult[0], center[0] - r, center[0] + r)
    theta = 0.5 * np.pi * _THETA_NODES
    u = r * np.sin(theta)
    chord = r * np.cos(theta)
    fac = (2.0 ** mult[0]) * np.abs(center[0] + u) ** (2.0 * mult[0])
    inner = np.array([
        _ball_volume_rec(mult[1:], center[1:], c) if c > 0 else 0.0
        for c in chord
    ])
    return float(np.sum(_THETA_WEIGHTS * 0.5 * np.pi * chord
                        * fac * inner))


def ball_volume(root_data, x, r, mode="quadrature", window_radius=None):
    """dw-volume of the Euclidean ball B(x, r).

    mode="comparable" returns the paper-style comparable expression
    r^N prod_{nu}(|<x,nu>| + r)^{k(nu)}; mode="quadrature" integrates dw
    over the ball (semi-analytically: exact per-axis moments composed with
    Gauss-Legendre angular quadrature), memoized per RootData.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if mode == "comparable":
        dots = np.abs(root_data.roots @ x)
        return float(r ** root_data.dimension
                     * np.prod((dots + r) ** root_data.root_multiplicities))
    if mode != "quadrature":
        raise ValueError("mode must be 'comparable' or 'quadrature'")
    if window_radius is not None:
        if np.any(np.abs(x) + r > window_radius + 1e-12):
            raise WindowOverflowError(
                "ball B(%s, %g) exits the window [-%g, %g]^N"
                % (x, r, window_radius, window_radius))
    key = (tuple(np.round(x, 12)), round(float(r), 12))
    cached = root_data._ball_cache.get(key)
    if cached is not None:
        return cached
    val = _ball_volume_rec(list(root_data.multiplicities), list(x), float(r))
    root_data._ball_cache[key] = val
    return val


def p_gamma_kernel(root_data, grid, x1, x, r, gamma):
    """P_gamma(x1, x; r) = w(B(x1, r + ||x1-x||))^{-1} (r/(r+||x1-x||))^gamma

    with quadrature-mode ball volumes.  ``grid`` supplies the window for the
    overflow check.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dist = float(np.linalg.norm(x1 - x))
    vol = ball_volume(root_data, x1, r + dist, mode="quadrature",
                      window_radius=grid.window_radius if grid else None)
    return (r / (r + dist)) ** gamma / vol


def _ball_members(flat_nodes, center, radius, root_data, metric):
    if metric == "euclidean":
        d = np.linalg.norm(flat_nodes - center, axis=-1)
    elif metric == "orbit":
        d = orbit_distance(root_data, flat_nodes, center)
    else:
        raise ValueError("metric must be 'euclidean' or 'orbit'")
    return d <= radius


def maximal_function(f, r=1.0, metric="euclidean", radii=(0.25, 0.5, 1.0)):
    """Hardy-Littlewood maximal function over a finite set of radii.

    At each node: sup over the supplied radii of
    (w(B)^{-1} int_B |f|^r dw)^{1/r}, balls in the chosen metric, with the
    ball mass computed as the quadrature sum over the same node set (so the
    ratio is internally consistent).
    """
    if r <= 0:
        raise ValueError("averaging exponent r must be positive")
    if len(radii) == 0:
        raise ValueError("radii must be nonempty")
    grid = f.grid
    flat_nodes = grid.flat_nodes()
    mod = (np.abs(f.values) ** r).ravel()
    wts = grid.weights.ravel()
    nn = flat_nodes.shape[0]
    out = np.zeros(nn)
    if grid.dimension == 1 and metric == "euclidean":
        ax = grid.axes[0]
        csum_w = np.concatenate([[0.0], np.cumsum(wts)])
        csum_fw = np.concatenate([[0.0], np.cumsum(mod * wts)])
        for rho in radii:
            lo = np.searchsorted(ax, ax - rho, side="left")
            hi = np.searchsorted(ax, ax + rho, side="right")
            mass = csum_w[hi] - csum_w[lo]
            num = csum_fw[hi] - csum_fw[lo]
            with np.errstate(invalid="ignore", divide="ignore"):
                avg = np.where(mass > 0, num / np.maximum(mass, 1e-300), 0.0)
            out = np.maximum(out, avg)
    else:
        if metric == "euclidean":
            dmat = np.linalg.norm(flat_nodes[:, None, :]
                                  - flat_nodes[None, :, :], axis=-1)
        else:
            dmat = np.abs(flat_nodes)[:, None, :] - np.abs(flat_nodes)[None, :, :]
            dmat = np.linalg.norm(dmat, axis=-1)
        for rho in radii:
            inside = dmat <= rho
            mass = inside @ wts
            num = inside @ (mod * wts)
            with np.errstate(invalid="ignore", divide="ignore"):
                avg = np.where(mass > 0, num / np.maximum(mass, 1e-300), 0.0)
            out = np.maximum(out, avg)
    return GridFunction(grid, (out ** (1.0 / r)).reshape(grid.shape))
