"""Nonuniform finite-difference stencils, adapted 1D meshes, and quadrature helpers.

Everything here works on plain numpy arrays.  Grids are strictly increasing;
derivative formulas use exact nonuniform weights (second order on smooth
grids), and degenerate boundaries (value 0, known slope) get Hermite-enhanced
stencils so that accuracy does not collapse to first order there.
"""

from __future__ import annotations

import numpy as np


class GridError(ValueError):
    """Structural grid problem (non-monotone, too few nodes), as opposed to an
    invariant violation of the data living on the grid."""


def check_grid(x, min_nodes=2):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < min_nodes:
        raise GridError(f"grid needs at least {min_nodes} nodes, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise GridError("grid contains non-finite nodes")
    if np.any(np.diff(x) <= 0):
        k = int(np.argmax(np.diff(x) <= 0))
        raise GridError(f"grid not strictly increasing at index {k}")
    return x


# ---------------------------------------------------------------------------
# derivative stencils
# ---------------------------------------------------------------------------

def interior_weights(x):
    """Three-point first/second derivative weights at nodes 1..n-2.

    Returns (W1, W2), each of shape (3, n-2): weights for u[i-1], u[i], u[i+1].
    """
    x = np.asarray(x, dtype=float)
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    W1 = np.empty((3, x.size - 2))
    W1[0] = -h2 / (h1 * (h1 + h2))
    W1[1] = (h2 - h1) / (h1 * h2)
    W1[2] = h1 / (h2 * (h1 + h2))
    W2 = np.empty_like(W1)
    W2[0] = 2.0 / (h1 * (h1 + h2))
    W2[1] = -2.0 / (h1 * h2)
    W2[2] = 2.0 / (h2 * (h1 + h2))
    return W1, W2


def apply_weights(W, u):
    """Apply 3-point weights (shape (3, n-2)) to u, returning values at 1..n-2."""
    return W[0] * u[:-2] + W[1] * u[1:-1] + W[2] * u[2:]


def onesided_weights(d1, d2):
    """First/second derivative weights at x0 from values at x0, x0+d1, x0+d2."""
    w1 = np.array([-(d1 + d2) / (d1 * d2),
                   d2 / (d1 * (d2 - d1)),
                   -d1 / (d2 * (d2 - d1))])
    w2 = 2.0 * np.array([1.0 / (d1 * d2),
                         -1.0 / (d1 * (d2 - d1)),
                         1.0 / (d2 * (d2 - d1))])
    return w1, w2


def hermite_cubic_coeffs(d1, d2, r1, r2):
    """Coefficients (c2, c3) of p(x) = y0 + s*x + c2 x^2 + c3 x^3 through the
    residuals r_k = u_k - y0 - s*d_k at offsets d1, d2 from the anchor."""
    det = d1 * d1 * d2 * d2 * (d2 - d1)
    c2 = (r1 * d2 ** 3 - r2 * d1 ** 3) / det
    c3 = (r2 * d1 * d1 - r1 * d2 * d2) / det
    return c2, c3


def hermite_boundary(d1, d2, y0, s, u1, u2):
    """Derivatives from a cubic matching (value y0, slope s) at the boundary
    and values u1, u2 at distances d1 < d2.

    Returns (du_at_d1, ddu_at_d1, ddu_at_0).
    """
    r1 = u1 - y0 - s * d1
    r2 = u2 - y0 - s * d2
    c2, c3 = hermite_cubic_coeffs(d1, d2, r1, r2)
    du1 = s + 2.0 * c2 * d1 + 3.0 * c3 * d1 * d1
    ddu1 = 2.0 * c2 + 6.0 * c3 * d1
    ddu0 = 2.0 * c2
    return du1, ddu1, ddu0


def derivatives(x, u, slope_left=None, slope_right=None):
    """First and second derivative arrays on a nonuniform grid.

    Interior nodes use the exact 3-point weights.  Endpoints use one-sided
    3-point stencils unless a known slope is supplied, in which case the
    endpoint keeps the exact slope and the adjacent node is upgraded to the
    Hermite stencil fed by the exact boundary data.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = x.size
    if n < 3:
        raise GridError("need at least 3 nodes for derivatives")
    ux = np.empty(n)
    uxx = np.empty(n)
    W1, W2 = interior_weights(x)
    ux[1:-1] = apply_weights(W1, u)
    uxx[1:-1] = apply_weights(W2, u)

    if slope_left is None:
        w1, w2 = onesided_weights(x[1] - x[0], x[2] - x[0])
        ux[0] = w1 @ u[:3]
        uxx[0] = w2 @ u[:3]
    else:
        d1, d2 = x[1] - x[0], x[2] - x[0]
        du1, ddu1, ddu0 = hermite_boundary(d1, d2, u[0], slope_left, u[1], u[2])
        ux[0] = slope_left
        uxx[0] = ddu0
        ux[1], uxx[1] = du1, ddu1

    if slope_right is None:
        w1, w2 = onesided_weights(x[-2] - x[-1], x[-3] - x[-1])
        ux[-1] = w1 @ u[-1:-4:-1]
        uxx[-1] = w2 @ u[-1:-4:-1]
    else:
        d1, d2 = x[-2] - x[-1], x[-3] - x[-1]
        du1, ddu1, ddu0 = hermite_boundary(d1, d2, u[-1], slope_right, u[-2], u[-3])
        ux[-1] = slope_right
        uxx[-1] = ddu0
        ux[-2], uxx[-2] = du1, ddu1
    return ux, uxx


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_GL5_X = np.array([-0.906179845938664, -0.5384693101056831, 0.0,
                   0.5384693101056831, 0.906179845938664])
_GL5_W = np.array([0.23692688505618908, 0.47862867049936647, 0.5688888888888889,
                   0.47862867049936647, 0.23692688505618908])


def interval_gl5(fn, x):
    """5-point Gauss-Legendre integral of fn over each interval of the grid x."""
    x = np.asarray(x, dtype=float)
    mid = 0.5 * (x[1:] + x[:-1])
    half = 0.5 * (x[1:] - x[:-1])
    pts = mid[:, None] + half[:, None] * _GL5_X[None, :]
    return half * (fn(pts) @ _GL5_W)


def cumulative_gl5(fn, x):
    """Cumulative integral of fn from x[0] along the grid (value 0 at x[0])."""
    out = np.empty(len(x))
    out[0] = 0.0
    np.cumsum(interval_gl5(fn, x), out=out[1:])
    return out


def cumint_inverse_linear(x, u):
    """Cumulative integral of 1/u along x, treating u as piecewise linear.

    Exact on each interval (h * log(u1/u0) / (u1-u0)), which stays accurate
    where u degenerates linearly toward an endpoint.  Requires u > 0 at the
    supplied nodes.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("1/u integrand requires u > 0 at the nodes")
    h = np.diff(x)
    u0, u1 = u[:-1], u[1:]
    du = u1 - u0
    small = np.abs(du) <= 1e-12 * np.maximum(u0, u1)
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = h * np.log(u1 / u0) / du
    seg = np.where(small, 2.0 * h / (u0 + u1), seg)
    out = np.empty(len(x))
    out[0] = 0.0
    np.cumsum(seg, out=out[1:])
    return out


# ---------------------------------------------------------------------------
# adapted meshes
# ---------------------------------------------------------------------------

def equidistributed_nodes(width, n, h_floor, coeff=None, probe=2000):
    """Nodes 0 = d_0 < ... < d_n = width with spacing ~ max(h_floor, sqrt(lam*c(d))).

    c(d) is the local diffusion coefficient (defaults to c(d) = d, the
    degenerate-boundary proxy); lam is solved so the node budget is met.  This
    equidistributes the explicit diffusion limit h^2 / c while the floor keeps
    the first cells from collapsing.
    """
    if n < 1:
        raise GridError("need at least one interval")
    if h_floor <= 0:
        raise ValueError("h_floor must be positive")
    if n * h_floor >= width:
        return np.linspace(0.0, width, n + 1)
    if coeff is None:
        coeff = lambda d: d
    # probe grid resolving both (possibly degenerate) ends
    g = np.geomspace(max(width * 1e-12, h_floor * 1e-3), 0.5 * width, probe // 2)
    d = np.unique(np.concatenate(([0.0, width], g, width - g)))
    c = np.clip(np.asarray(coeff(d), dtype=float), 0.0, None)

    def count(lam):
        h = np.maximum(h_floor, np.sqrt(lam * c))
        # trapezoid of 1/h gives the interval count of the implied mesh
        return np.trapezoid(1.0 / h, d)

    lo, hi = 1e-18 * width, 1e6 * width
    for _ in range(200):
        lam = np.sqrt(lo * hi)
        if count(lam) > n:
            lo = lam
        else:
            hi = lam
        if hi / lo < 1 + 1e-12:
            break
    lam = np.sqrt(lo * hi)
    h = np.maximum(h_floor, np.sqrt(lam * c))
    F = np.concatenate(([0.0], np.cumsum(0.5 * (1.0 / h[1:] + 1.0 / h[:-1]) * np.diff(d))))
    levels = np.linspace(0.0, F[-1], n + 1)
    nodes = np.interp(levels, F, d)
    nodes[0], nodes[-1] = 0.0, width
    # guard against interpolation ties on very steep density profiles
    nodes = np.maximum.accumulate(nodes)
    bad = np.diff(nodes) <= 0
    if np.any(bad):
        nodes = np.unique(nodes)
        nodes = np.interp(np.linspace(0, 1, n + 1), np.linspace(0, 1, nodes.size), nodes)
    return nodes


def stretched_tail(start, end, n, h0, p):
    """n intervals from start to end, first spacing ~ h0, power-p growth.

    Positions follow d(s) = start + L * ((s+eps)^p - eps^p)/((1+eps)^p - eps^p)
    with eps solved so the junction spacing matches h0 (capped at uniform).
    """
    L = end - start
    if n < 1 or L <= 0:
        raise GridError("empty tail")
    if n * h0 >= L or p <= 1.0:
        return np.linspace(start, end, n + 1)

    s = np.arange(n + 1) / n

    def first_spacing(eps):
        g = ((s + eps) ** p - eps ** p) / ((1 + eps) ** p - eps ** p)
        return L * g[1]

    lo, hi = 1e-12, 1e12
    for _ in range(200):
        eps = np.sqrt(lo * hi)
        if first_spacing(eps) < h0:
            lo = eps
        else:
            hi = eps
        if hi / lo < 1 + 1e-12:
            break
    eps = np.sqrt(lo * hi)
    g = ((s + eps) ** p - eps ** p) / ((1 + eps) ** p - eps ** p)
    nodes = start + L * g
    nodes[0], nodes[-1] = start, end
    return nodes


def window_mesh(domain, n, window, h_floor, p_outer, coeff=None, min_fraction=0.25):
    """Composite mesh on [0, domain] clustered toward the degenerate inner end.

    The inner window [0, min(window, domain)] must hold at least min_fraction
    of the nodes.  A single CFL-equidistributed grid is used whenever it
    already satisfies that floor; otherwise the window gets its node quota on
    an equidistributed grid (floor spacing h_floor) and the remainder
    stretches to the outer boundary with growth exponent p_outer,
    spacing-matched at the junction.
    """
    nodes = equidistributed_nodes(domain, n, h_floor, coeff)
    if window >= domain:
        return nodes
    if np.searchsorted(nodes, window) >= min_fraction * n:
        return nodes
    m = max(int(np.ceil(min_fraction * n)), 8)
    m = min(m, n - 4)
    inner = equidistributed_nodes(window, m, h_floor, coeff)
    h_j = inner[-1] - inner[-2]
    outer = stretched_tail(window, domain, n - m, h_j, p_outer)
    return np.concatenate([inner, outer[1:]])
