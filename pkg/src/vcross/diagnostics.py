"""Growth-law measurements: material lines, rate fits, envelopes, field bounds.

Everything here is a pure function of series, polylines or fields.  Envelope
constants are always fitted, never assumed; the acceptance suite asserts the
stability of fitted constants under refinement instead of absolute values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

from .model import ZERO_PERTURBATION
from .series import DiagnosticSeries, RateFit, linear_fit
from .solver import hessian_sup_of_inverse_laplacian

TWO_PI = 2.0 * np.pi


# --- velocity sources for polyline advection --------------------------------


class ModelFlow:
    """Velocity source backed by a cross-field variant plus perturbation."""

    def __init__(self, variant, perturbation=ZERO_PERTURBATION):
        self.variant = variant
        self.perturbation = perturbation

    def __call__(self, t, pts):
        x, y = pts[:, 0], pts[:, 1]
        u, v = self.variant.velocity(x, y)
        if not self.perturbation.is_zero:
            n1, n2 = self.perturbation.eval(x, y, t)
            u = u + n1
            v = v + n2
        return np.column_stack([u, v])


class SnapshotFlow:
    """Time-indexed solver velocity snapshots, bilinear in space, linear in t.

    ``snapshots`` is a list of (t, u_values, v_values) on one grid; positions
    wrap periodically.
    """

    def __init__(self, grid, snapshots):
        if not snapshots:
            raise ValueError("need at least one velocity snapshot")
        self.grid = grid
        self.times = np.asarray([s[0] for s in snapshots])
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("snapshot times must be strictly increasing")
        self.us = [s[1] for s in snapshots]
        self.vs = [s[2] for s in snapshots]

    def _interp_space(self, arr, pts):
        n = self.grid.n
        h = self.grid.spacing
        gx = pts[:, 0] / h
        gy = pts[:, 1] / h
        i0 = np.floor(gx).astype(int)
        j0 = np.floor(gy).astype(int)
        fx = gx - i0
        fy = gy - j0
        i0 %= n
        j0 %= n
        i1 = (i0 + 1) % n
        j1 = (j0 + 1) % n
        return (
            arr[i0, j0] * (1 - fx) * (1 - fy)
            + arr[i1, j0] * fx * (1 - fy)
            + arr[i0, j1] * (1 - fx) * fy
            + arr[i1, j1] * fx * fy
        )

    def __call__(self, t, pts):
        times = self.times
        if t <= times[0]:
            k0 = k1 = 0
            w = 0.0
        elif t >= times[-1]:
            k0 = k1 = len(times) - 1
            w = 0.0
        else:
            k1 = int(np.searchsorted(times, t))
            k0 = k1 - 1
            w = (t - times[k0]) / (times[k1] - times[k0])
        u = (1 - w) * self._interp_space(self.us[k0], pts)
        v = (1 - w) * self._interp_space(self.vs[k0], pts)
        if w > 0.0:
            u += w * self._interp_space(self.us[k1], pts)
            v += w * self._interp_space(self.vs[k1], pts)
        return np.column_stack([u, v])


def _as_flow(velocity_source):
    if callable(velocity_source):
        return velocity_source
    raise TypeError(
        "velocity source must be callable (ModelFlow, SnapshotFlow, or (t, pts) -> vel)"
    )


@dataclass
class AdvectionResult:
    points: np.ndarray
    exit_times: np.ndarray = None  # per-vertex first exit from the region

    def __iter__(self):
        return iter(self.points)


def advect_polyline(
    velocity_source, polyline, T, dt=1e-3, region=None, refine_threshold=None,
    max_refine_rounds=10,
):
    """Advect every vertex by RK4 under the given velocity source.

    Vertex count is preserved unless ``refine_threshold`` is set, in which
    case source vertices are inserted (parametric midpoints) until no two
    adjacent images are farther apart than the threshold.  With a region,
    each vertex records its first exit time.
    """
    flow = _as_flow(velocity_source)
    pts = np.asarray(polyline, dtype=float).copy()
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("polyline must be an (N, 2) array")

    def advect(points):
        p = points.copy()
        exit_times = np.full(p.shape[0], np.nan)
        n_steps = max(1, int(math.ceil(T / dt - 1e-12)))
        t = 0.0
        for _ in range(n_steps):
            h = min(dt, T - t)
            if h <= 0.0:
                break
            k1 = flow(t, p)
            k2 = flow(t + 0.5 * h, p + 0.5 * h * k1)
            k3 = flow(t + 0.5 * h, p + 0.5 * h * k2)
            k4 = flow(t + h, p + h * k3)
            p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
            if region is not None:
                outside = ~np.fromiter(
                    (region.contains(px, py) for px, py in p), bool, p.shape[0]
                )
                fresh = outside & np.isnan(exit_times)
                exit_times[fresh] = t
        return p, exit_times

    image, exits = advect(pts)
    if refine_threshold is not None:
        for _ in range(max_refine_rounds):
            gaps = np.linalg.norm(np.diff(image, axis=0), axis=1)
            bad = np.nonzero(gaps > refine_threshold)[0]
            if bad.size == 0:
                break
            mids = 0.5 * (pts[bad] + pts[bad + 1])
            pts = np.insert(pts, bad + 1, mids, axis=0)
            image, exits = advect(pts)
    return AdvectionResult(image, exits if region is not None else None)


# --- polyline geometry -------------------------------------------------------


def polyline_length(pts):
    return float(np.sum(np.linalg.norm(np.diff(np.asarray(pts, float), axis=0), axis=1)))


def polygon_area(pts):
    """Shoelace area (absolute) of a closed polygon given without repeat vertex."""
    p = np.asarray(pts, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _point_segment_distance(points, a, b):
    """Distances from many points to one segment [a, b]."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    s = np.clip(((points - a) @ ab) / denom, 0.0, 1.0)
    proj = a[None, :] + s[:, None] * ab[None, :]
    return np.linalg.norm(points - proj, axis=1)


def polyline_min_distance(poly_a, poly_b, closed_b=False):
    """Exact minimum vertex-to-segment distance between two polylines."""
    pa = np.asarray(poly_a, dtype=float)
    pb = np.asarray(poly_b, dtype=float)
    if pa.shape[0] < 1 or pb.shape[0] < 2:
        raise ValueError("degenerate polylines")
    segs_b = list(zip(pb[:-1], pb[1:]))
    if closed_b:
        segs_b.append((pb[-1], pb[0]))
    best = math.inf
    for a, b in segs_b:
        best = min(best, float(np.min(_point_segment_distance(pa, a, b))))
    segs_a = list(zip(pa[:-1], pa[1:])) if pa.shape[0] > 1 else []
    for a, b in segs_a:
        best = min(best, float(np.min(_point_segment_distance(pb, a, b))))
    return best


@dataclass(frozen=True)
class StretchRecord:
    length: float
    thickness: float

    @property
    def area_product(self):
        return self.length * self.thickness


def stretch_and_thickness(segment_image, circle_image):
    """Arclength of the stretched segment and its distance to the circle image.

    Under an area-preserving flow length * thickness is bounded by the initial
    disc area, which is how stretching forces thinning.
    """
    L = polyline_length(segment_image)
    if L == 0.0:
        raise ValueError("degenerate segment image")
    d = polyline_min_distance(segment_image, circle_image, closed_b=True)
    return StretchRecord(L, d)


# --- rate fits and envelopes -------------------------------------------------


def fit_double_exponential(series, window=None, kind=None):
    """Fit the doubly-logarithmic rate of a decaying or growing series.

    Decay fits require all values in (0, 1) and regress ln ln(1/y) on t;
    growth fits require values > 1 and regress ln ln(g).  The slope estimates
    the inner exponential rate (1.0 for pure y = beta**exp(t) dynamics).
    """
    if window is not None:
        series = series.window(*window)
    if len(series) < 5:
        raise ValueError("need at least 5 samples in the fit window")
    vals = series.values
    if kind is None:
        kind = "decay" if np.all(vals < 1.0) else "growth"
    if kind == "decay":
        bad = np.nonzero((vals <= 0.0) | (vals >= 1.0))[0]
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                f"decay fit needs values in (0, 1); sample {i} at t="
                f"{series.t[i]:.6g} is {vals[i]:.6g}"
            )
        z = np.log(-np.log(vals))
    elif kind == "growth":
        bad = np.nonzero(vals <= 1.0)[0]
        if bad.size:
            i = int(bad[0])
            raise ValueError(
                f"growth fit needs values > 1; sample {i} at t="
                f"{series.t[i]:.6g} is {vals[i]:.6g}"
            )
        z = np.log(np.log(vals))
    else:
        raise ValueError(f"unknown fit kind {kind!r}")
    return linear_fit(series.t, z)


@dataclass(frozen=True)
class EnvelopeFit:
    kind: str
    fitted_C: float
    holds: bool = True


def _envelope_log(kind, C, t, base):
    """log of the envelope value at time t for the given constant."""
    if kind == "lipschitz":
        g0 = base["grad0"]
        return C * (1.0 + max(0.0, math.log(max(g0, 1e-300)))) * np.exp(C * t)
    if kind == "h2":
        j0 = base["h2_0"]
        sup = base["theta_sup"]
        inner = (1.0 + 2.0 * max(0.0, math.log(max(j0, 1e-300)))) * np.exp(
            C * sup * t
        ) - 1.0
        return 0.5 * inner
    if kind == "exponential":
        g0 = base["grad0"]
        sup = base["theta_sup"]
        return math.log(max(g0, 1e-300)) + C * sup * t
    raise ValueError(f"unknown envelope kind {kind!r}")


def fit_growth_envelope(series, kind, base_norms, tol=1e-9):
    """Smallest constant C whose envelope dominates every sample.

    The envelope families are monotone in C, so the fit is a bisection on the
    predicate "envelope >= sample everywhere"; ``holds`` is true by
    construction and the fitted constant is the diagnostic.
    """
    if np.any(series.values <= 0.0):
        raise ValueError("envelope fits need positive series")
    log_vals = np.log(series.values)
    t = series.t

    def dominates(C):
        return bool(np.all(_envelope_log(kind, C, t, base_norms) >= log_vals - 1e-12))

    if dominates(0.0):
        return EnvelopeFit(kind, 0.0)
    hi = 1.0
    while not dominates(hi):
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("no envelope constant below 1e6 dominates the series")
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        midC = 0.5 * (lo + hi)
        if dominates(midC):
            hi = midC
        else:
            lo = midC
    return EnvelopeFit(kind, hi)


# --- field bound probes -------------------------------------------------------


@dataclass(frozen=True)
class PerturbationBoundsReport:
    radii: np.ndarray
    sup_ratio: np.ndarray  # sup_{|z| = r} |F1| / r per radius
    hessian_sup: float
    origin_value: float
    field_max: float


def perturbation_field_bounds(p, x_min, radii, arm_width=None, n_angles=720):
    """Induced velocity bounds for a cross-supported vorticity anomaly.

    Computes F1, the gradient of the inverse Laplacian of p, spectrally;
    reports sup |F1| / r on circles around the stagnation point, the Hessian
    sup, and |F1(0)| (forced to zero by even symmetry).  If ``arm_width`` is
    given the support of p must stay within that distance of the arms.
    """
    from .initial_data import cross_arm_distance

    p.require_zero_mean(what="anomaly field")
    g = p.grid
    if arm_width is not None:
        dist = cross_arm_distance(g)
        live = np.abs(p.values) > 1e-12 * max(1.0, p.linf_norm())
        leak = dist[live].max() if live.any() else 0.0
        if leak > arm_width + g.spacing:
            raise ValueError(
                f"anomaly support leaks {leak:.4g} from the arms, width is {arm_width:.4g}"
            )
    psi_hat = -p.spectrum * g.inv_k2
    n = g.n
    f1x = _fft.irfft2(1j * g.kx * psi_hat, s=(n, n))
    f1y = _fft.irfft2(1j * g.ky * psi_hat, s=(n, n))
    mag = np.hypot(f1x, f1y)
    field_max = float(np.max(mag))
    origin_value = float(mag[0, 0])

    def interp(arr, px, py):
        gx = px / g.spacing
        gy = py / g.spacing
        i0 = np.floor(gx).astype(int) % n
        j0 = np.floor(gy).astype(int) % n
        fx = gx - np.floor(gx)
        fy = gy - np.floor(gy)
        i1 = (i0 + 1) % n
        j1 = (j0 + 1) % n
        return (
            arr[i0, j0] * (1 - fx) * (1 - fy)
            + arr[i1, j0] * fx * (1 - fy)
            + arr[i0, j1] * (1 - fx) * fy
            + arr[i1, j1] * fx * fy
        )

    radii = np.asarray(radii, dtype=float)
    angles = np.linspace(0.0, TWO_PI, n_angles, endpoint=False)
    sup_ratio = np.empty_like(radii)
    for i, r in enumerate(radii):
        px = (r * np.cos(angles)) % TWO_PI
        py = (r * np.sin(angles)) % TWO_PI
        fx = interp(f1x, px, py)
        fy = interp(f1y, px, py)
        sup_ratio[i] = np.max(np.hypot(fx, fy)) / r
    return PerturbationBoundsReport(
        radii=radii,
        sup_ratio=sup_ratio,
        hessian_sup=hessian_sup_of_inverse_laplacian(p),
        origin_value=origin_value,
        field_max=field_max,
    )


@dataclass(frozen=True)
class HessianScalingResult:
    fit: RateFit
    l2_norms: np.ndarray
    grad_sups: np.ndarray
    hessian_sups: np.ndarray


def bump_hessian_scaling(bump_fields, grads=None):
    """Regress log Hessian sup against log L2 norm across a bump family.

    The family should vary the L2 norm at controlled gradient sup; the slope
    estimates the square-root exponent of the optimized two-scale bound.
    """
    if len(bump_fields) < 2:
        raise ValueError("need at least two bumps to fit a slope")
    from .solver import grad_sup_norm

    omegas, Ms, Hs = [], [], []
    for b in bump_fields:
        omegas.append(b.l2_norm())
        Ms.append(grad_sup_norm(b))
        Hs.append(hessian_sup_of_inverse_laplacian(b))
    omegas = np.asarray(omegas)
    Ms = np.asarray(Ms)
    Hs = np.asarray(Hs)
    fit = linear_fit(np.log(omegas), np.log(Hs))
    return HessianScalingResult(fit, omegas, Ms, Hs)


# --- growth-ratio probe --------------------------------------------------------


@dataclass(frozen=True)
class GrowthRow:
    label: float
    grad0: float
    max_grad: float
    t_at_max: float

    @property
    def ratio(self):
        return self.max_grad / self.grad0


@dataclass
class GrowthProbe:
    rows: list

    def ratios(self):
        return np.asarray([row.ratio for row in self.rows])

    def nondecreasing(self, rel_slack=0.0):
        r = self.ratios()
        return bool(np.all(np.diff(r) >= -rel_slack * r[:-1]))


def growth_ratio_probe(runs):
    """Per-run max-over-time gradient amplification, tabulated by family label.

    ``runs`` is a list of (label, grad_series) pairs; the initial sample of
    each series is the normalization.
    """
    rows = []
    for label, series in runs:
        g0 = float(series.values[0])
        if g0 <= 0.0:
            raise ValueError("initial gradient must be positive")
        i = int(np.argmax(series.values))
        rows.append(
            GrowthRow(float(label), g0, float(series.values[i]), float(series.t[i]))
        )
    return GrowthProbe(rows)


def ratio_series(series):
    """Gradient series normalized by its initial sample."""
    return DiagnosticSeries(
        series.name + "_ratio", series.t, series.values / series.values[0]
    )
