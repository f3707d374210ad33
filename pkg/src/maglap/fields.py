"""Magnetic fields, scalar potentials with prescribed Laplacian, and fluxes.

A scalar potential Psi with  Delta Psi = B  on a disc covering the domain
yields the divergence-free vector potential  A = (-d2 Psi, d1 Psi)  with
rot A = B.  The oscillation of Psi over the domain controls the exponential
factor in the lower bounds, so this module also optimizes Psi over small
parametric families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import Domain, _golden_min, _pt, _pts


class FieldError(ValueError):
    """Invalid magnetic field description."""


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested accuracy."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


# ---------------------------------------------------------------------------
# magnetic fields


@dataclass(frozen=True)
class ConstantField:
    strength: float

    def __post_init__(self):
        object.__setattr__(self, "strength", float(self.strength))


class RadialField:
    """Field depending on |x| only, linearly interpolated between samples.

    Outside the sampled range the profile is extended by its end values.
    """

    def __init__(self, radii, values):
        r = np.asarray(radii, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or len(r) < 2:
            raise FieldError("radial profile needs matching 1d radius/value samples")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise FieldError("radii must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise FieldError("field samples must be finite")
        self.radii = r
        self.values = v
        self.radii.flags.writeable = False
        self.values.flags.writeable = False

    def __repr__(self):
        return f"RadialField({len(self.radii)} samples, r<= {self.radii[-1]})"


class GridField:
    """Field sampled on a raster, bilinearly interpolated, clamped outside."""

    def __init__(self, values, cell_size, origin=(0.0, 0.0)):
        v = np.asarray(values, dtype=float)
        if v.ndim != 2 or not np.all(np.isfinite(v)):
            raise FieldError("grid field needs a finite 2d sample array")
        self.values = v
        self.values.flags.writeable = False
        self.cell_size = float(cell_size)
        self.origin = (float(origin[0]), float(origin[1]))

    def __repr__(self):
        return f"GridField({self.values.shape}, cell={self.cell_size})"


MagneticField = ConstantField | RadialField | GridField


def field_value(field: MagneticField, points) -> np.ndarray:
    p = _pts(points)
    if isinstance(field, ConstantField):
        return np.full(len(p), field.strength)
    if isinstance(field, RadialField):
        r = np.hypot(p[:, 0], p[:, 1])
        return np.interp(r, field.radii, field.values)
    if isinstance(field, GridField):
        ny, nx = field.values.shape
        cs = field.cell_size
        fx = np.clip((p[:, 0] - field.origin[0]) / cs - 0.5, 0.0, nx - 1.0)
        fy = np.clip((p[:, 1] - field.origin[1]) / cs - 0.5, 0.0, ny - 1.0)
        ix = np.clip(fx.astype(int), 0, nx - 2)
        iy = np.clip(fy.astype(int), 0, ny - 2)
        tx = fx - ix
        ty = fy - iy
        v = field.values
        return (
            v[iy, ix] * (1 - tx) * (1 - ty)
            + v[iy, ix + 1] * tx * (1 - ty)
            + v[iy + 1, ix] * (1 - tx) * ty
            + v[iy + 1, ix + 1] * tx * ty
        )
    raise FieldError(f"unsupported field {field!r}")


def field_range(field: MagneticField, domain: Domain, n: int = 96) -> tuple[float, float]:
    """Sampled (inf, sup) of B over the domain; exact for constant fields."""
    if isinstance(field, ConstantField):
        return field.strength, field.strength
    xmin, ymin, xmax, ymax = geometry.bounding_box(domain)
    xs = np.linspace(xmin, xmax, n)
    ys = np.linspace(ymin, ymax, n)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pts = pts[geometry.contains(domain, pts)]
    if len(pts) == 0:
        raise FieldError("no sample points inside domain")
    vals = field_value(field, pts)
    return float(vals.min()), float(vals.max())


def load_radial_csv(path) -> RadialField:
    """Radial profile from a CSV with columns (radius, B)."""
    data = _load_csv(path, 2)
    order = np.argsort(data[:, 0])
    return RadialField(data[order, 0], data[order, 1])


def load_grid_csv(path) -> GridField:
    """Raster field from a CSV with columns (x, y, B) on a complete lattice."""
    data = _load_csv(path, 3)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if len(xs) < 2 or len(ys) < 2 or len(xs) * len(ys) != len(data):
        raise FieldError("grid CSV must cover a complete lattice")
    dx = np.diff(xs)
    dy = np.diff(ys)
    if not (np.allclose(dx, dx[0], rtol=1e-6) and np.allclose(dy, dy[0], rtol=1e-6)
            and np.isclose(dx[0], dy[0], rtol=1e-6)):
        raise FieldError("grid CSV must use uniform square cells")
    cs = float(dx[0])
    values = np.full((len(ys), len(xs)), np.nan)
    ix = np.searchsorted(xs, data[:, 0])
    iy = np.searchsorted(ys, data[:, 1])
    values[iy, ix] = data[:, 2]
    if np.any(np.isnan(values)):
        raise FieldError("grid CSV has holes")
    return GridField(values, cs, origin=(xs[0] - 0.5 * cs, ys[0] - 0.5 * cs))


def _load_csv(path, ncols):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in line.replace(",", " ").split() if p]
            try:
                rows.append([float(p) for p in parts[:ncols]])
            except ValueError:
                continue  # header row
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] < ncols or len(data) < 2:
        raise FieldError(f"CSV must provide at least {ncols} numeric columns")
    return data


# ---------------------------------------------------------------------------
# flux


def flux(field: MagneticField, y, r: float) -> float:
    """Integral of B over the disc around y, divided by 2*pi."""
    if r < 0:
        raise FieldError("flux radius must be nonnegative")
    return flux_profile(field, y, np.array([r]))[0]


def flux_profile(field: MagneticField, y, radii) -> np.ndarray:
    """Normalized flux through concentric discs, vectorized over radii."""
    y = _pt(y)
    radii = np.asarray(radii, dtype=float)
    if isinstance(field, ConstantField):
        return 0.5 * field.strength * radii**2
    if isinstance(field, RadialField) and math.hypot(*y) < 1e-14:
        rmax = float(radii.max(initial=0.0))
        s = np.linspace(0.0, max(rmax, 1e-30), 4097)
        integrand = field_value(field, np.column_stack([s, np.zeros_like(s)])) * s
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(s))])
        return np.interp(radii, s, cum)
    # generic polar quadrature about y
    rmax = float(radii.max(initial=0.0))
    if rmax == 0.0:
        return np.zeros_like(radii)
    n_r, n_a = 2048, 256
    s = (np.arange(n_r) + 0.5) * (rmax / n_r)
    ang = (np.arange(n_a) + 0.5) * (2 * math.pi / n_a)
    ca, sa = np.cos(ang), np.sin(ang)
    ring_mean = np.empty(n_r)
    for i, ri in enumerate(s):
        pts = np.column_stack([y[0] + ri * ca, y[1] + ri * sa])
        ring_mean[i] = field_value(field, pts).mean()
    integrand = ring_mean * s
    grid = np.concatenate([[0.0], s])
    cum = np.concatenate([[0.0], np.cumsum(integrand) * (rmax / n_r)])
    return np.interp(radii, grid, cum)


# ---------------------------------------------------------------------------
# scalar potentials with Delta Psi = B


@dataclass(frozen=True)
class QuadraticRadialPotential:
    """Psi(x) = (B0/4) |x - center|^2 for a constant field B0."""

    strength: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "strength", float(self.strength))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def psi(self, points):
        p = _pts(points)
        return 0.25 * self.strength * ((p[:, 0] - self.center[0]) ** 2 + (p[:, 1] - self.center[1]) ** 2)

    def a_field(self, points):
        p = _pts(points)
        return 0.5 * self.strength * np.column_stack([
            -(p[:, 1] - self.center[1]), p[:, 0] - self.center[0],
        ])


@dataclass(frozen=True)
class QuadraticDirectionalPotential:
    """Psi(x) = (B0/2) (x . u - offset)^2 with u = (sin angle, cos angle)."""

    strength: float
    offset: float = 0.0
    angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "strength", float(self.strength))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "angle", float(self.angle))

    @property
    def axis(self):
        return np.array([math.sin(self.angle), math.cos(self.angle)])

    def psi(self, points):
        t = _pts(points) @ self.axis - self.offset
        return 0.5 * self.strength * t**2

    def a_field(self, points):
        t = _pts(points) @ self.axis - self.offset
        u = self.axis
        return self.strength * np.column_stack([-t * u[1], t * u[0]])


class NewtonianPotential:
    """Logarithmic-kernel potential of a field supported on a centered disc.

    For constant and radial fields the potential and its gradient reduce to
    one-dimensional integrals and are evaluated that way; raster fields fall
    back to two-dimensional quadrature per evaluation point.
    """

    def __init__(self, field: MagneticField, support_radius: float):
        if not support_radius > 0:
            raise FieldError("support radius must be positive")
        self.field = field
        self.support_radius = float(support_radius)
        self._constant = isinstance(field, ConstantField)
        self._radial = isinstance(field, RadialField)
        if self._radial:
            r = self.support_radius
            s = np.linspace(0.0, r, 32769)
            b = field_value(field, np.column_stack([s, np.zeros_like(s)]))
            ds = s[1] - s[0]
            # F(r) = int_0^r B(s) s ds and G(r) = int_0^r B(s) s log(s) ds
            f_int = np.concatenate([[0.0], np.cumsum(0.5 * (b[1:] * s[1:] + b[:-1] * s[:-1]) * ds)])
            with np.errstate(divide="ignore", invalid="ignore"):
                logs = np.where(s > 0, np.log(np.maximum(s, 1e-300)), 0.0)
            g = b * s * logs
            g[0] = 0.0
            g_int = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * ds)])
            self._s = s
            self._f = f_int
            self._g = g_int

    def psi(self, points):
        p = _pts(points)
        r = self.support_radius
        rho = np.hypot(p[:, 0], p[:, 1])
        if self._constant:
            B0 = self.field.strength
            safe = np.maximum(rho, 1e-300)
            inside = B0 * (0.5 * r**2 * math.log(r) - 0.25 * (r**2 - rho**2))
            outside = B0 * 0.5 * r**2 * np.log(safe)
            return np.where(rho <= r, inside, outside)
        if self._radial:
            rc = np.minimum(rho, r)
            f_rc = np.interp(rc, self._s, self._f)
            g_tail = self._g[-1] - np.interp(rc, self._s, self._g)
            safe = np.where(rho > 1e-300, rho, 1.0)
            return np.where(rho > 0, np.log(safe) * f_rc, 0.0) + g_tail
        return np.array([
            newtonian_potential(self.field, self.support_radius, q) for q in p
        ])

    def a_field(self, points):
        p = _pts(points)
        rho = np.hypot(p[:, 0], p[:, 1])
        if self._constant:
            B0 = self.field.strength
            f = 0.5 * B0 * np.minimum(rho, self.support_radius) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                coef = np.where(rho > 0, f / np.maximum(rho**2, 1e-300), 0.5 * B0)
            return coef[:, None] * np.column_stack([-p[:, 1], p[:, 0]])
        if self._radial:
            f = np.interp(np.minimum(rho, self.support_radius), self._s, self._f)
            with np.errstate(divide="ignore", invalid="ignore"):
                coef = np.where(rho > 0, f / np.maximum(rho**2, 1e-300), 0.0)
            return coef[:, None] * np.column_stack([-p[:, 1], p[:, 0]])
        out = np.empty((len(p), 2))
        for i, q in enumerate(p):
            out[i] = _newtonian_gradient(self.field, self.support_radius, q)
        return np.column_stack([-out[:, 1], out[:, 0]])


SuperPotential = QuadraticRadialPotential | QuadraticDirectionalPotential | NewtonianPotential


def potential_value(psi: SuperPotential, x) -> np.ndarray:
    return psi.psi(x)


def vector_potential(psi: SuperPotential, x) -> np.ndarray:
    """A = (-d2 Psi, d1 Psi); divergence-free with rot A equal to the field."""
    single = np.asarray(x, dtype=float).ndim == 1
    a = psi.a_field(x)
    return a[0] if single else a


def default_support_radius(domain: Domain) -> float:
    """Disc about the origin containing the closure with a 25% margin."""
    return 1.25 * geometry.circumradius_about(domain, (0.0, 0.0))


# ---------------------------------------------------------------------------
# log-kernel quadrature


def newtonian_potential(field: MagneticField, support_radius: float, x,
                        rel_tol: float = 1e-6) -> float:
    """(1/2pi) integral of log|x-y| B(y) over the centered support disc.

    Midpoint polar quadrature, doubled until the relative change drops below
    ``rel_tol``.  The cell containing x is replaced by a closed-form local
    integral of the log kernel over an equal-area disc.
    """
    x = _pt(x)
    prev = None
    for n in (64, 128, 256, 512, 1024):
        val = _newton_quad(field, support_radius, x, n)
        if prev is not None:
            scale = max(abs(val), abs(field_value(field, x.reshape(1, 2))[0]) * support_radius**2, 1e-12)
            if abs(val - prev) <= rel_tol * scale:
                # second-order midpoint rule: extrapolate the level pair
                return (4.0 * val - prev) / 3.0
        prev = val
    raise QuadratureError("log-kernel quadrature did not converge",
                          residual=abs(val - prev))


def _newton_quad(field, r, x, n):
    n_r, n_a = n, 2 * n
    dr = r / n_r
    da = 2 * math.pi / n_a
    rho = (np.arange(n_r) + 0.5) * dr
    ang = (np.arange(n_a) + 0.5) * da
    ca, sa = np.cos(ang), np.sin(ang)
    px = rho[:, None] * ca[None, :]
    py = rho[:, None] * sa[None, :]
    pts = np.column_stack([px.ravel(), py.ravel()])
    b = field_value(field, pts).reshape(n_r, n_a)
    w = (rho * dr * da)[:, None]
    d2 = (px - x[0]) ** 2 + (py - x[1]) ** 2
    rx = math.hypot(x[0], x[1])
    total = 0.0
    if rx < r:
        i = min(int(rx / dr), n_r - 1)
        j = int((math.atan2(x[1], x[0]) % (2 * math.pi)) / da) % n_a
        cell_area = rho[i] * dr * da
        eps = math.sqrt(cell_area / math.pi)
        bx = field_value(field, x.reshape(1, 2))[0]
        total += bx * cell_area * (math.log(max(eps, 1e-300)) - 0.5)
        d2[i, j] = np.inf  # handled analytically
    finite = np.isfinite(d2)
    total += float(np.sum(np.where(finite, 0.5 * np.log(np.maximum(d2, 1e-300)) * b * w, 0.0)))
    return total / (2 * math.pi)


def _newtonian_gradient(field, r, x, n=512):
    """grad of the log potential by quadrature; odd kernel near x cancels."""
    n_r, n_a = n, 2 * n
    dr = r / n_r
    da = 2 * math.pi / n_a
    rho = (np.arange(n_r) + 0.5) * dr
    ang = (np.arange(n_a) + 0.5) * da
    px = rho[:, None] * np.cos(ang)[None, :]
    py = rho[:, None] * np.sin(ang)[None, :]
    pts = np.column_stack([px.ravel(), py.ravel()])
    b = field_value(field, pts).reshape(n_r, n_a)
    w = (rho * dr * da)[:, None]
    dx = x[0] - px
    dy = x[1] - py
    d2 = np.maximum(dx**2 + dy**2, (0.5 * dr) ** 2)
    gx = float(np.sum(dx / d2 * b * w))
    gy = float(np.sum(dy / d2 * b * w))
    return np.array([gx, gy]) / (2 * math.pi)


# ---------------------------------------------------------------------------
# oscillation


def oscillation(psi: SuperPotential, domain: Domain, with_resolution: bool = False):
    """sup Psi - inf Psi over the domain closure.

    Quadratic families on analytic shapes reduce to one-dimensional algebra
    and are exact (resolution 0); otherwise a dense sample with local
    refinement is used and the final sample spacing is reported.
    """
    if isinstance(psi, QuadraticRadialPotential):
        c = np.array(psi.center)
        far = geometry.max_distance_to(domain, c)
        near = geometry.distance_to_domain(domain, c)
        value = 0.25 * psi.strength * (far**2 - near**2)
        return (value, 0.0) if with_resolution else value
    if isinstance(psi, QuadraticDirectionalPotential):
        lo, hi = geometry.support_interval(domain, psi.axis)
        s0, s1 = lo - psi.offset, hi - psi.offset
        sup = max(s0**2, s1**2)
        inf = 0.0 if s0 <= 0.0 <= s1 else min(s0**2, s1**2)
        value = 0.5 * psi.strength * (sup - inf)
        return (value, 0.0) if with_resolution else value
    return _oscillation_sampled(psi, domain, with_resolution)


def _oscillation_sampled(psi, domain, with_resolution, n0=96, rounds=3):
    xmin, ymin, xmax, ymax = geometry.bounding_box(domain)
    span = max(xmax - xmin, ymax - ymin)
    if span <= 0:
        raise geometry.DomainError("empty domain")

    def sample(cx, cy, half, n):
        xs = np.linspace(cx - half, cx + half, n)
        ys = np.linspace(cy - half, cy + half, n)
        X, Y = np.meshgrid(xs, ys)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        pts = pts[geometry.contains(domain, pts)]
        return pts

    pts = sample(0.5 * (xmin + xmax), 0.5 * (ymin + ymax), 0.5 * span, n0)
    bpts = boundary_points(domain, 4 * n0)
    pts = np.vstack([pts, bpts]) if len(pts) else bpts
    vals = psi.psi(pts)
    hi_pt, lo_pt = pts[np.argmax(vals)], pts[np.argmin(vals)]
    hi_val, lo_val = float(vals.max()), float(vals.min())
    res = span / n0
    for _ in range(rounds):
        res *= 0.2
        for kind in ("max", "min"):
            anchor = hi_pt if kind == "max" else lo_pt
            local = sample(anchor[0], anchor[1], 5 * res, 21)
            if len(local) == 0:
                continue
            lv = psi.psi(local)
            if kind == "max" and lv.max() > hi_val:
                hi_val, hi_pt = float(lv.max()), local[np.argmax(lv)]
            if kind == "min" and lv.min() < lo_val:
                lo_val, lo_pt = float(lv.min()), local[np.argmin(lv)]
    value = hi_val - lo_val
    return (value, res) if with_resolution else value


def boundary_points(domain: Domain, n: int) -> np.ndarray:
    """n points on (or within one cell of) the domain boundary."""
    if isinstance(domain, geometry.Disc):
        t = np.linspace(0, 2 * math.pi, n, endpoint=False)
        c = domain.center
        return np.column_stack([c[0] + domain.radius * np.cos(t), c[1] + domain.radius * np.sin(t)])
    if isinstance(domain, geometry.Rectangle):
        x0, y0 = domain.corner
        w, h = domain.width, domain.height
        per = 2 * (w + h)
        t = np.linspace(0, per, n, endpoint=False)
        pts = np.empty((n, 2))
        for i, ti in enumerate(t):
            if ti < w:
                pts[i] = (x0 + ti, y0)
            elif ti < w + h:
                pts[i] = (x0 + w, y0 + ti - w)
            elif ti < 2 * w + h:
                pts[i] = (x0 + 2 * w + h - ti, y0 + h)
            else:
                pts[i] = (x0, y0 + per - ti)
        return pts
    if isinstance(domain, geometry.Ellipse):
        t = np.linspace(0, 2 * math.pi, n, endpoint=False)
        a, b = domain.semi_axes
        v1, v2 = domain._axes()
        c = np.array(domain.center)
        return c + np.outer(a * np.cos(t), v1) + np.outer(b * np.sin(t), v2)
    if isinstance(domain, geometry.ConvexPolygon):
        v = domain.vertices
        w = np.roll(v, -1, axis=0)
        lengths = np.hypot(*(w - v).T)
        per = lengths.sum()
        counts = np.maximum(1, np.round(n * lengths / per).astype(int))
        segs = [v[i] + np.linspace(0, 1, counts[i], endpoint=False)[:, None] * (w[i] - v[i])
                for i in range(len(v))]
        return np.vstack(segs)
    if isinstance(domain, geometry.Mask):
        centers = domain.cell_centers()
        shifts = 0.5 * domain.cell_size * np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])
        return np.vstack([centers + s for s in shifts])
    raise geometry.DomainError(f"unsupported domain {domain!r}")


# ---------------------------------------------------------------------------
# family optimization


def optimize_superpotential(domain: Domain, B0: float, family: str):
    """Minimize the oscillation over one parametric family.

    Returns (potential, oscillation).  The result is an upper bound for the
    best achievable oscillation over all admissible potentials, since the
    search is restricted to the family.
    """
    if not B0 > 0:
        raise FieldError("field strength must be positive")
    if family == "quadratic_radial":
        return _optimize_radial(domain, B0)
    if family == "quadratic_directional":
        width, theta = geometry.min_width_direction(domain)
        lo, hi = geometry.support_interval(domain, geometry.direction(theta))
        psi = QuadraticDirectionalPotential(B0, offset=0.5 * (lo + hi), angle=theta)
        return psi, B0 * width**2 / 8.0
    if family == "newtonian":
        psi = NewtonianPotential(ConstantField(B0), default_support_radius(domain))
        return psi, oscillation(psi, domain)
    raise FieldError(f"unknown potential family {family!r}")


def _optimize_radial(domain, B0):
    xmin, ymin, xmax, ymax = geometry.bounding_box(domain)

    def osc_at(cx, cy):
        return oscillation(QuadraticRadialPotential(B0, (cx, cy)), domain)

    cx, cy = geometry.incenter(domain)
    for _ in range(24):
        cx, _ = _golden_min(lambda t: osc_at(t, cy), xmin, xmax, iters=60)
        cy, _ = _golden_min(lambda t: osc_at(cx, t), ymin, ymax, iters=60)
    psi = QuadraticRadialPotential(B0, (cx, cy))
    return psi, oscillation(psi, domain)


def best_oscillation(domain: Domain, B0: float) -> tuple[SuperPotential, float]:
    """Best of the radial and directional quadratic families."""
    pr, vr = optimize_superpotential(domain, B0, "quadratic_radial")
    pd, vd = optimize_superpotential(domain, B0, "quadratic_directional")
    return (pr, vr) if vr <= vd else (pd, vd)
