"""Planar domains and the geometric quantities the eigenvalue bounds consume.

Supported shapes: disc, axis-aligned rectangle, rotated ellipse, strictly
convex counterclockwise polygon, and boolean raster masks.  Analytic shapes
get closed-form answers; masks are resolved at their cell size.  All
operations are pure functions of immutable inputs.

Direction convention: the extent of a domain at angle ``theta`` is measured
along the unit vector ``u(theta) = (sin theta, cos theta)``, i.e. the image
of the vertical axis under a rotation by ``theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import linprog


class DomainError(ValueError):
    """Invalid or degenerate domain description."""


class RegimeError(ValueError):
    """A field-strength regime precondition does not hold."""


def _pt(p) -> np.ndarray:
    return np.asarray(p, dtype=float).reshape(2)


def _pts(p) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, 2)
    return a


def direction(theta: float) -> np.ndarray:
    """Unit vector along which the extent at angle theta is measured."""
    return np.array([math.sin(theta), math.cos(theta)])


# ---------------------------------------------------------------------------
# shape types


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "radius", float(self.radius))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise DomainError("disc radius must be positive and finite")


@dataclass(frozen=True)
class Rectangle:
    corner: tuple[float, float]
    width: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "corner", (float(self.corner[0]), float(self.corner[1])))
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "height", float(self.height))
        if not (self.width > 0 and self.height > 0):
            raise DomainError("rectangle sides must be positive")


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    semi_axes: tuple[float, float]
    rotation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "semi_axes", (float(self.semi_axes[0]), float(self.semi_axes[1])))
        object.__setattr__(self, "rotation", float(self.rotation))
        if not (self.semi_axes[0] > 0 and self.semi_axes[1] > 0):
            raise DomainError("ellipse semi-axes must be positive")

    def _axes(self):
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return np.array([c, s]), np.array([-s, c])


class ConvexPolygon:
    """Strictly convex polygon with vertices in counterclockwise order."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DomainError("polygon needs at least 3 planar vertices")
        scale = float(np.max(np.abs(v))) + 1.0
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross <= 1e-14 * scale**2):
            raise DomainError("vertices must be strictly convex and counterclockwise")
        self.vertices = v
        self.vertices.flags.writeable = False
        lengths = np.hypot(e[:, 0], e[:, 1])
        # outward unit normals of a CCW polygon
        self._normals = np.column_stack([e[:, 1], -e[:, 0]]) / lengths[:, None]
        self._offsets = np.einsum("ij,ij->i", self._normals, v)
        self._normals.flags.writeable = False
        self._offsets.flags.writeable = False

    def __repr__(self):
        return f"ConvexPolygon({len(self.vertices)} vertices)"


class Mask:
    """Raster domain: union of the occupied cells of a boolean grid.

    ``cells[iy, ix]`` covers ``origin + [ix, ix+1] x [iy, iy+1] * cell_size``.
    Geometric queries are resolved to within one cell size.
    """

    def __init__(self, cells, cell_size: float, origin=(0.0, 0.0)):
        c = np.asarray(cells, dtype=bool)
        if c.ndim != 2 or not c.any():
            raise DomainError("mask must be a non-empty 2d boolean grid")
        if not cell_size > 0:
            raise DomainError("cell size must be positive")
        interior = c & np.roll(c, 1, 0) & np.roll(c, -1, 0) & np.roll(c, 1, 1) & np.roll(c, -1, 1)
        interior[0, :] = interior[-1, :] = False
        interior[:, 0] = interior[:, -1] = False
        if not interior.any():
            raise DomainError("mask has no interior cell")
        self.cells = c
        self.cells.flags.writeable = False
        self.cell_size = float(cell_size)
        self.origin = (float(origin[0]), float(origin[1]))
        padded = np.pad(c, 1, constant_values=False)
        self._edt = ndimage.distance_transform_edt(padded)[1:-1, 1:-1] * self.cell_size

    @classmethod
    def from_function(cls, inside, bbox, cell_size):
        """Rasterize ``inside(x, y) -> bool`` over bbox=(xmin, ymin, xmax, ymax)."""
        xmin, ymin, xmax, ymax = bbox
        nx = int(math.ceil((xmax - xmin) / cell_size))
        ny = int(math.ceil((ymax - ymin) / cell_size))
        xs = xmin + (np.arange(nx) + 0.5) * cell_size
        ys = ymin + (np.arange(ny) + 0.5) * cell_size
        X, Y = np.meshgrid(xs, ys)
        return cls(inside(X, Y), cell_size, origin=(xmin, ymin))

    def cell_centers(self):
        iy, ix = np.nonzero(self.cells)
        return np.column_stack([
            self.origin[0] + (ix + 0.5) * self.cell_size,
            self.origin[1] + (iy + 0.5) * self.cell_size,
        ])

    def __repr__(self):
        return f"Mask({self.cells.shape}, cell={self.cell_size})"


Domain = Disc | Rectangle | Ellipse | ConvexPolygon | Mask


# ---------------------------------------------------------------------------
# basic queries


def bounding_box(domain: Domain) -> tuple[float, float, float, float]:
    if isinstance(domain, Disc):
        cx, cy = domain.center
        r = domain.radius
        return (cx - r, cy - r, cx + r, cy + r)
    if isinstance(domain, Rectangle):
        x0, y0 = domain.corner
        return (x0, y0, x0 + domain.width, y0 + domain.height)
    if isinstance(domain, Ellipse):
        a, b = domain.semi_axes
        v1, v2 = domain._axes()
        hx = math.hypot(a * v1[0], b * v2[0])
        hy = math.hypot(a * v1[1], b * v2[1])
        cx, cy = domain.center
        return (cx - hx, cy - hy, cx + hx, cy + hy)
    if isinstance(domain, ConvexPolygon):
        v = domain.vertices
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())
    if isinstance(domain, Mask):
        iy, ix = np.nonzero(domain.cells)
        cs = domain.cell_size
        return (
            domain.origin[0] + ix.min() * cs,
            domain.origin[1] + iy.min() * cs,
            domain.origin[0] + (ix.max() + 1) * cs,
            domain.origin[1] + (iy.max() + 1) * cs,
        )
    raise DomainError(f"unsupported domain {domain!r}")


def area(domain: Domain) -> float:
    if isinstance(domain, Disc):
        return math.pi * domain.radius**2
    if isinstance(domain, Rectangle):
        return domain.width * domain.height
    if isinstance(domain, Ellipse):
        return math.pi * domain.semi_axes[0] * domain.semi_axes[1]
    if isinstance(domain, ConvexPolygon):
        v = domain.vertices
        w = np.roll(v, -1, axis=0)
        return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))
    if isinstance(domain, Mask):
        return float(domain.cells.sum()) * domain.cell_size**2
    raise DomainError(f"unsupported domain {domain!r}")


def contains(domain: Domain, points) -> np.ndarray:
    """Strict interior test, vectorized over an (N, 2) array of points."""
    p = _pts(points)
    if isinstance(domain, Disc):
        d = np.hypot(p[:, 0] - domain.center[0], p[:, 1] - domain.center[1])
        return d < domain.radius
    if isinstance(domain, Rectangle):
        x0, y0 = domain.corner
        return (
            (p[:, 0] > x0) & (p[:, 0] < x0 + domain.width)
            & (p[:, 1] > y0) & (p[:, 1] < y0 + domain.height)
        )
    if isinstance(domain, Ellipse):
        q = p - np.array(domain.center)
        v1, v2 = domain._axes()
        a, b = domain.semi_axes
        return (q @ v1 / a) ** 2 + (q @ v2 / b) ** 2 < 1.0
    if isinstance(domain, ConvexPolygon):
        margins = domain._offsets[None, :] - p @ domain._normals.T
        return margins.min(axis=1) > 0.0
    if isinstance(domain, Mask):
        cs = domain.cell_size
        ix = np.floor((p[:, 0] - domain.origin[0]) / cs).astype(int)
        iy = np.floor((p[:, 1] - domain.origin[1]) / cs).astype(int)
        ny, nx = domain.cells.shape
        ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        out = np.zeros(len(p), dtype=bool)
        out[ok] = domain.cells[iy[ok], ix[ok]]
        return out
    raise DomainError(f"unsupported domain {domain!r}")


def _ellipse_curve_distance(a, b, q):
    """Distance from point q (ellipse frame) to the curve x^2/a^2 + y^2/b^2 = 1."""
    ang = np.linspace(0.0, 2 * math.pi, 1024, endpoint=False)

    def d2(t):
        return (a * np.cos(t) - q[0]) ** 2 + (b * np.sin(t) - q[1]) ** 2

    vals = d2(ang)
    i = int(np.argmin(vals))
    lo, hi = ang[i] - 2 * math.pi / 1024, ang[i] + 2 * math.pi / 1024
    gr = (math.sqrt(5) - 1) / 2
    x1 = hi - gr * (hi - lo)
    x2 = lo + gr * (hi - lo)
    f1, f2 = d2(x1), d2(x2)
    for _ in range(80):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - gr * (hi - lo)
            f1 = d2(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + gr * (hi - lo)
            f2 = d2(x2)
    return math.sqrt(min(f1, f2))


def boundary_distance(domain: Domain, points) -> np.ndarray:
    """Distance to the boundary for interior points; 0 outside the closure."""
    p = _pts(points)
    if isinstance(domain, Disc):
        d = np.hypot(p[:, 0] - domain.center[0], p[:, 1] - domain.center[1])
        return np.maximum(0.0, domain.radius - d)
    if isinstance(domain, Rectangle):
        x0, y0 = domain.corner
        m = np.minimum.reduce([
            p[:, 0] - x0, x0 + domain.width - p[:, 0],
            p[:, 1] - y0, y0 + domain.height - p[:, 1],
        ])
        return np.maximum(0.0, m)
    if isinstance(domain, ConvexPolygon):
        margins = domain._offsets[None, :] - p @ domain._normals.T
        return np.maximum(0.0, margins.min(axis=1))
    if isinstance(domain, Ellipse):
        q = p - np.array(domain.center)
        v1, v2 = domain._axes()
        a, b = domain.semi_axes
        out = np.zeros(len(p))
        inside = (q @ v1 / a) ** 2 + (q @ v2 / b) ** 2 < 1.0
        for i in np.nonzero(inside)[0]:
            out[i] = _ellipse_curve_distance(a, b, (q[i] @ v1, q[i] @ v2))
        return out
    if isinstance(domain, Mask):
        cs = domain.cell_size
        ix = np.floor((p[:, 0] - domain.origin[0]) / cs).astype(int)
        iy = np.floor((p[:, 1] - domain.origin[1]) / cs).astype(int)
        ny, nx = domain.cells.shape
        ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        out = np.zeros(len(p))
        out[ok] = domain._edt[iy[ok], ix[ok]]
        return out
    raise DomainError(f"unsupported domain {domain!r}")


def distance_to_domain(domain: Domain, point) -> float:
    """Distance from a point to the closure of the domain (0 if inside)."""
    p = _pt(point)
    if contains(domain, p)[0]:
        return 0.0
    if isinstance(domain, Disc):
        return max(0.0, math.hypot(*(p - np.array(domain.center))) - domain.radius)
    if isinstance(domain, Rectangle):
        x0, y0 = domain.corner
        dx = max(x0 - p[0], 0.0, p[0] - (x0 + domain.width))
        dy = max(y0 - p[1], 0.0, p[1] - (y0 + domain.height))
        return math.hypot(dx, dy)
    if isinstance(domain, Ellipse):
        q = p - np.array(domain.center)
        v1, v2 = domain._axes()
        return _ellipse_curve_distance(*domain.semi_axes, (q @ v1, q @ v2))
    if isinstance(domain, ConvexPolygon):
        v = domain.vertices
        w = np.roll(v, -1, axis=0)
        e = w - v
        t = np.clip(np.einsum("ij,ij->i", p[None, :] - v, e) / np.einsum("ij,ij->i", e, e), 0, 1)
        proj = v + t[:, None] * e
        return float(np.min(np.hypot(proj[:, 0] - p[0], proj[:, 1] - p[1])))
    if isinstance(domain, Mask):
        centers = domain.cell_centers()
        d = np.hypot(centers[:, 0] - p[0], centers[:, 1] - p[1])
        return max(0.0, float(d.min()) - domain.cell_size * math.sqrt(0.5))
    raise DomainError(f"unsupported domain {domain!r}")


def max_distance_to(domain: Domain, point) -> float:
    """Largest distance from a point to the closure of the domain."""
    p = _pt(point)
    if isinstance(domain, Disc):
        return math.hypot(*(p - np.array(domain.center))) + domain.radius
    if isinstance(domain, Rectangle):
        x0, y0 = domain.corner
        corners = np.array([
            [x0, y0], [x0 + domain.width, y0],
            [x0, y0 + domain.height], [x0 + domain.width, y0 + domain.height],
        ])
        return float(np.max(np.hypot(corners[:, 0] - p[0], corners[:, 1] - p[1])))
    if isinstance(domain, Ellipse):
        q = p - np.array(domain.center)
        v1, v2 = domain._axes()
        a, b = domain.semi_axes
        qa, qb = q @ v1, q @ v2
        ang = np.linspace(0, 2 * math.pi, 2048, endpoint=False)
        d2 = (a * np.cos(ang) - qa) ** 2 + (b * np.sin(ang) - qb) ** 2
        i = int(np.argmax(d2))
        lo, hi = ang[i] - 2 * math.pi / 2048, ang[i] + 2 * math.pi / 2048
        f = lambda t: -((a * math.cos(t) - qa) ** 2 + (b * math.sin(t) - qb) ** 2)
        t, val = _golden_min(f, lo, hi)
        return math.sqrt(-val)
    if isinstance(domain, ConvexPolygon):
        v = domain.vertices
        return float(np.max(np.hypot(v[:, 0] - p[0], v[:, 1] - p[1])))
    if isinstance(domain, Mask):
        best = 0.0
        for sx in (-0.5, 0.5):
            for sy in (-0.5, 0.5):
                c = domain.cell_centers() + np.array([sx, sy]) * domain.cell_size
                best = max(best, float(np.max(np.hypot(c[:, 0] - p[0], c[:, 1] - p[1]))))
        return best
    raise DomainError(f"unsupported domain {domain!r}")


def circumradius_about(domain: Domain, point=(0.0, 0.0)) -> float:
    return max_distance_to(domain, point)


def _golden_min(f, lo, hi, iters=90):
    gr = (math.sqrt(5) - 1) / 2
    x1 = hi - gr * (hi - lo)
    x2 = lo + gr * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - gr * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + gr * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 < f2 else (x2, f2)


# ---------------------------------------------------------------------------
# widths, extents, diameter


def support_interval(domain: Domain, u) -> tuple[float, float]:
    """Range of x . u over the closure of the domain."""
    u = _pt(u)
    if isinstance(domain, Disc):
        c = np.array(domain.center) @ u
        return (c - domain.radius, c + domain.radius)
    if isinstance(domain, Rectangle):
        x0, y0 = domain.corner
        base = x0 * u[0] + y0 * u[1]
        lo = base + min(0.0, domain.width * u[0]) + min(0.0, domain.height * u[1])
        hi = base + max(0.0, domain.width * u[0]) + max(0.0, domain.height * u[1])
        return (lo, hi)
    if isinstance(domain, Ellipse):
        v1, v2 = domain._axes()
        a, b = domain.semi_axes
        c = np.array(domain.center) @ u
        half = math.hypot(a * (u @ v1), b * (u @ v2))
        return (c - half, c + half)
    if isinstance(domain, ConvexPolygon):
        t = domain.vertices @ u
        return (float(t.min()), float(t.max()))
    if isinstance(domain, Mask):
        t = domain.cell_centers() @ u
        margin = 0.5 * domain.cell_size * (abs(u[0]) + abs(u[1]))
        return (float(t.min()) - margin, float(t.max()) + margin)
    raise DomainError(f"unsupported domain {domain!r}")


def directional_extent(domain: Domain, x0, theta: float) -> float:
    """Vertical extent of the domain after rotating it by theta about x0.

    The value does not depend on x0 (rotation centers only translate the
    set); the base point is kept in the signature and validated so that
    callers supply a legitimate interior reference point.
    """
    p = _pt(x0)
    if not contains(domain, p)[0] and distance_to_domain(domain, p) > 1e-9:
        raise DomainError("base point must lie in the domain")
    lo, hi = support_interval(domain, direction(theta))
    return hi - lo


def min_width(domain: Domain) -> float:
    return min_width_direction(domain)[0]


def min_width_direction(domain: Domain) -> tuple[float, float]:
    """Smallest directional extent and the angle attaining it."""
    if isinstance(domain, Disc):
        return 2.0 * domain.radius, 0.0
    if isinstance(domain, Rectangle):
        if domain.height <= domain.width:
            return domain.height, 0.0
        return domain.width, math.pi / 2
    if isinstance(domain, Ellipse):
        a, b = domain.semi_axes
        # width is minimal across the shorter principal axis
        v1, v2 = domain._axes()
        u = v2 if b <= a else v1
        theta = math.atan2(u[0], u[1]) % math.pi
        return 2.0 * min(a, b), theta
    if isinstance(domain, ConvexPolygon):
        v = domain.vertices
        n = domain._normals
        d = domain._offsets
        widths = d - (v @ n.T).min(axis=0)
        i = int(np.argmin(widths))
        theta = math.atan2(n[i, 0], n[i, 1]) % math.pi
        return float(widths[i]), theta
    if isinstance(domain, Mask):
        centers = domain.cell_centers()
        cs = domain.cell_size

        def extent(theta):
            u = direction(theta)
            t = centers @ u
            return (t.max() - t.min()) + cs * (abs(u[0]) + abs(u[1]))

        thetas = np.linspace(0.0, math.pi, 1024, endpoint=False)
        vals = np.array([extent(t) for t in thetas])
        i = int(np.argmin(vals))
        step = math.pi / 1024
        theta, val = _golden_min(extent, thetas[i] - step, thetas[i] + step)
        return val, theta % math.pi
    raise DomainError(f"unsupported domain {domain!r}")


def diameter(domain: Domain) -> float:
    if isinstance(domain, Disc):
        return 2.0 * domain.radius
    if isinstance(domain, Rectangle):
        return math.hypot(domain.width, domain.height)
    if isinstance(domain, Ellipse):
        return 2.0 * max(domain.semi_axes)
    if isinstance(domain, ConvexPolygon):
        return _hull_diameter(domain.vertices)
    if isinstance(domain, Mask):
        pts = []
        for sx in (-0.5, 0.5):
            for sy in (-0.5, 0.5):
                pts.append(domain.cell_centers() + np.array([sx, sy]) * domain.cell_size)
        pts = np.vstack(pts)
        from scipy.spatial import ConvexHull

        hull = pts[ConvexHull(pts).vertices]
        return _hull_diameter(hull)
    raise DomainError(f"unsupported domain {domain!r}")


def _hull_diameter(v: np.ndarray) -> float:
    """Antipodal sweep over a convex CCW vertex loop."""
    n = len(v)
    if n <= 3:
        d = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                d = max(d, math.hypot(*(v[i] - v[j])))
        return d

    def tri2(a, b, c):
        return abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    best = 0.0
    j = 1
    for i in range(n):
        i2 = (i + 1) % n
        while tri2(v[i], v[i2], v[(j + 1) % n]) > tri2(v[i], v[i2], v[j]):
            j = (j + 1) % n
        best = max(best, math.hypot(*(v[i] - v[j])), math.hypot(*(v[i2] - v[j])))
    return best


# ---------------------------------------------------------------------------
# in-radius and in-center


def inradius(domain: Domain) -> float:
    return incenter_inradius(domain)[1]


def incenter(domain: Domain) -> np.ndarray:
    return incenter_inradius(domain)[0]


def incenter_inradius(domain: Domain) -> tuple[np.ndarray, float]:
    """Center and radius of a largest inscribed disc.

    When the maximizer of the boundary distance is not unique the
    lexicographically smallest one is returned, so packings built on top of
    this are reproducible.
    """
    if isinstance(domain, Disc):
        return np.array(domain.center), domain.radius
    if isinstance(domain, Rectangle):
        m = 0.5 * min(domain.width, domain.height)
        x0, y0 = domain.corner
        return np.array([x0 + m, y0 + m]), m
    if isinstance(domain, Ellipse):
        return np.array(domain.center), min(domain.semi_axes)
    if isinstance(domain, ConvexPolygon):
        return _polygon_incenter(domain)
    if isinstance(domain, Mask):
        d = np.where(domain.cells, domain._edt, -1.0)
        best = d.max()
        if best <= 0:
            raise DomainError("mask has no interior")
        iy, ix = np.nonzero(d >= best - 1e-12 * max(best, 1.0))
        cs = domain.cell_size
        cx = domain.origin[0] + (ix + 0.5) * cs
        cy = domain.origin[1] + (iy + 0.5) * cs
        order = np.lexsort((cy, cx))
        return np.array([cx[order[0]], cy[order[0]]]), float(best)
    raise DomainError(f"unsupported domain {domain!r}")


def _polygon_incenter(poly: ConvexPolygon) -> tuple[np.ndarray, float]:
    """Chebyshev center of a convex polygon, polished to machine precision.

    A linear program locates the optimum, then the active edge set is
    re-solved exactly (triples of edges, or antiparallel pairs) so the
    returned radius does not carry LP solver tolerances.
    """
    n_edges = poly._normals
    d = poly._offsets
    scale = float(np.max(np.abs(poly.vertices))) + 1.0
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=np.column_stack([n_edges, np.ones(len(d))]),
        b_ub=d,
        bounds=[(None, None), (None, None), (0, None)],
        method="highs",
    )
    if not res.success:
        raise DomainError("degenerate polygon: in-radius LP failed")
    x_lp = res.x[:2]
    r_lp = res.x[2]
    slack = d - n_edges @ x_lp - r_lp
    active = np.nonzero(slack < 1e-6 * scale)[0]
    if len(active) < 2:
        active = np.arange(len(d))

    def feasible(x, r):
        return np.min(d - n_edges @ x) >= r - 1e-9 * scale

    best = (np.array(x_lp), float(r_lp))
    idx = list(active)
    for ii in range(len(idx)):
        for jj in range(ii + 1, len(idx)):
            i, j = idx[ii], idx[jj]
            ni, nj = n_edges[i], n_edges[j]
            if ni @ nj < -1.0 + 1e-12:
                # parallel strip: optimal centers form a segment
                r = 0.5 * (d[i] + d[j])
                if r <= best[1] + 1e-15 * scale:
                    continue
                mid = 0.5 * (d[i] - d[j]) * ni
                t_hat = np.array([-ni[1], ni[0]])
                lo, hi = -np.inf, np.inf
                for m in range(len(d)):
                    a = n_edges[m] @ t_hat
                    b = d[m] - r - n_edges[m] @ mid
                    if abs(a) < 1e-15:
                        if b < -1e-9 * scale:
                            lo, hi = 1.0, 0.0
                            break
                    elif a > 0:
                        hi = min(hi, b / a)
                    else:
                        lo = max(lo, b / a)
                if lo <= hi:
                    x = mid + 0.5 * (lo + hi) * t_hat
                    best = (x, float(r))
            for kk in range(jj + 1, len(idx)):
                k = idx[kk]
                A = np.column_stack([n_edges[[i, j, k]], np.ones(3)])
                if abs(np.linalg.det(A)) < 1e-14:
                    continue
                sol = np.linalg.solve(A, d[[i, j, k]])
                x, r = sol[:2], sol[2]
                if r > best[1] and feasible(x, r):
                    best = (x, float(r))
    return best


def is_convex(domain: Domain) -> bool:
    if isinstance(domain, (Disc, Rectangle, Ellipse, ConvexPolygon)):
        return True
    if isinstance(domain, Mask):
        # convex iff filling the convex hull of cell centers adds no cells
        from scipy.spatial import ConvexHull, Delaunay

        centers = domain.cell_centers()
        if len(centers) < 3:
            return True
        try:
            hull = Delaunay(centers[ConvexHull(centers).vertices])
        except Exception:
            return True
        ny, nx = domain.cells.shape
        cs = domain.cell_size
        xs = domain.origin[0] + (np.arange(nx) + 0.5) * cs
        ys = domain.origin[1] + (np.arange(ny) + 0.5) * cs
        X, Y = np.meshgrid(xs, ys)
        inside = hull.find_simplex(np.column_stack([X.ravel(), Y.ravel()])) >= 0
        missing = inside.reshape(ny, nx) & ~domain.cells
        return not missing.any()
    raise DomainError(f"unsupported domain {domain!r}")


# ---------------------------------------------------------------------------
# disc packing for the large-field shift bound


@dataclass(frozen=True)
class PackingPlan:
    """Disjoint discs of a common radius packed around the in-center.

    ``count`` may fall short of ``target_count`` (the integer part of
    R_in^2 * B0); ``all_fit`` flags that case.  The sum-based bound stays
    valid with fewer nonnegative terms.
    """

    count: int
    disc_radius: float
    centers: np.ndarray
    target_count: int
    all_fit: bool

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "centers", c)
        if len(c) != self.count:
            raise DomainError("packing count mismatch")
        if self.count >= 2:
            diff = c[:, None, :] - c[None, :, :]
            dist = np.hypot(diff[..., 0], diff[..., 1])
            np.fill_diagonal(dist, np.inf)
            if dist.min() < 2 * self.disc_radius * (1 - 1e-12):
                raise DomainError("packed discs overlap")


def pack_discs(domain: Domain, B0: float) -> PackingPlan:
    """Pack discs of radius B0^(-1/2)/2 inside the half in-radius disc.

    Centers sit on a square grid of pitch equal to one disc diameter; of the
    four half-pitch grid alignments the one fitting the most discs is kept
    (deterministic tie break).  Requires the large-field regime
    B0 > 1/R_in^2.
    """
    if not B0 > 0:
        raise RegimeError("field strength must be positive")
    x0, r_in = incenter_inradius(domain)
    if B0 <= 1.0 / r_in**2:
        raise RegimeError("packing requires B0 > 1/R_in^2")
    rho = 0.5 / math.sqrt(B0)
    pitch = 2.0 * rho
    target = int(math.floor(r_in**2 * B0))
    r_half = 0.5 * r_in
    reach = r_half - rho
    m = int(math.ceil(r_half / pitch)) + 1
    ii = np.arange(-m, m + 1)
    gx, gy = np.meshgrid(ii, ii)
    base = np.column_stack([gx.ravel(), gy.ravel()]).astype(float) * pitch

    best = None
    for off in ((0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)):
        cand = base + np.array(off) * pitch + x0
        dist = np.hypot(cand[:, 0] - x0[0], cand[:, 1] - x0[1])
        keep = cand[dist <= reach + 1e-12 * max(r_in, 1.0)]
        if best is None or len(keep) > len(best):
            best = keep
    if len(best) > target:
        dist = np.hypot(best[:, 0] - x0[0], best[:, 1] - x0[1])
        order = np.lexsort((best[:, 0], best[:, 1], dist))
        best = best[order[:target]]
    order = np.lexsort((best[:, 0], best[:, 1]))
    best = best[order]
    return PackingPlan(
        count=len(best),
        disc_radius=rho,
        centers=best,
        target_count=target,
        all_fit=len(best) >= target,
    )
