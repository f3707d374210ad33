"""Certified local lower bound for the magnetic form on a small disc.

Given a field B and a disc of radius R around y, the reduced flux

    mu(r) = distance of the normalized flux through B(y, r) to the nearest
            integer, in [0, 1/2],

drives a chain of constants (mu0, nu0, r0, c0, c1) that certify

    c1 * magnetic form on the disc  >=  L2 norm on the disc,

so F1 = 1/c1 is a guaranteed lower bound for the lowest magnetic Neumann
eigenvalue of the disc.  All downstream shift bounds consume F1 from here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jn_zeros

from .fields import ConstantField, MagneticField, flux_profile
from .geometry import _golden_min, _pt

J01 = float(jn_zeros(0, 1)[0])


@dataclass(frozen=True)
class LocalBoundConstants:
    """Constants of the certified disc bound; ``bound`` is F1 = 1/c1.

    ``positive`` is False when the flux vanishes identically on [0, R], in
    which case no positive bound exists and ``bound`` is 0.
    """

    mu0: float
    nu0: float
    r0: float
    c0: float
    c1: float
    bound: float
    radius: float
    center: tuple[float, float]
    positive: bool
    r0_candidates: tuple[float, ...] = field(default_factory=tuple)


def reduced_flux(fieldspec: MagneticField, y, r: float) -> float:
    """Distance of the normalized flux through B(y, r) to the nearest integer."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    phi = flux_profile(fieldspec, y, np.array([float(r)]))[0]
    return float(abs(phi - round(phi)))


def _mu_of(phi: np.ndarray) -> np.ndarray:
    return np.abs(phi - np.round(phi))


def local_bound_constants(fieldspec: MagneticField, y, R: float,
                          samples: int = 512) -> LocalBoundConstants:
    """Evaluate the constants on an r-grid with local refinement.

    The grid excludes r = 0 (the ratios involved vanish there for bounded
    fields).  Every grid point attaining the maximum of mu(r)/r is a root of
    chi(r) = 1; each candidate is refined and the one minimizing c1 (the
    sharpest certified bound) is kept.
    """
    if samples < 256:
        raise ValueError("need at least 256 radial samples")
    if not R > 0:
        raise ValueError("radius must be positive")
    y = _pt(y)
    r = np.linspace(R / samples, R, samples)
    phi = flux_profile(fieldspec, y, r)
    mu = _mu_of(phi)
    ratio = mu / r
    m_grid = float(ratio.max())
    if m_grid <= 1e-14 / max(R, 1.0):
        return LocalBoundConstants(
            mu0=math.inf, nu0=0.0, r0=0.0, c0=math.inf, c1=math.inf,
            bound=0.0, radius=R, center=(y[0], y[1]), positive=False,
        )

    def neg_ratio(t):
        if t <= 0:
            return 0.0
        ph = flux_profile(fieldspec, y, np.array([t]))[0]
        return -abs(ph - round(ph)) / t

    # refine every grid-local maximum that is competitive
    candidates = []
    m_best = m_grid
    for i in range(samples):
        left = ratio[i - 1] if i > 0 else -np.inf
        right = ratio[i + 1] if i < samples - 1 else -np.inf
        if ratio[i] >= left and ratio[i] >= right and ratio[i] >= 0.999 * m_grid:
            lo = r[i - 1] if i > 0 else r[0] * 0.5
            hi = r[i + 1] if i < samples - 1 else R
            t, nv = _golden_min(neg_ratio, lo, min(hi, R))
            t = min(t, R)
            candidates.append((t, -neg_ratio(t)))
            m_best = max(m_best, -nv)
    mu0 = 1.0 / m_best
    r0s = sorted({round(t, 14) for t, v in candidates if v >= m_best * (1 - 1e-9)})

    nu0 = _nu0(fieldspec, y, R, r, mu, phi)

    best = None
    for r0 in r0s:
        c0 = 4.0 * max(r0**2 / J01**2, (2 * R**3 - 3 * R**2 * r0 + r0**3) / (6 * r0))
        c1 = max(2 * mu0**2 + 4 * c0 * nu0**2 * mu0**4, c0)
        if best is None or c1 < best[2]:
            best = (r0, c0, c1)
    r0, c0, c1 = best
    return LocalBoundConstants(
        mu0=mu0, nu0=nu0, r0=r0, c0=c0, c1=c1, bound=1.0 / c1,
        radius=R, center=(y[0], y[1]), positive=True,
        r0_candidates=tuple(r0s),
    )


def _nu0(fieldspec, y, R, r, mu, phi):
    """max over (0, R] of |r^-2 (r mu'(r) - mu(r))|.

    For a constant field mu is piecewise quadratic with exact one-sided
    derivatives, and the supremum is max over flux branches evaluated at the
    branch onsets; sampled fields use central differences on the grid.
    """
    if isinstance(fieldspec, ConstantField):
        B0 = abs(fieldspec.strength)
        if B0 == 0.0:
            return 0.0
        # On branch k the value is B0/2 + k/r^2, largest as r approaches the
        # onset of the first descending branch (flux 1/2, r = B0^(-1/2)):
        # sup = 3 B0/2 when that kink lies strictly inside (0, R), else B0/2.
        return 1.5 * B0 if B0 * R**2 > 1.0 else 0.5 * B0
    dmu = np.gradient(mu, r)
    g = np.abs(r * dmu - mu) / r**2
    return float(g.max())


def certified_local_bound(fieldspec: MagneticField, y, R: float,
                          samples: int = 512) -> float:
    """F1 = 1/c1; zero when the flux vanishes identically on [0, R]."""
    return local_bound_constants(fieldspec, y, R, samples).bound
