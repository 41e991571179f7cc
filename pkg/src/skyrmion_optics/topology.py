"""Skyrmion density of a Poincare texture and its integral, the skyrmion number."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CoverageError, SkyrmionError
from .field import GridSpec
from .polarimetry import PoincareField, radial_profile

MIN_COVERAGE = 0.9


@dataclass(eq=False)
class SkyrmionDensityField:
    grid: GridSpec
    sigma_z: np.ndarray
    mask: np.ndarray


@dataclass
class AnalysisResult:
    n_skyrmion: float
    uncertainty: float
    integration_radius: float
    center: tuple
    pixel_count: int
    coverage: float = 1.0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.uncertainty < 0 or self.pixel_count <= 0 or self.integration_radius <= 0:
            raise SkyrmionError(f"inconsistent analysis result {self}")
        self.center = tuple(float(c) for c in self.center)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["center"] = list(self.center)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisResult":
        return cls(**d)


def _centered_diffs(m: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Centered differences along x (axis -1) and y (axis -2); edges left 0."""
    ax = np.zeros_like(m)
    ay = np.zeros_like(m)
    ax[..., :, 1:-1] = (m[..., :, 2:] - m[..., :, :-2]) / (2.0 * grid.dx)
    ay[..., 1:-1, :] = (m[..., 2:, :] - m[..., :-2, :]) / (2.0 * grid.dy)
    return ax, ay


def _stencil_mask(mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(mask)
    out[1:-1, 1:-1] = (
        mask[1:-1, 1:-1] & mask[1:-1, 2:] & mask[1:-1, :-2] & mask[2:, 1:-1] & mask[:-2, 1:-1]
    )
    return out


def skyrmion_density(pf: PoincareField) -> SkyrmionDensityField:
    """Triple product ``M . (dM/dx x dM/dy)`` with 3-point centered differences.

    A pixel is valid only when it and its four neighbours are valid; the
    density is zero elsewhere.
    """
    if not pf.mask.any():
        raise SkyrmionError("Poincare field is fully masked")
    m = pf.stack()
    ax, ay = _centered_diffs(m, pf.grid)
    sigma = np.einsum("i...,i...->...", m, np.cross(ax, ay, axis=0))
    mask = _stencil_mask(pf.mask)
    if not mask.any():
        raise SkyrmionError("no pixel has a complete finite-difference stencil")
    sigma = np.where(mask, sigma, 0.0)
    return SkyrmionDensityField(pf.grid, sigma, mask)


def density_sensitivity(pf: PoincareField, weights: np.ndarray) -> np.ndarray:
    """Gradient of ``sum_p weights_p * sigma_z(p)`` with respect to every ``M_k``.

    Returns an array of shape ``(3, ny, nx)``. Used to propagate per-pixel
    uncertainties of ``M`` into the skyrmion number.
    """
    g = pf.grid
    m = pf.stack()
    ax, ay = _centered_diffs(m, g)
    w = weights[None]
    grad = w * np.cross(ax, ay, axis=0)
    # d sigma / d(dM/dx) = dM/dy x M ; d sigma / d(dM/dy) = M x dM/dx
    gx = w * np.cross(ay, m, axis=0) / (2.0 * g.dx)
    gy = w * np.cross(m, ax, axis=0) / (2.0 * g.dy)
    grad[:, :, 2:] += gx[:, :, 1:-1]
    grad[:, :, :-2] -= gx[:, :, 1:-1]
    grad[:, 2:, :] += gy[:, 1:-1, :]
    grad[:, :-2, :] -= gy[:, 1:-1, :]
    return grad


def _lattice_count(grid: GridSpec, center, radius: float) -> int:
    """Number of lattice sites (extended beyond the grid) inside the disk."""
    ci, cj = grid.to_pixel(*center)
    ri, rj = radius / grid.dx, radius / grid.dy
    js = np.arange(math.ceil(cj - rj), math.floor(cj + rj) + 1)
    dy = (js - cj) / rj
    half = np.sqrt(np.clip(1.0 - dy**2, 0.0, None)) * ri
    lo = np.ceil(ci - half)
    hi = np.floor(ci + half)
    return int(np.sum(np.maximum(hi - lo + 1, 0)))


def disk_mask(grid: GridSpec, center, radius: float) -> np.ndarray:
    x, y = grid.coords()
    return (x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius**2


def skyrmion_number(
    sd: SkyrmionDensityField,
    center=(0.0, 0.0),
    radius: float = 1.0,
    min_coverage: float = MIN_COVERAGE,
) -> AnalysisResult:
    """Midpoint-rule integral ``(1/4pi) * sum sigma_z dx dy`` over a disk.

    Raises :class:`CoverageError` when fewer than ``min_coverage`` of the
    lattice sites inside the disk carry a valid density.
    """
    g = sd.grid
    if not radius > 2.0 * max(g.dx, g.dy):
        raise SkyrmionError(f"integration radius {radius} must exceed two pixel pitches")
    inside = disk_mask(g, center, radius) & sd.mask
    count = int(inside.sum())
    coverage = count / _lattice_count(g, center, radius)
    if coverage < min_coverage:
        raise CoverageError(coverage, radius)
    n = float(np.sum(sd.sigma_z[inside])) * g.dx * g.dy / (4.0 * math.pi)
    return AnalysisResult(
        n_skyrmion=n,
        uncertainty=0.0,
        integration_radius=float(radius),
        center=tuple(center),
        pixel_count=count,
        coverage=min(coverage, 1.0),
    )


def auto_radius(total: np.ndarray, grid: GridSpec, center=(0.0, 0.0), eta: float = 1e-3) -> float:
    """Radius where the beam has become dark.

    Smallest annulus radius ``r*`` beyond which the azimuthally averaged
    total intensity stays below ``eta`` times its peak, out to the largest
    circle inside the grid; that circle must reach at least ``1.2 r*``.
    """
    if not 0.0 < eta < 1.0:
        raise SkyrmionError(f"eta must lie in (0, 1), got {eta}")
    r, prof = radial_profile(total, grid, center)
    x, y = grid.xs(), grid.ys()
    r_max = min(center[0] - x[0], x[-1] - center[0], center[1] - y[0], y[-1] - center[1])
    keep = r <= r_max
    r, prof = r[keep], prof[keep]
    if len(prof) == 0 or prof.max() <= 0:
        raise SkyrmionError("total intensity is dark; no integration radius")
    above = np.nonzero(prof >= eta * prof.max())[0]
    # dark gaps between rings do not count: the beam must stay dark to the edge
    k = above[-1] + 1
    if k < len(r) and 1.2 * r[k] <= r[-1]:
        return float(r[k])
    raise SkyrmionError(f"intensity never stays below eta={eta:g} of its peak inside the grid; enlarge the extent")


def radius_sweep(sd: SkyrmionDensityField, center, radii, min_coverage: float = MIN_COVERAGE) -> list:
    """Skyrmion number at each of an ascending list of radii."""
    radii = list(radii)
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise SkyrmionError("radii must be ascending")
    return [skyrmion_number(sd, center, r, min_coverage) for r in radii]
