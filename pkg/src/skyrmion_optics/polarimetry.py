"""Six-projection polarimetry: simulated CCD frames and Poincare-vector
reconstruction from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import SkyrmionError
from .field import GridSpec, VectorBeam

KEYS = ("x1", "x2", "y1", "y2", "z1", "z2")
AXES = ("x", "y", "z")

_S = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class BasisConvention:
    """Analyzer states as ``(h, v)`` Jones vectors and their pairing with
    the Pauli operators."""

    states: dict = field(
        default_factory=lambda: {
            "D": (_S, _S),
            "A": (_S, -_S),
            "L": (_S, 1j * _S),
            "R": (_S, -1j * _S),
            "H": (1.0, 0.0),
            "V": (0.0, 1.0),
        }
    )
    pairs: dict = field(
        default_factory=lambda: {
            "x1": "D",
            "x2": "A",
            "y1": "L",
            "y2": "R",
            "z1": "H",
            "z2": "V",
        }
    )

    def analyzer(self, key: str) -> tuple[complex, complex]:
        return self.states[self.pairs[key]]


@dataclass(eq=False)
class MeasurementSet:
    """Six intensity images keyed ``x1 .. z2`` on a common grid."""

    grid: GridSpec
    images: dict
    bit_depth: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [k for k in KEYS if k not in self.images]
        if missing:
            raise SkyrmionError(f"measurement set is missing images {missing}")
        for k in KEYS:
            img = np.asarray(self.images[k], dtype=float)
            if img.shape != self.grid.shape:
                raise SkyrmionError(f"image {k} has shape {img.shape}, grid is {self.grid.shape}")
            if np.any(img < 0) or not np.all(np.isfinite(img)):
                raise SkyrmionError(f"image {k} contains negative or non-finite values")
            self.images[k] = img
        if self.bit_depth is not None:
            if self.bit_depth not in (8, 16):
                raise SkyrmionError(f"bit depth must be 8 or 16, got {self.bit_depth}")
            top = 2**self.bit_depth - 1
            for k in KEYS:
                img = self.images[k]
                if np.any(img > top) or np.any(img != np.round(img)):
                    raise SkyrmionError(f"image {k} is not a valid {self.bit_depth}-bit frame")

    def __getitem__(self, key: str) -> np.ndarray:
        return self.images[key]

    def pair_sum(self, axis: str) -> np.ndarray:
        return self.images[axis + "1"] + self.images[axis + "2"]

    def total(self) -> np.ndarray:
        """Total intensity estimated from the ``z`` analyzer pair."""
        return self.pair_sum("z")

    def scaled(self, c: float) -> "MeasurementSet":
        return MeasurementSet(self.grid, {k: c * self.images[k] for k in KEYS}, None, dict(self.meta))


@dataclass(eq=False)
class PoincareField:
    grid: GridSpec
    mx: np.ndarray
    my: np.ndarray
    mz: np.ndarray
    mask: np.ndarray

    def stack(self) -> np.ndarray:
        return np.stack([self.mx, self.my, self.mz])

    def norm(self) -> np.ndarray:
        return np.sqrt(self.mx**2 + self.my**2 + self.mz**2)


def project_intensities(beam: VectorBeam, conv: BasisConvention = BasisConvention()) -> MeasurementSet:
    """Intensity behind each of the six analyzers.

    The frames carry the local beam intensity, ``I_s = |<s|E>|^2`` with the
    unnormalized field ``E``, so each analyzer pair sums to ``|u0|^2 + |u1|^2``.
    """
    eh, ev = beam.hv_fields()
    images = {}
    for key in KEYS:
        sh, sv = conv.analyzer(key)
        images[key] = np.abs(np.conj(sh) * eh + np.conj(sv) * ev) ** 2
    meta = {"source": "project_intensities", "theta0": beam.theta0, "basis": beam.basis}
    meta.update(beam.meta)
    return MeasurementSet(beam.grid, images, None, meta)


def poincare_expectation(beam: VectorBeam) -> PoincareField:
    """Direct expectation ``<psi|sigma|psi>`` of the normalized local state."""
    h, v, valid = beam.hv_state()
    hv = np.conj(h) * v
    return PoincareField(
        grid=beam.grid,
        mx=2.0 * hv.real,
        my=2.0 * hv.imag,
        mz=np.abs(h) ** 2 - np.abs(v) ** 2,
        mask=valid,
    )


def degrade(
    ms: MeasurementSet,
    noise_rel: float = 0.0,
    bit_depth: int = 16,
    shift_px: dict | None = None,
    seed: int = 0,
) -> MeasurementSet:
    """Model CCD imperfections: per-image shift, Gaussian noise, clamp, quantize.

    Parameters
    ----------
    noise_rel : float
        Noise standard deviation as a fraction of each image's peak.
    bit_depth : int
        8 or 16. All six frames share one scale so that analyzer ratios
        survive quantization.
    shift_px : dict, optional
        Maps image key to an ``(sx, sy)`` translation in pixels.
    seed : int
        Seed for the noise generator; output is deterministic given it.
    """
    if noise_rel < 0 or not math.isfinite(noise_rel):
        raise SkyrmionError(f"noise_rel must be non-negative, got {noise_rel}")
    if bit_depth not in (8, 16):
        raise SkyrmionError(f"bit depth must be 8 or 16, got {bit_depth}")
    shift_px = shift_px or {}
    g = ms.grid
    for key, (sx, sy) in shift_px.items():
        if key not in KEYS:
            raise SkyrmionError(f"unknown image key {key!r} in shifts")
        if abs(sx) > g.nx / 4 or abs(sy) > g.ny / 4:
            raise SkyrmionError(f"shift {(sx, sy)} on {key} exceeds a quarter of the grid")

    rng = np.random.default_rng(seed)
    out = {}
    for key in KEYS:
        img = ms.images[key]
        sx, sy = shift_px.get(key, (0.0, 0.0))
        if sx or sy:
            img = ndimage.shift(img, (sy, sx), order=1, mode="constant", cval=0.0)
        if noise_rel > 0:
            img = img + rng.normal(0.0, noise_rel * img.max(), img.shape)
        out[key] = np.clip(img, 0.0, None)

    top = 2**bit_depth - 1
    peak = max(float(out[k].max()) for k in KEYS)
    scale = top / peak if peak > 0 else 1.0
    for key in KEYS:
        out[key] = np.round(out[key] * scale)

    meta = dict(ms.meta)
    meta["degrade"] = {
        "noise_rel": noise_rel,
        "bit_depth": bit_depth,
        "shift_px": {k: list(map(float, v)) for k, v in shift_px.items()},
        "seed": seed,
        "intensity_per_count": 1.0 / scale,
    }
    return MeasurementSet(g, out, bit_depth, meta)


def reconstruct(ms: MeasurementSet, floor_rel: float = 1e-3) -> PoincareField:
    """Poincare vector from normalized analyzer differences.

    ``M_i = (I_i1 - I_i2) / (I_i1 + I_i2)``, clamped to ``[-1, 1]``. Pixels
    whose ``z``-pair sum is below ``floor_rel`` times its maximum are masked.
    Inside the mask a component whose own pair sum is zero is set to 0.
    """
    den_z = ms.pair_sum("z")
    top = float(den_z.max())
    mask = (den_z > 0) & (den_z >= floor_rel * top)
    if top <= 0 or not mask.any():
        raise SkyrmionError("empty mask: the measurement set is dark")
    comps = []
    for axis in AXES:
        den = ms.pair_sum(axis)
        num = ms[axis + "1"] - ms[axis + "2"]
        ok = mask & (den > 0)
        m = np.zeros(den.shape)
        m[ok] = np.clip(num[ok] / den[ok], -1.0, 1.0)
        comps.append(m)
    return PoincareField(ms.grid, comps[0], comps[1], comps[2], mask)


class ThetaProfile(NamedTuple):
    radius: np.ndarray
    theta: np.ndarray


def radial_profile(img: np.ndarray, grid: GridSpec, center=(0.0, 0.0), mask=None, bin_width=None):
    """Azimuthal average of ``img`` in annuli of width ``bin_width``.

    Returns bin-centre radii and means; empty bins are dropped.
    """
    x, y = grid.coords()
    r = np.hypot(x - center[0], y - center[1])
    h = bin_width or min(grid.dx, grid.dy)
    idx = np.floor(r / h).astype(int)
    sel = np.ones(img.shape, bool) if mask is None else mask
    counts = np.bincount(idx[sel], minlength=idx.max() + 1)
    sums = np.bincount(idx[sel], weights=img[sel], minlength=idx.max() + 1)
    keep = counts > 0
    radii = (np.arange(len(counts)) + 0.5) * h
    return radii[keep], sums[keep] / counts[keep]


def sample_circle(img: np.ndarray, grid: GridSpec, center, radius: float, n: int) -> np.ndarray:
    """Bilinear samples of ``img`` at ``n`` equispaced angles on a circle."""
    phi = 2.0 * np.pi * np.arange(n) / n
    i, j = grid.to_pixel(center[0] + radius * np.cos(phi), center[1] + radius * np.sin(phi))
    return ndimage.map_coordinates(img, [j, i], order=1, mode="nearest")


def _circle_points(grid: GridSpec, center, radius: float) -> int:
    return max(256, int(math.ceil(2.0 * math.pi * radius / (0.25 * min(grid.dx, grid.dy)))))


def winding_number(mx: np.ndarray, my: np.ndarray) -> int:
    """Integer winding of ``atan2(my, mx)`` along a closed, ordered loop."""
    phase = np.arctan2(my, mx)
    steps = np.diff(np.append(phase, phase[0]))
    wrapped = np.angle(np.exp(1j * steps))
    return int(round(float(np.sum(wrapped)) / (2.0 * math.pi)))


def equator_radius(pf: PoincareField, center=(0.0, 0.0)) -> float:
    """Smallest radius at which the azimuthally averaged ``M_z`` changes sign."""
    r, mz = radial_profile(pf.mz, pf.grid, center, pf.mask)
    flips = np.nonzero(np.sign(mz[:-1]) * np.sign(mz[1:]) < 0)[0]
    if len(flips) == 0:
        raise SkyrmionError("M_z never changes sign")
    k = flips[0]
    # linear interpolation between the bracketing bins
    return float(r[k] + (r[k + 1] - r[k]) * mz[k] / (mz[k] - mz[k + 1]))


def spherical_decompose(pf: PoincareField, loop_radius: float, center=(0.0, 0.0)):
    """Polar angle profile and in-plane winding of the Poincare texture.

    Returns
    -------
    profile : ThetaProfile
        ``arccos(M_z)`` averaged over annuli of one pixel pitch.
    winding : int
        Turns of ``atan2(M_y, M_x)`` along the circle of ``loop_radius``.
    """
    g = pf.grid
    theta = np.arccos(np.clip(pf.mz, -1.0, 1.0))
    profile = ThetaProfile(*radial_profile(theta, g, center, pf.mask))

    n = _circle_points(g, center, loop_radius)
    phi = 2.0 * np.pi * np.arange(n) / n
    i, j = g.to_pixel(center[0] + loop_radius * np.cos(phi), center[1] + loop_radius * np.sin(phi))
    i0, j0 = np.floor(i).astype(int), np.floor(j).astype(int)
    if i0.min() < 0 or j0.min() < 0 or i0.max() + 1 >= g.nx or j0.max() + 1 >= g.ny:
        raise SkyrmionError(f"loop of radius {loop_radius} leaves the grid")
    corners = pf.mask[j0, i0] & pf.mask[j0, i0 + 1] & pf.mask[j0 + 1, i0] & pf.mask[j0 + 1, i0 + 1]
    if not corners.all():
        raise SkyrmionError(f"loop of radius {loop_radius} crosses masked pixels")
    mx = ndimage.map_coordinates(pf.mx, [j, i], order=1)
    my = ndimage.map_coordinates(pf.my, [j, i], order=1)
    if np.min(np.abs(mx) + np.abs(my)) < 1e-9:
        raise SkyrmionError(f"loop of radius {loop_radius} passes through a pole of the sphere")
    return profile, winding_number(mx, my)
