"""Laguerre-Gaussian modes and two-component vector beams on a sampled grid.

All lengths are expressed in units of the beam waist ``w0`` unless stated
otherwise; the wavelength only enters through the Rayleigh range.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import SkyrmionError

# 780 nm light with a 0.5 mm waist, expressed in waist units.
DEFAULT_WAVELENGTH = 780e-9 / 0.5e-3


@dataclass(frozen=True)
class GridSpec:
    """Uniform 2-D sampling grid.

    Arrays sampled on the grid have shape ``(ny, nx)``: row ``j`` holds the
    pixels with ``y = cy + (j - (ny - 1) / 2) * dy`` and column ``i`` those
    with ``x = cx + (i - (nx - 1) / 2) * dx``.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    cx: float = 0.0
    cy: float = 0.0

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise SkyrmionError(f"grid needs at least 8x8 pixels, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise SkyrmionError(f"pixel pitch must be positive, got dx={self.dx}, dy={self.dy}")
        for name in ("dx", "dy", "cx", "cy"):
            if not math.isfinite(getattr(self, name)):
                raise SkyrmionError(f"grid parameter {name} is not finite")

    @classmethod
    def square(cls, n: int, extent: float) -> "GridSpec":
        """``n x n`` grid whose outermost pixel centres sit at ``+-extent``."""
        d = 2.0 * extent / (n - 1)
        return cls(nx=n, ny=n, dx=d, dy=d)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def xs(self) -> np.ndarray:
        return self.cx + (np.arange(self.nx) - (self.nx - 1) / 2) * self.dx

    def ys(self) -> np.ndarray:
        return self.cy + (np.arange(self.ny) - (self.ny - 1) / 2) * self.dy

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical ``(X, Y)`` coordinate arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.xs(), self.ys(), indexing="xy")

    def to_pixel(self, x: float, y: float) -> tuple[float, float]:
        """Fractional ``(i, j)`` pixel indices of a physical point."""
        i = (x - self.cx) / self.dx + (self.nx - 1) / 2
        j = (y - self.cy) / self.dy + (self.ny - 1) / 2
        return i, j

    def to_physical(self, i: float, j: float) -> tuple[float, float]:
        x = self.cx + (i - (self.nx - 1) / 2) * self.dx
        y = self.cy + (j - (self.ny - 1) / 2) * self.dy
        return x, y

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LGModeSpec:
    """Parameters of a single ``p = 0`` Laguerre-Gaussian mode."""

    l: int
    p: int = 0
    w0: float = 1.0
    wavelength: float = DEFAULT_WAVELENGTH
    z: float = 0.0

    def __post_init__(self):
        if self.p != 0:
            raise SkyrmionError(f"only p = 0 modes are supported, got p={self.p}")
        if int(self.l) != self.l:
            raise SkyrmionError(f"azimuthal index must be an integer, got {self.l}")
        for name in ("w0", "wavelength", "z"):
            if not math.isfinite(getattr(self, name)):
                raise SkyrmionError(f"mode parameter {name} is not finite")
        if self.w0 <= 0 or self.wavelength <= 0:
            raise SkyrmionError("w0 and wavelength must be positive")

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.w0**2 / self.wavelength

    @property
    def waist(self) -> float:
        """Beam radius ``w(z)``."""
        return self.w0 * math.sqrt(1.0 + (self.z / self.rayleigh_range) ** 2)

    @property
    def gouy(self) -> float:
        return math.atan(self.z / self.rayleigh_range)

    @property
    def curvature(self) -> float:
        """Inverse wavefront radius ``1/R(z)``; zero at the waist."""
        if self.z == 0:
            return 0.0
        zr = self.rayleigh_range
        return 1.0 / (self.z * (1.0 + (zr / self.z) ** 2))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Optics:
    """Beam parameters shared by both components of a vector beam."""

    w0: float = 1.0
    wavelength: float = DEFAULT_WAVELENGTH
    z: float = 0.0

    def mode(self, l: int) -> LGModeSpec:
        return LGModeSpec(l=l, w0=self.w0, wavelength=self.wavelength, z=self.z)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    amp: np.ndarray
    mode: LGModeSpec | None = None

    def __post_init__(self):
        if self.amp.shape != self.grid.shape:
            raise SkyrmionError(f"amplitude shape {self.amp.shape} does not match grid {self.grid.shape}")

    def intensity(self) -> np.ndarray:
        return np.abs(self.amp) ** 2

    def power(self) -> float:
        """Midpoint-rule integral of ``|amp|^2``."""
        return float(np.sum(self.intensity()) * self.grid.dx * self.grid.dy)


def lg_mode(spec: LGModeSpec, grid: GridSpec) -> ScalarField:
    """Sample a normalized ``p = 0`` Laguerre-Gaussian mode.

    Uses the closed form

        u(r, phi, z) = sqrt(2 / (pi |l|!)) / w * (sqrt(2) r / w)^|l| * exp(-r^2 / w^2)
                       * exp(i l phi) * exp(i k r^2 / (2 R)) * exp(-i (|l| + 1) zeta)

    with ``phi = atan2(y, x)``. At ``r = 0`` the amplitude of a vortex mode is
    exactly zero.
    """
    x, y = grid.coords()
    r2 = x**2 + y**2
    w = spec.waist
    al = abs(int(spec.l))
    k = 2.0 * math.pi / spec.wavelength

    norm = math.sqrt(2.0 / (math.pi * math.factorial(al))) / w
    radial = norm * (2.0 * r2 / w**2) ** (al / 2.0) * np.exp(-r2 / w**2)
    phase = spec.l * np.arctan2(y, x) + 0.5 * k * r2 * spec.curvature - (al + 1) * spec.gouy
    return ScalarField(grid=grid, amp=radial * np.exp(1j * phase), mode=spec)


def default_extent(l_max: int, optics: Optics = Optics()) -> float:
    """Half-width of a grid holding an ``l_max`` beam out to where it is dark.

    The intensity ring of ``LG_l`` peaks at ``w * sqrt(l / 2)``; three beam
    radii beyond it the total intensity has fallen below ``1e-6`` of its
    peak for every ``l <= 12``. Never less than ``4 w``, so that a bare
    Gaussian still leaves room beyond its dark radius.
    """
    w = optics.mode(0).waist
    return w * max(4.0, math.sqrt(abs(l_max) / 2.0) + 3.0)


@dataclass(frozen=True, eq=False)
class VectorBeam:
    """Two LG components carried by orthonormal polarizations.

    ``comp_a`` (order ``l1``) rides on the polarization named by ``basis``
    (``"H"`` or ``"V"``), ``comp_b`` (order ``l2``) on the orthogonal one,
    with relative phase ``theta0``.
    """

    comp_a: ScalarField
    comp_b: ScalarField
    theta0: float = 0.0
    basis: str = "H"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.comp_a.grid != self.comp_b.grid:
            raise SkyrmionError("vector beam components live on different grids")
        if self.basis not in ("H", "V"):
            raise SkyrmionError(f"basis must be 'H' or 'V', got {self.basis!r}")

    @property
    def grid(self) -> GridSpec:
        return self.comp_a.grid

    def intensity(self) -> np.ndarray:
        """Local total intensity ``|u0|^2 + |u1|^2``."""
        return self.comp_a.intensity() + self.comp_b.intensity()

    def fields(self) -> tuple[np.ndarray, np.ndarray]:
        """Unnormalized state ``(u0, exp(i theta0) u1)`` over ``(|phi>, |phi_perp>)``."""
        return self.comp_a.amp, np.exp(1j * self.theta0) * self.comp_b.amp

    def state(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-pixel normalized state ``(a, b)`` and the validity mask.

        Invalid pixels (both components vanish) hold ``(0, 0)``.
        """
        ea, eb = self.fields()
        s = np.sqrt(self.intensity())
        valid = s > 0
        safe = np.where(valid, s, 1.0)
        a = np.where(valid, ea / safe, 0.0)
        b = np.where(valid, eb / safe, 0.0)
        return a, b, valid

    def hv_fields(self) -> tuple[np.ndarray, np.ndarray]:
        """Unnormalized field in the laboratory ``(H, V)`` basis."""
        ea, eb = self.fields()
        return (ea, eb) if self.basis == "H" else (eb, ea)

    def hv_state(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, b, valid = self.state()
        if self.basis == "H":
            return a, b, valid
        return b, a, valid


def build_beam(
    l1: int,
    l2: int,
    theta0: float = 0.0,
    grid: GridSpec | None = None,
    optics: Optics = Optics(),
    basis: str = "H",
) -> VectorBeam:
    """Superpose ``LG_l1`` on ``|phi>`` and ``exp(i theta0) LG_l2`` on ``|phi_perp>``.

    When ``grid`` is omitted a 512 x 512 grid with :func:`default_extent` is
    used. Orderings other than ``l2 > l1`` are accepted and recorded in
    ``meta["ordering"]``.
    """
    if grid is None:
        grid = GridSpec.square(512, default_extent(max(abs(l1), abs(l2)), optics))
    if l2 > l1:
        ordering = "l2>l1"
    elif l2 == l1:
        ordering = "l2==l1"
    else:
        ordering = "l2<l1"
    meta = {"l1": int(l1), "l2": int(l2), "ordering": ordering, "optics": asdict(optics)}
    return VectorBeam(
        comp_a=lg_mode(optics.mode(l1), grid),
        comp_b=lg_mode(optics.mode(l2), grid),
        theta0=float(theta0),
        basis=basis,
        meta=meta,
    )


def save_scalar_field(sf: ScalarField, path: str | Path) -> None:
    """Write ``sf`` as ``<path>.csv`` (re, im column pairs) plus ``<path>.json``."""
    path = Path(path)
    rows, cols = sf.amp.shape
    inter = np.empty((rows, 2 * cols))
    inter[:, 0::2] = sf.amp.real
    inter[:, 1::2] = sf.amp.imag
    np.savetxt(path.with_suffix(".csv"), inter, delimiter=",", fmt="%.17g")
    meta = {"grid": sf.grid.to_dict(), "mode": sf.mode.to_dict() if sf.mode else None}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def load_scalar_field(path: str | Path) -> ScalarField:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    grid = GridSpec(**meta["grid"])
    inter = np.loadtxt(path.with_suffix(".csv"), delimiter=",", ndmin=2)
    amp = inter[:, 0::2] + 1j * inter[:, 1::2]
    mode = LGModeSpec(**meta["mode"]) if meta.get("mode") else None
    return ScalarField(grid=grid, amp=amp, mode=mode)
