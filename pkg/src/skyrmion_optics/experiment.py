"""Measurement I/O, centre calibration, noise estimation and the full
intensity-to-skyrmion-number pipeline."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import CoverageError, MeasurementError, SkyrmionError, StageError
from .field import GridSpec
from .polarimetry import AXES, KEYS, MeasurementSet, PoincareField, reconstruct
from .topology import (
    AnalysisResult,
    SkyrmionDensityField,
    auto_radius,
    density_sensitivity,
    disk_mask,
    skyrmion_density,
    skyrmion_number,
)

FILE_STEM = {k: "I" + k for k in KEYS}

# registration shifts beyond this are reported as suspicious
LARGE_OFFSET_PX = 3.0


# ---------------------------------------------------------------------------
# on-disk measurement sets


def _write_pgm(path: Path, img: np.ndarray, bit_depth: int) -> None:
    top = 2**bit_depth - 1
    dtype = ">u2" if bit_depth == 16 else "u1"
    rows, cols = img.shape
    header = f"P5\n{cols} {rows}\n{top}\n".encode("ascii")
    path.write_bytes(header + np.asarray(img, dtype=dtype).tobytes())


def _read_pgm(path: Path, name: str) -> tuple[np.ndarray, int]:
    data = path.read_bytes()
    tokens = []
    pos = 0
    token_re = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")
    for _ in range(4):
        m = token_re.match(data, pos)
        if m is None:
            raise MeasurementError(name, "truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise MeasurementError(name, f"not a binary PGM (magic {tokens[0]!r})")
    cols, rows, top = (int(t) for t in tokens[1:])
    pos += 1  # single whitespace byte after maxval
    dtype = ">u2" if top > 255 else "u1"
    count = rows * cols
    if len(data) - pos < count * np.dtype(dtype).itemsize:
        raise MeasurementError(name, "truncated PGM pixel data")
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    return raw.reshape(rows, cols).astype(float), top


def save_measurement_set(ms: MeasurementSet, directory: str | Path, fmt: str = "csv") -> Path:
    """Write ``Ix1 .. Iz2`` images and ``meta.json`` into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    if fmt == "pgm" and ms.bit_depth is None:
        raise SkyrmionError("PGM output needs a quantized measurement set")
    for k in KEYS:
        if fmt == "pgm":
            _write_pgm(d / f"{FILE_STEM[k]}.pgm", ms[k], ms.bit_depth)
        elif fmt == "csv":
            np.savetxt(d / f"{FILE_STEM[k]}.csv", ms[k], delimiter=",", fmt="%.17g")
        else:
            raise SkyrmionError(f"unknown image format {fmt!r}")
    meta = {"grid": ms.grid.to_dict(), "bit_depth": ms.bit_depth, "format": fmt, "provenance": ms.meta}
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=float))
    return d


def ingest(dir_path: str | Path) -> MeasurementSet:
    """Load and validate a measurement directory (CSV or PGM images)."""
    d = Path(dir_path)
    if not d.is_dir():
        raise MeasurementError(str(d), "no such measurement directory")
    meta_path = d / "meta.json"
    if not meta_path.exists():
        raise MeasurementError("meta.json", f"missing in {d}")
    try:
        meta = json.loads(meta_path.read_text())
        grid = GridSpec(**meta["grid"])
        bit_depth = meta.get("bit_depth")
    except (ValueError, KeyError, TypeError) as exc:
        raise MeasurementError("meta.json", f"malformed metadata ({exc})") from exc

    images = {}
    for k in KEYS:
        stem = FILE_STEM[k]
        csv, pgm = d / f"{stem}.csv", d / f"{stem}.pgm"
        if csv.exists():
            try:
                img = np.loadtxt(csv, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise MeasurementError(stem, f"unreadable CSV ({exc})") from exc
        elif pgm.exists():
            img, top = _read_pgm(pgm, stem)
            if bit_depth is None or top != 2**bit_depth - 1:
                raise MeasurementError(stem, f"PGM maxval {top} does not match bit depth {bit_depth}")
        else:
            raise MeasurementError(stem, f"image missing from {d}")
        if img.shape != grid.shape:
            raise MeasurementError(stem, f"shape {img.shape} does not match grid {grid.shape}")
        if np.any(img < 0):
            raise MeasurementError(stem, "negative intensities")
        images[k] = img
    try:
        return MeasurementSet(grid, images, bit_depth, meta.get("provenance", {}))
    except SkyrmionError as exc:
        raise MeasurementError("meta.json", str(exc)) from exc


# ---------------------------------------------------------------------------
# centre calibration


@dataclass
class CalibrationReport:
    offsets: dict
    reference: str
    residual: float
    method: str = "centroid>10%"
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def centroid(img: np.ndarray, threshold: float = 0.1) -> tuple[float, float]:
    """Intensity-weighted ``(i, j)`` centroid over pixels above ``threshold * peak``."""
    peak = float(img.max())
    if peak <= 0:
        raise SkyrmionError("centroid of an all-dark image is undefined")
    w = np.where(img >= threshold * peak, img, 0.0)
    total = w.sum()
    jj, ii = np.indices(img.shape)
    return float((w * ii).sum() / total), float((w * jj).sum() / total)


def calibrate_centers(ms: MeasurementSet, reference: str = "z2", threshold: float = 0.1):
    """Translate every image so its centroid lands on the reference centroid.

    Returns the registered set and a :class:`CalibrationReport` whose offsets
    are each image's centroid minus the reference centroid, in pixels. An
    all-dark reference is an error; any other all-dark image carries no
    information to register and is left in place (listed in ``skipped``).
    """
    if reference not in KEYS:
        raise SkyrmionError(f"unknown reference image {reference!r}")
    g = ms.grid
    try:
        ri, rj = centroid(ms[reference], threshold)
    except SkyrmionError as exc:
        raise SkyrmionError(f"reference image {reference}: {exc}") from exc
    offsets, out, skipped = {}, {}, []
    for k in KEYS:
        if k == reference or not ms[k].max() > 0:
            if k != reference:
                skipped.append(k)
            offsets[k] = (0.0, 0.0)
            out[k] = ms[k].copy()
            continue
        ci, cj = centroid(ms[k], threshold)
        oi, oj = ci - ri, cj - rj
        if abs(oi) > g.nx / 4 or abs(oj) > g.ny / 4:
            raise SkyrmionError(f"image {k} is offset by ({oi:.2f}, {oj:.2f}) px, more than a quarter of the grid")
        offsets[k] = (oi, oj)
        out[k] = np.clip(ndimage.shift(ms[k], (-oj, -oi), order=1, mode="constant", cval=0.0), 0.0, None)
    residual = 0.0
    for k in KEYS:
        if k not in skipped:
            ci, cj = centroid(out[k], threshold)
            residual = max(residual, math.hypot(ci - ri, cj - rj))
    meta = dict(ms.meta)
    meta["reference_center_px"] = [ri, rj]
    registered = MeasurementSet(g, out, None, meta)
    return registered, CalibrationReport(offsets=offsets, reference=reference, residual=residual, skipped=skipped)


# ---------------------------------------------------------------------------
# noise estimate


@dataclass(eq=False)
class UncertaintyMap:
    grid: GridSpec
    sigma: dict  # axis -> per-pixel std of M_axis (NaN off-mask)
    mask: np.ndarray
    sigma_intensity: dict = field(default_factory=dict)


def local_noise(img: np.ndarray, window: int = 5) -> np.ndarray:
    """Standard deviation of ``img`` about a least-squares plane fitted in
    each ``window x window`` neighbourhood."""
    h = window // 2
    u = np.arange(-h, h + 1, dtype=float)
    ones = np.ones(window)
    n = window * window
    suu = window * float(np.sum(u * u))
    kx = np.outer(ones, u)
    ky = np.outer(u, ones)
    box = np.ones((window, window))
    c = img - img.mean()
    s0 = ndimage.correlate(c, box, mode="reflect")
    sx = ndimage.correlate(c, kx, mode="reflect")
    sy = ndimage.correlate(c, ky, mode="reflect")
    s2 = ndimage.correlate(c * c, box, mode="reflect")
    ss = s2 - s0**2 / n - sx**2 / suu - sy**2 / suu
    return np.sqrt(np.clip(ss, 0.0, None) / (n - 3))


def estimate_uncertainty(ms: MeasurementSet, window: int = 5, mask: np.ndarray | None = None,
                         floor_rel: float = 1e-3) -> UncertaintyMap:
    """Per-pixel standard deviation of each Poincare component.

    Intensity noise comes from :func:`local_noise`; it is carried through
    ``M = (I1 - I2) / (I1 + I2)`` to first order. ``mask`` defaults to the
    reconstruction mask at ``floor_rel``.
    """
    g = ms.grid
    if window < 3 or window % 2 == 0:
        raise SkyrmionError(f"window must be odd and >= 3, got {window}")
    if window > min(g.nx, g.ny):
        raise SkyrmionError(f"window {window} is larger than the grid")
    if mask is None:
        den = ms.total()
        mask = (den > 0) & (den >= floor_rel * den.max())
    s_int = {k: local_noise(ms[k], window) for k in KEYS}
    sig = {}
    for axis in AXES:
        i1, i2 = ms[axis + "1"], ms[axis + "2"]
        s1, s2 = s_int[axis + "1"], s_int[axis + "2"]
        den = (i1 + i2) ** 2
        ok = mask & (den > 0)
        out = np.full(g.shape, np.nan)
        out[ok] = 2.0 * np.sqrt(i2[ok] ** 2 * s1[ok] ** 2 + i1[ok] ** 2 * s2[ok] ** 2) / den[ok]
        sig[axis] = out
    return UncertaintyMap(g, sig, mask, s_int)


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class AnalysisOptions:
    """Pipeline settings.

    ``floor_rel`` and ``eta`` default to ``None``: they are then derived from
    the dark level of the data (see :func:`dark_thresholds`).
    """

    floor_rel: float | None = None
    eta: float | None = None
    window: int = 5
    radius: float | None = None
    radii: list | None = None
    reference: str = "z2"
    calibrate: bool = True
    snr: float = 5.0
    eta_min: float = 1e-6
    floor_ratio: float = 1e-3


def dark_level(ms: MeasurementSet) -> float:
    """Mean plus standard deviation of the total intensity on the grid border,
    relative to the brightest total-intensity pixel. Quantized sets never
    report less than the rounding noise of one count."""
    tot = ms.total()
    if not tot.max() > 0:
        return 1.0
    b = max(2, min(tot.shape) // 20)
    frame = np.concatenate([tot[:b].ravel(), tot[-b:].ravel(), tot[b:-b, :b].ravel(), tot[b:-b, -b:].ravel()])
    level = float(frame.mean() + frame.std())
    if ms.bit_depth is not None or ms.meta.get("degrade"):
        level = max(level, math.sqrt(2.0 / 12.0))
    return level / float(tot.max())


def dark_thresholds(ms: MeasurementSet, opts: AnalysisOptions) -> tuple[float, float]:
    """Resolve ``(eta, floor_rel)`` for a measurement set."""
    eta = opts.eta
    if eta is None:
        eta = min(0.5, max(opts.eta_min, opts.snr * dark_level(ms)))
    floor = opts.floor_rel if opts.floor_rel is not None else eta * opts.floor_ratio
    return eta, floor


@dataclass(eq=False)
class Artifacts:
    measurement: MeasurementSet
    calibration: CalibrationReport | None
    poincare: PoincareField
    density: SkyrmionDensityField
    uncertainty: UncertaintyMap
    sweep: list
    eta: float
    floor_rel: float
    warnings: list = field(default_factory=list)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except SkyrmionError as exc:
        raise StageError(name, exc) from exc


def _sweep(sd, center, r_star, opts) -> list:
    if opts.radii is not None:
        radii = sorted(opts.radii)
    else:
        radii = list(np.linspace(0.1, 1.5, 29) * r_star)
    out = []
    for r in radii:
        try:
            out.append(skyrmion_number(sd, center, r))
        except CoverageError:
            break
        except SkyrmionError:
            continue
    return out


def analyze(ms: MeasurementSet, opts: AnalysisOptions | None = None):
    """Calibrate, reconstruct, differentiate and integrate.

    Returns
    -------
    result : AnalysisResult
    artifacts : Artifacts
        Intermediate fields, the radius sweep and the resolved thresholds.
    """
    opts = opts or AnalysisOptions()
    g = ms.grid
    eta, floor = dark_thresholds(ms, opts)
    warnings = []

    report = None
    if opts.calibrate:
        ms, report = _stage("calibrate_centers", calibrate_centers, ms, opts.reference)
        ri, rj = ms.meta["reference_center_px"]
        center = g.to_physical(ri, rj)
        worst = max(report.offsets, key=lambda k: math.hypot(*report.offsets[k]))
        if math.hypot(*report.offsets[worst]) > LARGE_OFFSET_PX:
            warnings.append(
                f"calibration moved image {worst} by {math.hypot(*report.offsets[worst]):.1f} px; centroid "
                "registration assumes centred frames (single-lobe frames, e.g. delta-l = 1, need calibrate=False)"
            )
    else:
        center = (g.cx, g.cy)

    pf = _stage("reconstruct", reconstruct, ms, floor)
    sd = _stage("skyrmion_density", skyrmion_density, pf)
    umap = _stage("estimate_uncertainty", estimate_uncertainty, ms, opts.window, pf.mask)
    r_star = _stage("auto_radius", auto_radius, ms.total(), g, center, eta)
    radius = opts.radius if opts.radius is not None else r_star
    if radius < r_star:
        warnings.append(f"integration radius {radius:.4g} lies inside the auto radius {r_star:.4g}; N is truncated")
    res = _stage("skyrmion_number", skyrmion_number, sd, center, radius)
    if radius < r_star:
        warnings[-1] += f" (disk coverage {res.coverage:.1%})"
    if res.coverage < 0.995:
        warnings.append(f"disk coverage {res.coverage:.1%}")

    # truncation estimate, falling back inward when the outer disk is masked
    try:
        other = skyrmion_number(sd, center, 1.1 * radius)
    except SkyrmionError:
        try:
            other = skyrmion_number(sd, center, radius / 1.1)
        except SkyrmionError:
            other = res
            warnings.append("truncation error could not be estimated")
    trunc = abs(other.n_skyrmion - res.n_skyrmion)

    weights = (disk_mask(g, center, radius) & sd.mask).astype(float)
    grad = density_sensitivity(pf, weights)
    s = np.stack([np.nan_to_num(umap.sigma[a]) for a in AXES])
    prop = float(np.sqrt(np.sum((grad * s) ** 2))) * g.dx * g.dy / (4.0 * math.pi)

    res.uncertainty = math.hypot(trunc, prop)
    res.provenance = {
        "package": __package__,
        "options": asdict(opts),
        "eta": eta,
        "floor_rel": floor,
        "auto_radius": r_star,
        "truncation_error": trunc,
        "propagated_error": prop,
        "grid": g.to_dict(),
        "input": ms.meta,
        "warnings": warnings,
    }
    sweep = _sweep(sd, center, r_star, opts)
    return res, Artifacts(ms, report, pf, sd, umap, sweep, eta, floor, warnings)


def write_artifacts(outdir: str | Path, result: AnalysisResult, art: Artifacts) -> Path:
    """Write result.json, Poincare/density dumps, the radius sweep and calibration.json."""
    d = Path(outdir)
    d.mkdir(parents=True, exist_ok=True)
    (d / "result.json").write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True, default=float))
    for axis, comp in zip(AXES, (art.poincare.mx, art.poincare.my, art.poincare.mz)):
        np.savetxt(d / f"poincare_{axis}.csv", np.where(art.poincare.mask, comp, np.nan), delimiter=",", fmt="%.17g")
    np.savetxt(d / "sigma_z.csv", art.density.sigma_z, delimiter=",", fmt="%.17g")
    (d / "sigma_z.json").write_text(
        json.dumps({"grid": art.density.grid.to_dict(), "valid_pixels": int(art.density.mask.sum())}, indent=2, sort_keys=True)
    )
    rows = [(r.integration_radius, r.n_skyrmion, r.uncertainty, r.pixel_count) for r in art.sweep]
    np.savetxt(
        d / "radius_sweep.csv",
        np.array(rows, dtype=float).reshape(-1, 4),
        delimiter=",",
        fmt=["%.17g", "%.17g", "%.17g", "%d"],
        header="radius,N,uncertainty,pixel_count",
        comments="",
    )
    calib = art.calibration.to_dict() if art.calibration else None
    (d / "calibration.json").write_text(json.dumps(calib, indent=2, sort_keys=True, default=float))
    return d
