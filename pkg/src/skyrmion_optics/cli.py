"""Command-line front end: ``skyrm synth | analyze | reproduce``.

Exit codes: 0 success, 1 computation error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import MeasurementError, SkyrmionError
from .experiment import AnalysisOptions, analyze, ingest, save_measurement_set, write_artifacts
from .field import DEFAULT_WAVELENGTH, GridSpec, Optics, build_beam, default_extent
from .polarimetry import KEYS, degrade, project_intensities

DEFAULT_DELTAS = [2, 4, 6, 8, 10, 12]

# degradation applied by `reproduce` when the config leaves it unset
REPRO_NOISE = 1e-3
REPRO_BITS = 16
REPRO_SHIFT = 0.5


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Every knob of every subcommand; serializes to a single JSON document.

    ``extent`` defaults to :func:`default_extent` for the largest order.
    ``noise_rel``, ``bit_depth`` and ``shift`` left as ``None`` mean "ideal
    data" for ``synth`` and ``REPRO_*`` for the degraded half of ``reproduce``.
    """

    l1: int = 0
    l2: int = 2
    theta0: float = 0.0
    basis: str = "V"
    grid: int = 512
    extent: float | None = None
    waist: float = 1.0
    wavelength: float = DEFAULT_WAVELENGTH
    z: float = 0.0
    noise_rel: float | None = None
    bit_depth: int | None = None
    shift: float | None = None
    seed: int = 0
    floor_rel: float | None = None
    eta: float | None = None
    window: int = 5
    calibrate: bool = True
    radius: float | None = None
    radii: list | None = None
    deltas: list = field(default_factory=lambda: list(DEFAULT_DELTAS))
    format: str = "csv"
    input: str | None = None
    out: str | None = None
    force: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def optics(self) -> Optics:
        return Optics(w0=self.waist, wavelength=self.wavelength, z=self.z)

    def make_grid(self, l1: int, l2: int) -> GridSpec:
        ext = self.extent if self.extent is not None else default_extent(max(abs(l1), abs(l2)), self.optics())
        return GridSpec.square(self.grid, ext)

    def options(self) -> AnalysisOptions:
        return AnalysisOptions(
            floor_rel=self.floor_rel,
            eta=self.eta,
            window=self.window,
            radius=self.radius,
            radii=self.radii,
            calibrate=self.calibrate,
        )


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SKYRM_THREADS", "1")))
    except ValueError:
        return 1


def _random_shifts(max_shift: float, seed: int) -> dict:
    if not max_shift:
        return {}
    rng = np.random.default_rng([seed, 1])
    return {k: tuple(float(v) for v in rng.uniform(-max_shift, max_shift, 2)) for k in KEYS}


def simulate(cfg: RunConfig, l1: int, l2: int, noise=None, bits=None, shift=None, seed=None):
    """Ideal or degraded six-image set for one beam."""
    beam = build_beam(l1, l2, cfg.theta0, cfg.make_grid(l1, l2), cfg.optics(), cfg.basis)
    ms = project_intensities(beam)
    if noise or bits or shift:
        ms = degrade(ms, noise or 0.0, bits or 16, _random_shifts(shift or 0.0, seed), seed)
    return ms


def _prepare_out(path, force: bool) -> Path:
    if path is None:
        raise UsageError("--out is required")
    out = Path(path)
    if out.exists() and any(out.iterdir()) and not force:
        raise UsageError(f"output directory {out} exists; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo(cfg: RunConfig, out: Path) -> None:
    (out / "config.json").write_text(cfg.to_json())


def cmd_synth(cfg: RunConfig) -> int:
    out = _prepare_out(cfg.out, cfg.force)
    ms = simulate(cfg, cfg.l1, cfg.l2, cfg.noise_rel, cfg.bit_depth, cfg.shift, cfg.seed)
    fmt = cfg.format
    if fmt == "pgm" and ms.bit_depth is None:
        raise UsageError("PGM output needs --bits")
    save_measurement_set(ms, out, fmt)
    _echo(cfg, out)
    print(f"wrote {out} (l1={cfg.l1}, l2={cfg.l2}, grid={cfg.grid})")
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    if cfg.input is None:
        raise UsageError("analyze needs an input directory")
    ms = ingest(cfg.input)
    out = _prepare_out(cfg.out or str(Path(cfg.input) / "analysis"), cfg.force)
    res, art = analyze(ms, cfg.options())
    write_artifacts(out, res, art)
    _echo(cfg, out)
    for w in art.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(
        f"N = {res.n_skyrmion:.4f} ± {res.uncertainty:.4f}  "
        f"(|N| = {abs(res.n_skyrmion):.4f}, radius = {res.integration_radius:.4g}, pixels = {res.pixel_count})"
    )
    return 0


def _repro_row(cfg: RunConfig, dl: int) -> dict:
    row = {"delta_l": dl, "N_ideal": math.nan, "N_degraded": math.nan, "uncertainty": math.nan, "error": ""}
    l1, l2 = cfg.l1, cfg.l1 + dl
    noise = REPRO_NOISE if cfg.noise_rel is None else cfg.noise_rel
    bits = REPRO_BITS if cfg.bit_depth is None else cfg.bit_depth
    shift = REPRO_SHIFT if cfg.shift is None else cfg.shift
    try:
        row["N_ideal"] = analyze(simulate(cfg, l1, l2), cfg.options())[0].n_skyrmion
        res, _ = analyze(simulate(cfg, l1, l2, noise, bits, shift, cfg.seed + dl), cfg.options())
        row["N_degraded"] = res.n_skyrmion
        row["uncertainty"] = res.uncertainty
    except SkyrmionError as exc:
        row["error"] = str(exc)
    return row


GNUPLOT = """set datafile separator ','
set key top left
set xlabel 'Delta l'
set ylabel 'skyrmion number N'
set xrange [0:14]
set yrange [0:14]
set terminal pngcairo size 640,480
set output 'fig3.png'
plot x title 'N = Delta l' with lines lc rgb 'blue', \\
     'fig3.csv' every ::1 using 1:2 title 'ideal' with points pt 7 lc rgb 'black', \\
     'fig3.csv' every ::1 using 1:3:4 title 'degraded' with yerrorbars pt 7 lc rgb 'red'
"""


def cmd_reproduce(cfg: RunConfig) -> int:
    out = _prepare_out(cfg.out, cfg.force)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda dl: _repro_row(cfg, dl), cfg.deltas))
    lines = ["delta_l,N_ideal,N_degraded,uncertainty"]
    for r in rows:
        lines.append(f"{r['delta_l']},{r['N_ideal']:.17g},{r['N_degraded']:.17g},{r['uncertainty']:.17g}")
    (out / "fig3.csv").write_text("\n".join(lines) + "\n")
    (out / "fig3.gp").write_text(GNUPLOT)
    failures = {str(r["delta_l"]): r["error"] for r in rows if r["error"]}
    (out / "failures.json").write_text(json.dumps(failures, indent=2, sort_keys=True))
    _echo(cfg, out)

    print(f"{'dl':>4} {'N_ideal':>10} {'N_degraded':>11} {'+-':>8}")
    for r in rows:
        print(f"{r['delta_l']:>4} {r['N_ideal']:>10.4f} {r['N_degraded']:>11.4f} {r['uncertainty']:>8.4f}")
    for dl, msg in failures.items():
        print(f"row {dl} failed: {msg}", file=sys.stderr)
    return 1 if failures else 0


def _int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="RunConfig JSON; flags override it")
    common.add_argument("--l1", type=int)
    common.add_argument("--l2", type=int)
    common.add_argument("--theta0", type=float)
    common.add_argument("--basis", choices=["H", "V"], help="polarization carrying the l1 mode")
    common.add_argument("--grid", type=int, help="pixels per side")
    common.add_argument("--extent", type=float, help="grid half-width in waist units")
    common.add_argument("--waist", type=float)
    common.add_argument("--wavelength", type=float)
    common.add_argument("--z", type=float, help="propagation distance")
    common.add_argument("--noise", dest="noise_rel", type=float)
    common.add_argument("--bits", dest="bit_depth", type=int, choices=[8, 16])
    common.add_argument("--shift", type=float, help="max per-image shift in pixels")
    common.add_argument("--seed", type=int)
    common.add_argument("--floor-rel", dest="floor_rel", type=float)
    common.add_argument("--eta", type=float)
    common.add_argument("--window", type=int)
    common.add_argument("--no-calibrate", dest="calibrate", action="store_false",
                        help="skip centroid registration of the six frames")
    common.add_argument("--radius", type=float)
    common.add_argument("--radii", type=_float_list)
    common.add_argument("--deltas", type=_int_list)
    common.add_argument("--format", choices=["csv", "pgm"])
    common.add_argument("--out")
    common.add_argument("--force", action="store_true")

    parser = argparse.ArgumentParser(prog="skyrm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="simulate a six-image measurement set")
    p = sub.add_parser("analyze", parents=[common], help="skyrmion number of a measurement set")
    p.add_argument("input", nargs="?", default=argparse.SUPPRESS)
    sub.add_parser("reproduce", parents=[common], help="N versus delta-l on synthetic data")
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = vars(ns).copy()
    values.pop("command")
    base = {}
    path = values.pop("config", None)
    if path:
        try:
            base = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
    base.update(values)
    return RunConfig.from_dict(base)


COMMANDS = {"synth": cmd_synth, "analyze": cmd_analyze, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        return COMMANDS[ns.command](cfg)
    except (UsageError, MeasurementError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SkyrmionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
