"""Monte-Carlo envelope of the degraded pipeline.

For every (delta-l, noise, bit depth) cell, analyzes ``--seeds`` degraded
realizations and reports min / mean / max of N. Writes a CSV table.
"""

import argparse
import csv
import sys

import numpy as np

from skyrmion_optics import SkyrmionError, analyze
from skyrmion_optics.cli import RunConfig, simulate


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--deltas", default="2,6,10,12")
    p.add_argument("--noise", default="0.001,0.01")
    p.add_argument("--bits", default="8,16")
    p.add_argument("--shift", type=float, default=0.5)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--out", default="degradation_envelope.csv")
    a = p.parse_args(argv)
    cfg = RunConfig(grid=a.grid)

    rows = []
    for dl in (int(v) for v in a.deltas.split(",")):
        for noise in (float(v) for v in a.noise.split(",")):
            for bits in (int(v) for v in a.bits.split(",")):
                ns, failed = [], 0
                for seed in range(a.seeds):
                    try:
                        ns.append(analyze(simulate(cfg, 0, dl, noise, bits, a.shift, seed))[0].n_skyrmion)
                    except SkyrmionError:
                        failed += 1
                stats = (min(ns), float(np.mean(ns)), max(ns)) if ns else (np.nan,) * 3
                rows.append([dl, noise, bits, *stats, failed])
                print(f"dl={dl:2d} noise={noise:<6g} bits={bits:2d}  N min {stats[0]:.3f} "
                      f"mean {stats[1]:.3f} max {stats[2]:.3f}  failed {failed}")

    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta_l", "noise_rel", "bit_depth", "N_min", "N_mean", "N_max", "failed"])
        w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
