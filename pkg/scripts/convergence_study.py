"""Grid-refinement study of N for an ideal beam at a fixed integration radius.

Prints |N - delta_l| and the error ratio between successive pitch halvings;
a second-order scheme gives ratios near 4.
"""

import argparse
import sys

from skyrmion_optics import GridSpec, build_beam, project_intensities, reconstruct, skyrmion_density, skyrmion_number
from skyrmion_optics.field import default_extent


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--delta", type=int, default=4)
    p.add_argument("--sizes", default="65,129,257,513,1025")
    p.add_argument("--radius", type=float, default=None, help="defaults to 0.85 of the grid half-width")
    a = p.parse_args(argv)

    extent = default_extent(a.delta)
    radius = a.radius or 0.85 * extent
    prev = None
    print(f"delta_l={a.delta} extent={extent:.3f} radius={radius:.3f}")
    for n in (int(v) for v in a.sizes.split(",")):
        g = GridSpec.square(n, extent)
        pf = reconstruct(project_intensities(build_beam(0, a.delta, 0.0, g)), 1e-14)
        err = abs(skyrmion_number(skyrmion_density(pf), (0, 0), radius).n_skyrmion - a.delta)
        ratio = f"{prev / err:6.2f}" if prev else "     -"
        print(f"n={n:5d} dx={g.dx:.5f} |N-dl|={err:.3e} ratio={ratio}")
        prev = err
    return 0


if __name__ == "__main__":
    sys.exit(main())
