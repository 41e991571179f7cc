"""N versus delta-l for ideal and degraded synthetic beams.

Thin wrapper over ``skyrm reproduce``; writes fig3.csv and fig3.gp.

    python scripts/reproduce_fig3.py --out runs/fig3 [--noise 0.01 --bits 8]
"""

import sys

from skyrmion_optics.cli import main

if __name__ == "__main__":
    sys.exit(main(["reproduce", *sys.argv[1:]]))
