"""Sweep the loss contrast at fixed mean loss and list the exceptional points.

    python3 scripts/ep_cascade.py --points 501 --out ep_cascade.csv
"""
import argparse

import numpy as np

from topolattice import NON_HERMITIAN_CHAIN
from topolattice.export import write_text
from topolattice.topology import ep_reports_csv, ep_scan


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-normalized", type=float, default=0.5)
    parser.add_argument("--points", type=int, default=501)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    spec = NON_HERMITIAN_CHAIN
    scale = 2 * (spec.v + spec.w)
    grid = np.linspace(0, args.max_normalized * scale, args.points)
    reports = ep_scan(spec, grid, threads=args.threads)
    for r in reports:
        print(f"{r.kind:5s} modes {r.mode_pair[0]:2d}-{r.mode_pair[1]:2d}  dg = {r.delta_gamma_c:8.3f} MHz  normalized {r.normalized:.4f}")
    if args.out:
        write_text(args.out, ep_reports_csv(reports))


if __name__ == "__main__":
    main()
