"""Edge PT-breaking threshold against chain length."""
import argparse

import numpy as np

from topolattice import NON_HERMITIAN_CHAIN
from topolattice.topology import threshold_vs_length


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-min", type=int, default=3)
    parser.add_argument("--n-max", type=int, default=10)
    args = parser.parse_args(argv)

    spec = NON_HERMITIAN_CHAIN
    table = threshold_vs_length(spec, range(args.n_min, args.n_max + 1))
    for n, dg in zip(table.n_cells, table.delta_gamma_c):
        print(f"N={n:2d}  dg_c = {dg:10.5f} MHz  normalized {dg / (2 * (spec.v + spec.w)):.3e}")
    if table.r_squared is not None:
        print(f"ln dg_c slope {table.slope:.4f} per cell (R^2 {table.r_squared:.5f}); "
              f"ratio {np.exp(table.slope):.4f} vs v/w = {spec.v / spec.w:.4f}")


if __name__ == "__main__":
    main()
