"""Print the headline numbers for both fabricated chains."""
import warnings

import numpy as np

from topolattice import HERMITIAN_CHAIN, NON_HERMITIAN_CHAIN, chain_spectrum
from topolattice.magnon import edge_linewidth, effective_coupling
from topolattice.topology import bulk_sptb_threshold, edge_sptb_threshold, winding_generalized, winding_hermitian


def main():
    herm, nonh = chain_spectrum(HERMITIAN_CHAIN), chain_spectrum(NON_HERMITIAN_CHAIN)
    print("Hermitian chain")
    print(f"  W_h = {winding_hermitian(HERMITIAN_CHAIN)}")
    for m in herm.edge_modes():
        print(f"  edge m={m.index}: {m.re_ghz:.5f} GHz, loss {m.loss_mhz:.2f} MHz")

    print("non-Hermitian chain")
    print(f"  W_nh = {winding_generalized(NON_HERMITIAN_CHAIN)}")
    for m in nonh.edge_modes():
        print(f"  edge m={m.index}: {m.re_ghz:.5f} GHz, loss {m.loss_mhz:.3f} MHz ({m.pt_tag})")
    print(f"  weighted edge linewidth s=1: {edge_linewidth(nonh, 1):.2f} MHz, s=12: {edge_linewidth(nonh, 12):.2f} MHz")

    rep = edge_sptb_threshold(NON_HERMITIAN_CHAIN)
    bulk = bulk_sptb_threshold(NON_HERMITIAN_CHAIN)
    scale = 2 * (NON_HERMITIAN_CHAIN.v + NON_HERMITIAN_CHAIN.w)
    print(f"  edge EP: dg = {rep.delta_gamma_c:.3f} MHz, normalized {rep.normalized:.4f}")
    print(f"  bulk threshold: dg = {bulk:.1f} MHz, normalized {bulk / scale:.4f}")

    g0 = 80.0 / abs(herm[6].amplitudes[0])
    g_nh = effective_coupling(nonh, 6, 1, g0)
    print("coupling at site 1 (g0 calibrated on the Hermitian edge mode)")
    print(f"  g0 = {g0:.1f} MHz, non-Hermitian g_edge,1 = {g_nh:.1f} MHz (ratio {g_nh / 80:.3f}, sqrt2 = {np.sqrt(2):.3f})")


if __name__ == "__main__":
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        main()
