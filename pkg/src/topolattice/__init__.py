"""Non-Hermitian SSH resonator chains coupled to a magnon mode."""
from .lattice import (
    HERMITIAN_CHAIN,
    NON_HERMITIAN_CHAIN,
    Hamiltonian,
    LatticeSpec,
    bloch_hamiltonian,
    build_chain_hamiltonian,
    bulk_bands,
)
from .spectral import (
    EigenMode,
    Spectrum,
    chain_spectrum,
    classify_modes,
    eigendecompose,
    normalized_eigenvalues,
    particle_hole_residual,
    pdos,
)

__version__ = "0.1.0"
