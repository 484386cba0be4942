"""Cross-Kerr conditional crescent-state preparation simulator.

Two coherent modes pick up a cross-Kerr phase, one mode is homodyne
measured, and a measurement-dependent displacement is fed forward onto
the other.  This package simulates that pipeline on a truncated Fock
basis and characterizes the resulting non-Gaussian states.
"""

from kerrcrescent.fock import (
    DensityMatrix,
    FockOperator,
    FockVector,
    GridCoverageError,
    LeakageError,
    TruncationError,
    apply,
    basis_state,
    choose_dim,
    coherent_fock,
    displacement_operator,
    hermite_functions,
    inner,
    norm_sq,
    number_moments,
    tail_mass,
)
from kerrcrescent.protocol import (
    Displacement,
    ProtocolParams,
    XGrid,
    build_xgrid,
    conditional_state_approx,
    conditional_state_exact,
    displacement_param,
    ensemble_state,
    ensemble_state_converged,
    fidelity_overlap,
    fidelity_profile,
    homodyne_overlap,
    oracle_conditional_state,
    outcome_density,
    output_state,
)
from kerrcrescent.observables import (
    PhotonStatistics,
    WignerGrid,
    negativity_volume,
    photon_statistics,
    purity,
    quadrature_variance,
    radial_section,
    squeezing_factor,
    wavefunction,
    wigner,
)

__version__ = "0.1.0"
