"""Exact-diagonalization and driven-dynamics engine for small Fermi-Hubbard
clusters: Bessel-renormalized effective hopping under a Peierls drive and
resonant single/multiple doublon-holon pair creation."""

__version__ = "0.1.0"

from .fock import (
    BOSE,
    FERMI,
    CapacityError,
    FockBasis,
    FockState,
    NullProjectionError,
    OperatorMatrix,
    build_basis,
    doublon_matrix,
    hop_matrix,
    number_matrix,
    permutation_matrix,
    sector_dimension,
    symmetrize,
)
from .model import (
    DriveProtocol,
    Envelope,
    HubbardParams,
    LatticeGraph,
    TimeDependentHamiltonian,
    build_driven,
    build_hubbard,
    chain,
    complete,
    forward_hop_sum,
    hopping_sum,
    peierls_phase,
    square,
)
from .symmetry import (
    SubspaceError,
    SymmetricSubspace,
    build_symmetric_subspace,
    reduce_operator,
    square_subspace,
)
from .spectra import (
    AmplitudeMaximum,
    PairAmplitude,
    PerturbationCoefficients,
    ScalingFit,
    ScalingScan,
    Spectrum,
    amplitude_maximum,
    cycle_pair_amplitude,
    diagonalize,
    ground_state_energy,
    pair_amplitude,
    perturbation_coefficients,
    scaling_fit,
    scaling_scan,
)
from .dynamics import (
    GaugeCheckResult,
    NormDriftError,
    QuenchScanResult,
    ResonanceScanResult,
    StroboscopicResult,
    Trajectory,
    correlated_part,
    default_timestep,
    evolve,
    gauge_check,
    quench_probability,
    reduced_density,
    resonance_scan,
    resonance_targets,
    stroboscopic_fidelity,
)
from .pumpcalc import (
    PhaseSuppression,
    PumpFieldParams,
    bandwidth_limit,
    bessel_j0_quadrature,
    effective_hopping,
    first_bessel_zero,
    phase_amplitude,
    small_phase_suppression,
)
