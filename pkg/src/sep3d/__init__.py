"""Three-dimensional two-point separation estimation with modal photon counting.

The quantum Fisher information of the pair separation, the classical Fisher
information of Zernike and sine-cosine mode counting, maximum-likelihood
estimation from simulated photon counts, and an experiment runner.
"""

from .core_optics import (
    ApertureModel,
    DomainError,
    EigenPair,
    QuadratureError,
    SeparationVector,
    aperture_average,
    eigen_decompose,
    normalize_separation,
    overlap_delta,
    phase_psi,
    resolution_scales,
    source_wavefunction,
)
from .fisher import (
    CRBResult,
    FisherResult,
    axial_overlap,
    crb_from_fisher,
    fisher_matrix,
    information_gap,
    sincos_fi_axial,
    sincos_fi_transverse,
)
from .modal import (
    EXACT,
    SMALL_L,
    ChannelProbabilities,
    ModeIndexError,
    ProbabilityConsistencyError,
    SinCos,
    Zernike,
    channel_probabilities,
    mode_overlap_amplitude,
    orthonormality_residual,
    sincos_modes,
    sincos_overlap_transverse,
    zernike_modes,
    zernike_probability_exact,
    zernike_probability_small,
)
from .montecarlo import (
    BatchResult,
    CountsFrame,
    EstimationResult,
    InvalidProbabilityError,
    batch_estimate,
    frame_rng,
    ml_estimate,
    neg_log_likelihood,
    sample_frame,
)
from .qfi import localization_qfi, qfi_clear_analytic, qfi_phase_covariance, qfi_state_derivative

__version__ = "0.1.0"
