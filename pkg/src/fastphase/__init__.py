"""Deterministic multidimensional Fourier phase retrieval.

Recovers a complex object from oversampled Fourier intensity
measurements by estimating the winding index of the hidden spectrum,
building a direct initializer through a discrete Schwarz transform of
the log intensities, and refining with a trust-region Newton-CG method
on a phase-regularized cost.  Includes the two-measurement masked
scheme for arbitrary objects and reproducible experiment drivers.
"""

__version__ = "1.0.0"

from .instance import (
    DecayMask,
    DomainError,
    InfeasibleMaskError,
    Instance,
    ParameterError,
    SchwarzSpec,
    add_gaussian_noise,
    build_decay_mask,
    check_schwarz,
    generate_schwarz_object,
    load_instance,
    measure,
    save_instance,
)
from .pipeline import (
    AlignmentResult,
    ExperimentRow,
    NoiseSweepConfig,
    align,
    aligned_relative_error,
    fast_phase_retrieve,
    masked_fast_phase,
    median_rmse_by_snr,
    noise_sweep,
    quadrature_study,
    rmse_db,
    rows_to_csv,
    wf_comparison,
)
from .schwarz import (
    SchwarzConfig,
    conj_flip,
    discrete_schwarz_transform,
    resample_measurement,
    schwarz_init,
)
from .tensor import (
    ShapeError,
    TensorFormatError,
    circular_shift,
    crop_to_support,
    dft_adjoint,
    dft_oversampled,
    idft,
    pad_to_shape,
    read_complex_tensor,
    read_real_tensor,
    read_tensor,
    write_tensor,
)
from .trustregion import (
    CgResult,
    SolveReport,
    TrustRegionConfig,
    minimize,
    steihaug_cg,
    wirtinger_flow,
)
from .winding import (
    SingularPathError,
    WindingResult,
    canonical_index,
    reflected_index,
    winding_from_measurement,
    winding_of_object,
)
from .wirtinger import (
    BasinReport,
    CostKind,
    basin_check,
    condition_study,
    cost,
    diag_preconditioner,
    gradient,
    hessian_dense,
    hvp,
    hvp_stacked,
    ls,
    normalized,
    reg,
    sos_identity_residual,
)
