"""Desk-scale laboratory for the two-dimensional mollified-noise Hamiltonian.

Subpackages by concern: fields (white-noise sampling and mollification),
riesz (power-law covariance synthesis), paths/silt (bridge ensembles and
self-intersection functionals), spectrum (box Hamiltonians and counting
measures), pam (parabolic evolution and annealed estimators), constants
(variational best constants), tauberian (tail/transform conversions), and
the config/records/experiments/cli orchestration layer.
"""

from .grids import GridSpec
from .fields import NoiseRealization, mollify, renorm_constant, sample_mollified, sample_white_noise
from .riesz import RieszFieldSpec, RieszSampler, sample_riesz_field
from .paths import PathEnsemble, girsanov_weight, sample_paths
from .silt import (
    RegionDescriptor,
    SiltSample,
    exp_moment,
    expected_silt,
    silt_chi,
    silt_mollified,
    tail_rate,
)
from .spectrum import (
    EmpiricalIDS,
    SpectrumResult,
    aggregate_ids,
    assemble,
    counting_function,
    laplace_of_counting,
    lifshitz_fit,
    lowest_eigenvalues,
)
from .pam import (
    PamState,
    annealed_box_laplace_fk,
    annealed_moment,
    evolve,
    feynman_kac_estimate,
    heat_trace,
    mass_duality_check,
)
from .constants import (
    VariationalConstants,
    kappa_shooting_oracle,
    m_from_kappa,
    optimize_kappa,
    rate_constants,
    rho_from_kappa,
)
from .tauberian import fit_log_asymptotics, laplace_of_samples, tauberian_convert

__version__ = "0.1.0"
