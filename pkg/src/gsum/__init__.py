"""Constructive Gaussian-sum machinery and its numerical certification."""

from .coupling1d import (
    DensityAudit,
    DensityCoupling,
    bobkov_transport,
    build_density_coupling,
    component_densities,
    conditional_atom_given_sum,
    density_ratio_audit,
    g_marginal_density,
    quantize_quantiles,
    sample_coupled_pair,
    sum_density,
    sum_density_cdf,
)
from .dists import (
    DiscreteDistribution1D,
    DiscreteDistributionVec,
    SubgaussianCertificate,
    subgaussian_norm,
)
from .errors import (
    AdmissionError,
    DomainError,
    GsumError,
    InternalError,
    SearchBudgetExceeded,
)
from .geometry import (
    EllipsoidSpec,
    GameSolution,
    GridSet,
    HalfSpace,
    ellipsoid_game,
    ellipsoid_intersects,
    gaussian_measure_ellipsoid,
    min_cov_norm,
    neighborhood_measure_check,
    steinhaus_interval,
)
from .highdim import (
    BesselReport,
    FactorizationPlan,
    PartitionResult,
    SimplexConstruction,
    bessel_identity_check,
    estimate_cd,
    mss_partition,
    normcov_factorize,
    region_index,
    simplex_vectors,
)
from .ito import (
    GradientTables,
    ItoConfig,
    NormalizationPlan,
    ThreeGaussiansPipeline,
    TripleSample,
    heat_smoothed,
    ito_pair_decomposition,
    linear_map_decomposition,
    normalization_triple,
    three_gaussians_sampler,
)
from .metrics import (
    empirical_tv_to_dist,
    ks_distance,
    ks_distance_two_sample,
    total_variation_discrete,
    wasserstein1_1d,
)
from .normal import std_normal_cdf, std_normal_pdf, std_normal_quantile
from .orderstats import (
    OrderStatsReport,
    ThetaFamily,
    all_gaussian_family,
    analytic_tail_integral,
    anchor_spread_check,
    mills_bounds,
    orderstats_moment_sum,
    quantile_anchors,
    quantile_strip_family,
    xi_bound,
)
from .rng import RandomSource, gaussian_stream, normals
from .transport import TransportMap1D

__version__ = "0.1.0"
