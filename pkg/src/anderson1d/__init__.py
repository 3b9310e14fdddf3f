"""Numerical laboratory for the one-dimensional random Schrodinger operator.

The operator is the Jacobi matrix with i.i.d. diagonal potential and unit
off-diagonals.  The package provides: potential laws and reproducible
sampling, finite tridiagonal restrictions with a Sturm-bisection
eigensolver, transfer-matrix products and Lyapunov-exponent estimation,
eigenfunction localization diagnostics, spectral statistics (integrated
density of states, Wegner and Minami checks), interval-union set algebra
for well-approximable energy sets, gauge functions with Hausdorff-type
cover estimates, and a CLI that runs named experiments end to end.
"""

from anderson1d.potential import (
    ConstantPotential,
    InvalidDistributionError,
    PotentialDistribution,
    essential_spectrum,
    sample_potential,
)
from anderson1d.operator import (
    NumericError,
    SpectrumResult,
    TridiagonalBlock,
    char_poly_logdet,
    char_poly_value,
    dyadic_block,
    min_spacing,
    restrict,
    spectrum,
    sturm_count,
)
from anderson1d.transfer import (
    LyapunovEstimate,
    TransferProduct,
    growth_profile,
    lyapunov_estimate,
    lyapunov_grid,
    non_lyapunov_scan,
    transfer_dip_check,
    transfer_product,
    transfer_step,
)
from anderson1d.localization import (
    CenterAssignment,
    LocalizedEigenpair,
    block_match,
    decay_fit,
    good_bad_split,
    localization_centers,
    spacing_check,
)
from anderson1d.spectralstats import (
    IdsEstimate,
    count_concentration,
    ids_estimate,
    lower_wegner_check,
    minami_tail,
    wegner_check,
)
from anderson1d.approx import (
    ApproxSequence,
    IntervalUnion,
    bprime_chain,
    clamp_sequence,
    covering_function,
    delta_set,
    khinchin_experiment,
    truncated_approx_set,
    union_of_intervals,
)
from anderson1d.gauge import (
    CoverageError,
    GaugeFunction,
    cover_measure_upper,
    gauge_eval,
    integrability_test,
    series_test,
)

__version__ = "0.1.0"
