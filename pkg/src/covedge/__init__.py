"""Edge statistics of general-population sample covariance matrices.

The package computes the deterministic edge parameters (c, lambda_r, sigma)
of the limiting spectral law, normalizes largest eigenvalues to Tracy-Widom
scale, samples the matrix ensembles of the simulation studies, runs the
pivotal gap-ratio hypothesis tests, and validates local-law predictions
(rigidity, delocalization, the trace identity).
"""

from .diagnostics import (
    DelocalizationResult,
    ScalingFit,
    delocalization_scan,
    rigidity_scan,
    trace_identity_check,
)
from .ensembles import (
    ENTRY_KINDS,
    SIGMA_KINDS,
    BuiltSigma,
    SampleDraw,
    SigmaModel,
    build_sigma,
    draw_goe_top3,
    draw_sample,
    factor_top_eigs,
    haar_orthogonal,
    load_matrix_file,
    sample_entries,
    save_matrix_file,
)
from .errors import (
    ConfigError,
    CovedgeError,
    DegenerateSpectrum,
    EdgeConditionViolated,
    EigenFailure,
    InsufficientSizes,
    InvalidModel,
    NonConvergence,
)
from .onatski import (
    AlternativeSpec,
    NullTable,
    TestResult,
    build_null_table,
    critical_value,
    generate_alt_sample,
    load_null_table,
    onatski_statistic,
    run_test,
    save_null_table,
    size_power_experiment,
)
from .spectral import (
    EdgeParams,
    PopulationSpectrum,
    StieltjesValue,
    companion_inverse,
    companion_transform,
    compute_lambda_r,
    compute_sigma,
    density_rho0,
    edge_params,
    normalize_top_eigenvalue,
    solve_c,
    solve_m0,
    solve_m0_grid,
    subcritical_check,
)
from .tw import TwReference, embedded_tw_table, mc_tw_reference, tw_cdf

__version__ = "0.1.0"
