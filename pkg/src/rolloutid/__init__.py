"""Least-squares identification of LTI Markov parameters from many short rollouts."""

from .bounds import (
    BoundReport,
    ConcentrationCheck,
    check_proposition,
    corollary2_bound,
    theorem1_bound,
    theorem1_coverage,
)
from .errors import (
    InvalidInputError,
    NumericFailureError,
    RankDeficiencyError,
    SysIdError,
    UnderExcitationError,
)
from .estimators import (
    DataMatrices,
    EstimationResult,
    assemble_data_matrices,
    error_decomposition_check,
    ols_final_sample,
    ols_full,
    ols_unequal_length,
)
from .experiments import ScenarioConfig, preset, random_system, run_sweep
from .lti import (
    MarkovMatrix,
    NoiseConfig,
    Rollout,
    RolloutDataset,
    SystemModel,
    build_hankel,
    simulate_dataset,
    simulate_rollout,
    true_markov,
)
from .realization import (
    Realization,
    fir_hinf_report,
    ho_kalman,
    realization_robustness_check,
)

__version__ = "0.1.0"
