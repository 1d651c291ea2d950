"""Energy-based task-mixture optimisation for fine-tuning data.

Typical flow: prediction records -> similarity matrix -> potentials ->
optimal mixture on the simplex -> instance counts.
"""

from .core import (
    Metric,
    MixtureSolution,
    PotentialParams,
    Potentials,
    SimilarityMatrix,
    SolverPath,
    validate_similarity,
)
from .discovery import (
    DiscoveryTrace,
    GammaReport,
    SetFunction,
    affinity_trajectory,
    gamma_experiment,
    greedy_select,
    monotonicity_check,
    set_value,
    submodularity_ratio,
    tv_affinity,
)
from .qp import (
    build_potentials,
    energy,
    kkt_residual,
    project_simplex,
    solve,
    solve_interior,
    sweep_beta_lambda,
)
from .sampler import SamplingPlan, allocate, draw_instances, multinomial_pmf
from .similarity import (
    PredictionRecord,
    PredictionStore,
    build_similarity,
    ingest,
    jsd_pair,
    jsd_sample,
    pmi_pair,
)
from .spectral import SpectrumReport, eigen_spectrum, is_psd, psd_shift

__version__ = "0.1.0"
