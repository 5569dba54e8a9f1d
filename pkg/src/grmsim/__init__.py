"""Monte Carlo item-parameter recovery for the multidimensional GRM.

Generate polytomous response data under a crossed simulation design,
re-estimate item parameters by EM marginal maximum likelihood, and
summarize recovery as bias/RMSE tables and faceted SVG plots.
"""

__version__ = "0.1.0"

from .design import (
    AbilityMatrix,
    Condition,
    ResponseMatrix,
    SimulationDesign,
    allocate_items,
    draw_abilities,
    draw_item_parameters,
    equicorrelation_cholesky,
    expand_conditions,
    simulate_dataset,
)
from .errors import (
    CalibrationError,
    ConfigError,
    EstimationError,
    GridSizeError,
    GrmsimError,
    UsageError,
)
from .estimation import (
    EmConfig,
    FitResult,
    QuadratureGrid,
    build_quadrature,
    e_step,
    fit,
    fix_reflection,
    m_step_item,
    marginal_loglik,
)
from .grm import (
    INTERCEPT_BOUND,
    PROB_FLOOR,
    ItemParams,
    TestForm,
    boundary_prob,
    category_probs,
    response_loglik,
    sample_category,
)
from .metrics import (
    RecoveryMetrics,
    aggregate,
    bias,
    evaluate_replication,
    family_names,
    rmse,
)
from .pipeline import (
    RunConfig,
    derive_stream,
    evaluate_stage,
    fit_stage,
    generate_stage,
    load_config,
    report_stage,
    run_pipeline,
)
from .report import (
    PlotSpec,
    ResultsRow,
    ResultsTable,
    build_results_table,
    read_results_csv,
    render_metric_plot,
    save_plots,
    write_results_csv,
)

__all__ = [
    "__version__",
    "AbilityMatrix",
    "CalibrationError",
    "Condition",
    "ConfigError",
    "EmConfig",
    "EstimationError",
    "FitResult",
    "GridSizeError",
    "GrmsimError",
    "INTERCEPT_BOUND",
    "ItemParams",
    "PROB_FLOOR",
    "PlotSpec",
    "QuadratureGrid",
    "RecoveryMetrics",
    "ResponseMatrix",
    "ResultsRow",
    "ResultsTable",
    "RunConfig",
    "SimulationDesign",
    "TestForm",
    "UsageError",
    "aggregate",
    "allocate_items",
    "bias",
    "boundary_prob",
    "build_quadrature",
    "build_results_table",
    "category_probs",
    "derive_stream",
    "draw_abilities",
    "draw_item_parameters",
    "e_step",
    "equicorrelation_cholesky",
    "evaluate_replication",
    "evaluate_stage",
    "expand_conditions",
    "family_names",
    "fit",
    "fit_stage",
    "fix_reflection",
    "generate_stage",
    "load_config",
    "m_step_item",
    "marginal_loglik",
    "read_results_csv",
    "render_metric_plot",
    "report_stage",
    "response_loglik",
    "rmse",
    "run_pipeline",
    "sample_category",
    "save_plots",
    "simulate_dataset",
    "write_results_csv",
]
