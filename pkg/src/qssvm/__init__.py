"""L1-regularized kernel-free quadratic-surface SVMs.

Binary classifiers that separate data with the zero set of
f(x) = x'Wx/2 + b'x + c, trained by convex quadratic programming with an
optional L1 penalty on W that induces sparsity and, for large penalties,
collapse to a linear separator.
"""

from .halfvec import (
    Dataset,
    DesignCache,
    assemble_design,
    duplication_matrix,
    elimination_matrix,
    feature_r,
    feature_s,
    hvec,
    hvec_index_pairs,
    hvec_size,
    quad_eval,
    sample_design_M,
    unhvec,
)
from .qp import (
    QuadraticProgram,
    QpSolution,
    ResidualTriple,
    SolveOptions,
    SolveStatus,
    kkt_residuals,
    solve,
    solve_oracle,
)
from .models import (
    HardMarginInfeasible,
    NotLinearlySeparable,
    NotQuadraticallySeparable,
    QuadSurfaceModel,
    SolverFailure,
    TrainConfig,
    TrainReport,
    Variant,
    build_qp,
    lambda_equivalence_bound,
    load_model,
    mu_vanishing_bound,
    predict,
    save_model,
    sparsity_pattern,
    train,
)
from .diagnostics import (
    KktReport,
    SeparabilityCertificate,
    SeparabilityKind,
    check_assumptions,
    check_separability,
    compare_with_svm,
    curvature,
    hard_margin_c_interval,
    is_G_pd,
    restricted_pin_multipliers,
    schur_complement_pd,
    svm_equivalence_lhs,
    verify_kkt,
    verify_model_kkt,
)
from .datagen import (
    GenConfig,
    RejectionBudgetExceeded,
    SurfaceSpec,
    builtin_sparse_surface,
    gen_from_surface,
    gen_linear_separable,
    gen_artificial_benchmark,
    load_dataset_csv,
    random_hyperplane_surface,
    random_quadratic_surface,
    save_dataset_csv,
)
from .experiment import (
    EmptyDataset,
    ExperimentPlan,
    NotTwoClasses,
    ParseError,
    ResultsTable,
    accuracy_score,
    load_csv,
    run_benchmark,
    tune_lambda,
    tune_mu,
)

__version__ = "0.1.0"
