"""depfdr: false-discovery-rate control over dependent hypothesis fields.

A simulation laboratory built around the conditional independence model:
hypothesis truths form a stationary 0/1 field (possibly spatially dependent),
and given the field the p-values are independent with uniform null marginals.
The package generates such fields, draws p-values, runs step-up and plug-in
procedures, evaluates the associated empirical processes, and verifies the
large-sample theory by Monte Carlo.
"""

from .distributions import (
    InverseSquareAlternative,
    PopulationModel,
    TabulatedAlternative,
    alt_cdf,
    alt_density,
    alt_quantile,
    reference_model,
)
from .fields import (
    CltDiagnostic,
    FieldSpec,
    HypothesisField,
    IsingParams,
    LinearFieldParams,
    beta_critical,
    check_subcritical,
    clt_diagnostic,
    field_from_csv,
    field_to_csv,
    gen_iid,
    gen_ising,
    gen_linear_indicator,
    geometric_window,
    ising_conditional,
    ising_count_trace,
    realize,
)
from .imaging import (
    FN,
    FP,
    TN,
    TP,
    ClassificationGrid,
    diff_map,
    read_pgm,
    restore_field,
    write_pgm,
    write_ppm,
)
from .procedures import (
    ProcedureConfig,
    TestResult,
    bh_procedure,
    bh_threshold,
    classify,
    pi0_estimate,
    plugin_procedure,
    results_to_csv,
    step_up_count,
)
from .processes import (
    PValueSample,
    ProcessEvaluation,
    alt_mass,
    counts,
    draw_pvalues,
    ecdf,
    evaluate_processes,
    fdp_process,
    fnp_process,
    null_mass,
    population_fnp,
    sample_from_csv,
    sample_to_csv,
)
from .seeding import DEFAULT_MASTER_SEED, mix64, stream_seed

__version__ = "0.1.0"
