"""esrsim: detection-conditioned quantum probability engine.

A finite-dimensional numerical engine for a model in which quantum (Born)
probabilities are probabilities conditional on detection: every observable
gains a no-registration outcome, overall probabilities factorize into
detection times conditional ones, state updates generalize the projection
postulate accordingly, a finite hidden-variable layer reproduces the
macroscopic statistics, and the resulting detected-vs-produced ensemble gap
is quantified on Bell and CHSH experiments.
"""

from .errors import (
    AllBranchesZero,
    ComponentUndetectable,
    ConfigInvalid,
    ContainsNoRegistration,
    DetectionOutOfRange,
    DimensionMismatch,
    EsrError,
    EtaOutOfRange,
    InvariantViolation,
    IoFailure,
    NormalizationViolation,
    NotHermitian,
    OutcomeCollision,
    PointerCountMismatch,
    UndefinedRatio,
    UnregisteredProperty,
    ZeroProbabilityBranch,
)
from .hilbert import (
    DensityOperator,
    Projector,
    StateVector,
    expectation,
    partial_trace,
    spectral_decompose,
    tensor,
    unitary_exp,
)
from .observables import (
    GeneralizedObservable,
    Observable,
    ObservableRegistry,
    PhysicalProperty,
    complement,
    g_map,
    make_generalized,
    projector_for,
)
from .probability import (
    ConstantDetection,
    DetectionModel,
    EsrState,
    ImproperMixture,
    PerOutcomeDetection,
    PerStateOutcomeDetection,
    ProperMixture,
    PureState,
    conditional_prob,
    detection_prob,
    effect_operator,
    overall_prob,
    proper_mixture_density,
    proper_mixture_probs,
)
from .measurement import (
    MeasurementOutcome,
    glp_update,
    glp_update_pure,
    lueders_qm,
    outcome_distribution,
    proper_mixture_update,
    sample_outcome,
)
from .composite import (
    AxmPhases,
    NonlinearityReport,
    PointerBasis,
    axm_premeasurement,
    linearized_premeasurement,
    nonlinearity_certificate,
    nonselective_post_state,
    reduced_post_state,
)
from .evolution import (
    Hamiltonian,
    evolve_closed,
    evolve_open_by_dilation,
    evolve_proper_mixture,
)
from .hiddenvars import (
    AggregateResult,
    MicroModel,
    MicroProperty,
    MicroState,
    aggregate,
    aggregate_complement,
    consistency_check,
    micro_conditional,
    micro_overall,
    sample_individual,
    sample_statistics,
)
from .bell import (
    BipartiteSettings,
    CorrelationRecord,
    TSIRELSON_SETTINGS,
    bell_ohs_value,
    chsh_value,
    conditional_correlator,
    critical_efficiency,
    overall_correlator,
    simulate_bell_run,
)

__version__ = "0.1.0"
