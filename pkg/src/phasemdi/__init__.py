"""Key-rate analysis of phase-encoding MDI-QKD with imperfect state preparation."""

from .channel_models import (
    DetectorModel,
    LinkModel,
    Placement,
    ScenarioParams,
    Scheme,
    scheme1_observables,
    scheme2_observables,
    v_integral,
)
from .presets import PRESETS, Preset, get_preset
from .quantum_states import (
    DELTA0,
    GramMixture,
    ModulatorModel,
    PreparedStates,
    coherent_overlap,
    fidelity_gram,
    lossless_joint_probs,
    qubit_fidelity_scheme2,
)
from .security_bounds import (
    FlawVariant,
    binary_entropy,
    delta_ini_actual_states,
    delta_ini_erratum,
    delta_ini_scheme1_original,
    invert_phase_error_bound,
    key_rate_scheme1,
    key_rate_scheme2,
    worst_case_delta,
)
from .sweep import (
    KeyRatePoint,
    NoPositiveRateError,
    SweepSpec,
    cutoff_distance,
    evaluate_point,
    optimize_alpha,
    sweep,
)

__version__ = "0.1.0"
