"""MIMO integrated sensing and communication toolbox."""

from .capacity import CapacityResult, PowerAllocation, comm_capacity, mutual_information_comm, waterfill
from .channel import (
    ArrayGeometry,
    MmWaveChannelSpec,
    NoiseSpec,
    PathParameters,
    SteeringDictionary,
    VirtualCoefficients,
    build_dictionary,
    load_channel_spec,
    random_channel,
    save_channel_spec,
    steering_vector,
    steering_vector_normalized,
    synthesize_channel,
    virtual_coefficients,
)
from .estimation import (
    BeamDetection,
    EstimationReport,
    GridPath,
    ObservationTensor,
    PathEstimate,
    beam_search_angles,
    estimate_delay,
    estimate_doppler,
    estimate_gain_phase,
    estimate_paths,
    random_probes,
    read_observations,
    synthesize_observations,
    write_observations,
)
from .precoding import (
    BeamSchedule,
    BetaResult,
    SuperpositionConfig,
    cancel_known_symbols,
    compose_isac_signal,
    expand_schedule,
    normalize_columns,
    optimize_beta_sinr,
    optimize_coherent_phase,
    shift_schedule,
    zf_scanning_precoder,
)
from .sensing import EstimationRateResult, SensingWaveform, estimation_rate, optimal_sensing_waveform, sensing_capacity
from .waveform import (
    ConvergenceError,
    interference_power,
    optimize_weighted_mi,
    solve_constant_modulus,
    solve_covariance_constrained,
    solve_pareto_tradeoff,
    solve_per_antenna,
    weighted_mi_objective,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
