"""Modeling and planning toolkit for bias- and laser-tunable quantum-dot
entangled-pair emitters: Stark energy maps and their inverse solvers,
cascade state and fidelity models, tomography simulation/reconstruction,
and ensemble wavelength matching."""

from .cascade import (
    BASIS,
    CascadeParams,
    TwoPhotonState,
    fidelity_formula,
    fidelity_to_phi_plus,
    ideal_bell_state,
    time_integrated_density_matrix,
    time_resolved_state,
)
from .emitter import (
    BiasLookup,
    CwDrive,
    DiodeModel,
    DotConfig,
    OperatingPoint,
    QuantumDot,
    load_dot_config,
)
from .errors import (
    DegenerateInputError,
    EmptyEnsembleError,
    NonPhysicalStateError,
    OutOfRangeError,
)
from .planner import (
    EnsembleRecord,
    EnsembleSummary,
    GaussianFit,
    TuningPlan,
    bin_groups,
    ensemble_summary,
    fit_energy_distribution,
    gaussian_fit_histogram,
    group_at_target,
    load_ensemble,
    max_resonance_group,
    write_ensemble,
)
from .stark import (
    StarkFit,
    ac_stark_shift,
    achievable_energy_range,
    cal_constant_from_cancellation,
    dc_stark_energy,
    field_from_bias,
    fit_stark_parameters,
    plan_operating_point,
    rabi_from_power,
    solve_bias_for_energy,
    solve_cw_drive_for_fss,
    transition_energy,
)
from .tomography import (
    MeasurementRecord,
    MleResult,
    PolarizationScanFit,
    PolarizationScanPoint,
    PolarizationSetting,
    coincidence_probability,
    correlations_from_records,
    degree_of_correlation,
    extract_fss_polarization_scan,
    mle_reconstruct,
    read_counts_csv,
    reduced_fidelity,
    reduced_fidelity_from_records,
    reduced_settings_6,
    simulate_counts,
    tomography_settings_16,
    write_counts_csv,
)

__version__ = "0.1.0"
