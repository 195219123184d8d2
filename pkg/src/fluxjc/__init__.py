"""fluxjc: simulator and control-synthesis toolkit for flux-activated
resonant Jaynes-Cummings control of a bosonic cavity mode.

Submodules:
    units           unit conversions (the only place 2*pi enters)
    hilbert         truncated Hilbert space, JC Hamiltonian, dressed states
    calibration     per-transition calibration table
    pulses          envelopes, tones, schedules, spin-Jx drives
    lindblad        open-system propagation and parametric exchange
    tomography      exact and simulated-Ramsey Wigner functions
    reconstruction  linear inversion and Bayesian state estimation
    protocols       ladder synthesis, multitone transfer, Givens rotations,
                    calibration experiments, error budget
    hardware        SQUID transmon, parametric coupling, stub filter
"""

from .calibration import (
    CalibrationRow,
    CalibrationTable,
    MissingCalibrationError,
    Transition,
    transition,
)
from .hilbert import (
    DressedLabel,
    OperatorSet,
    SpaceDims,
    SystemModel,
    adiabatic_map,
    build_operators,
    dressed_energy_mhz,
    dressed_state,
    jc_hamiltonian,
    sideband_frequency,
    sigma_plus_element,
    transition_frequency_mhz,
)
from .lindblad import (
    ChevronResult,
    CollapseSet,
    FluxModSpec,
    RampSpec,
    Trajectory,
    adiabatic_detune,
    evolve,
    evolve_unitary,
    parametric_chevron,
)
from .pulses import (
    Envelope,
    JxSpec,
    PulseSchedule,
    Tone,
    gaussian_pulse,
    jx_amplitudes_mhz,
    jx_duration_ns,
    jx_schedule,
    sequence_concat,
)
from .protocols import (
    ErrorBudgetResult,
    GivensSpec,
    MultitoneResult,
    TargetState,
    calibrate_power_rabi,
    calibrate_ramp,
    calibrate_sigma,
    calibrate_spectroscopy,
    cavity_parity,
    error_budget,
    givens_effective_unitary,
    givens_parity_curve,
    givens_rotation,
    multitone_fidelity,
    optimize_givens_amplitudes,
    optimize_multitone,
    prep_fidelity_ideal,
    synthesize_ladder_prep,
)
from .reconstruction import (
    ReconstructionResult,
    WignerMap,
    bayesian_infer,
    build_map,
    fidelity,
    linear_inversion,
)
from .tomography import (
    ParityMapper,
    make_grid,
    measured_wigner_grid,
    vacuum_reference,
    wigner_exact,
    wigner_measured,
)
from .hardware import (
    FilterNetwork,
    FilterSection,
    ParametricModel,
    SquidParams,
    bessel_j1,
    chebyshev_stub_lowpass,
    device_filter,
    filter_s21,
    fit_squid_params,
    flux_sensitivity,
    transmon_freq,
)

__version__ = "0.1.0"
