"""Two-time weak-measurement protocol for open quantum batteries.

Single-qubit dynamics use closed forms; multi-cell batteries are integrated
under collective thermal dissipation. See the README for the CLI.
"""
from .core import (
    TOL,
    BathParams,
    HamiltonianSpec,
    ProtocolParams,
    QubitState,
    check_density_matrix,
    dephase,
    purity,
    thermal_population,
    validate_qubit_state,
)
from .dynamics import evolve_free, free_evolution, lindblad_rhs_single, tau_half, thermal_state
from .ergotropy import (
    ErgotropyBreakdown,
    breakdown,
    coherent_ergotropy,
    ergotropy,
    incoherent_ergotropy,
    qubit_breakdown,
    qubit_incoherent_steps,
    reversal_threshold_w_prime,
)
from .errors import (
    DimensionMismatch,
    InvalidTemperature,
    NegativeTime,
    NonPositive,
    OutOfRange,
    StepFailure,
    TooLarge,
    TWMError,
    ValidityWarning,
    ZeroProbability,
    ZeroTemperature,
)
from .measurement import (
    MeasurementRecord,
    local_measurement,
    n_mw_closed_form,
    reversal_measure,
    success_probability,
    weak_measure,
)
from .multiqubit import (
    CollectiveModel,
    build_model,
    concurrence,
    find_operational_points_2q,
    integrate,
    lindblad_rhs,
    run_twm_multi,
    x_state,
)
from .protocol import ProtocolOutcome, coherent_steps, percent_gains, run_twm_single, timeseries
from .shifts import (
    OperationalPoint,
    ShiftReport,
    energy_shift,
    ergotropy_shift,
    eta_curves,
    find_operational_points,
    null_energy_w_tilde,
    shift_report,
    w_tilde_long_time,
)

__version__ = "0.1.0"
