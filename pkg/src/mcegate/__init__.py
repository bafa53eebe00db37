"""Two qubits coupled to a bosonic bath, propagated with multi-configurational
Ehrenfest (MCE) trajectories on a moving coherent-state grid, with channel
reconstruction and CZ-gate fidelity analysis."""

from .baths import BathSpec, build_degenerate_double, build_linear, build_ohmic, format_bath, parse_bath
from .channels import (
    ChannelError,
    ConcurrenceResult,
    DivergentOccupationError,
    PhysicalityWarning,
    QuantumChannel4,
    ThermalSampler,
    channel_trace,
    choi_fidelity,
    concurrence,
    cz_channel,
    format_channel,
    parse_channel,
    per_sample_fidelities,
    reconstruct_channel,
    sample_thermal,
    thermal_channel,
    thermal_channel_trace,
)
from .config import ConfigError, SimConfig
from .dynamics import (
    GramSolveError,
    GridInit,
    GridInitError,
    IntegratorConfig,
    MCEEvolver,
    StepError,
    diagnostics,
    divergence_time,
    energy,
    init_grid,
    propagate,
    step,
)
from .hamiltonian import (
    ROTATING_WAVE,
    SPIN_BOSON,
    HamiltonianSpec,
    matrix_element,
    mean_field_gradient,
    normalized_hamiltonian,
)
from .hilbert import (
    Configuration,
    DimensionError,
    McEState,
    basis_state,
    coherent_overlap,
    cross_overlap,
    gram_matrix,
    reduce_to_qubits,
    state_norm,
)
from .oracle import (
    BudgetError,
    ExactPropagator,
    FockEvolver,
    FockTruncation,
    UnsupportedRegimeError,
    exact_evolve,
    rwa_sector_solve,
    sector_evolver,
)

__version__ = "0.1.0"
