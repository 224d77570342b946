"""Desk-scale simulation and optimization toolkit for a levitated-nanodiamond
spin interferometer: branch dynamics of a spin-coupled magnetic trap,
dynamical-decoupling evolution, tilt (Ramsey) phases, gravity-induced
entanglement timing with Casimir-Polder constraints, exact coil
magnetostatics, and adaptive trajectory integration."""

__version__ = "0.1.0"

from .core import (
    CONSTANTS,
    FieldConfig,
    NanodiamondParams,
    OscillatorParams,
    PhysicalConstants,
    derive_oscillator,
    equilibrium_positions,
    max_separation,
    oscillation_period,
)
from .coherent import (
    BranchState,
    branch_phase_difference,
    branch_state,
    classical_position,
    expectation_xp,
    phase_space_curve,
    ramsey_phase,
)
from .decoupling import (
    DDBranchTrace,
    DDConfig,
    FlipScheme,
    build_dd_trace,
    dd_branch_state,
    dd_branch_states,
    dd_expectation,
    dd_piecewise_ode_reference,
    dd_symmetry_metric,
)
from .coils import (
    CoilAssembly,
    FieldSample,
    LoopSource,
    UniformGradientField,
    assembly_field,
    complete_elliptic_KE,
    field_jacobian,
    field_map,
    loop_field,
)
from .protocol import (
    OptimizeResult,
    ProtocolConfig,
    ProtocolResult,
    Scenario,
    TwoQubitState,
    casimir_polder_separation,
    delta_phi_bd,
    delta_phi_rate,
    final_state,
    gravity_phases,
    min_distance,
    negativity,
    optimize_tmin,
    protocol_duration,
)
from .trajectory import (
    FlipSchedule,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    TrajectoryState,
    delta_scan,
    force,
    integrate,
    magnetic_moment,
    sensitivity_scan,
)

__all__ = [name for name in dir() if not name.startswith("_")]
