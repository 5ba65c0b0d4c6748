"""Predictive and retrodictive quantum optics on a truncated Fock space."""

from .fock import (
    DensityOperator,
    Direction,
    FockVector,
    ImpossibleOutcome,
    ModeRegister,
    OperatorMatrix,
    enumerate_basis,
    inner_product,
    overlap_up_to_phase,
    partial_trace,
    project_and_renormalize,
)
from .scenarios import (
    ClosedCycleConfig,
    TimeMachineConfig,
    backward_channel,
    cycle_analysis,
    forward_interferometer_oracle,
    no_signaling_check,
    path_amplitude_oracle,
)

__version__ = "0.1.0"
