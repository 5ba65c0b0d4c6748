"""The double beam splitter time machine and its closed-cycle variant.

Mode names follow one fixed layout. The lower splitter BSL mixes ``b``
(vacuum from P0) with ``c`` (one photon from P1). Its ``b`` output travels to
the upper splitter BSU, which mixes it with ``a``. Detector D0 watches BSU's
``a`` output and D1 its ``b`` output. BSL's ``c`` output is the state sent
into the past. In the closed cycle that ``c`` output passes a phase shifter
and becomes BSU's ``a`` input.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .devices import PreparationDevice, outcome_label, photon_counting_pom, pure_preparation
from .fock import (
    ATOL,
    DEGENERATE_NORM2,
    PHYSICS_ATOL,
    DensityOperator,
    Direction,
    FockVector,
    ModeRegister,
    canonical_phase,
    inner_product,
    partial_trace,
    relabel,
    tensor,
    trace_distance,
)
from .formalisms import ExperimentSetup, forward_probability, preparation_projection
from .linear_optics import (
    T_MEASUREMENT,
    T_PREPARATION,
    BeamSplitter,
    PhaseShifter,
    Propagation,
    ScheduleStep,
    UnitarySchedule,
    apply_backward,
    apply_forward,
    build_element_unitary,
    compose_schedule,
)

SQRT_HALF = 1 / math.sqrt(2)

D0, D1 = "D0", "D1"
# (D0, D1) counts; (0, 0) happens when the P1 photon stays in c and |in> is empty
CHANNEL_OUTCOMES = ((0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0))
CYCLE_OUTCOMES = ((0, 1), (1, 0))

BSL = BeamSplitter("b", "c")
BSU = BeamSplitter("a", "b")


def label(counts: tuple[int, int]) -> str:
    return outcome_label({D0: counts[0], D1: counts[1]})


def bsl_output() -> FockVector:
    """The combined P0, P1 and BSL preparation: R|0>_b|1>_c."""
    reg = ModeRegister(("b", "c"), 1)
    return apply_forward(build_element_unitary(BSL, reg), FockVector.basis_state(reg, (0, 1)))


@dataclass(frozen=True)
class TimeMachineConfig:
    a0: complex = SQRT_HALF
    a1: complex = SQRT_HALF
    path_b_wavelength_fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a0", complex(self.a0))
        object.__setattr__(self, "a1", complex(self.a1))
        n2 = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(n2 - 1.0) > ATOL:
            raise ValueError(f"|a0|^2 + |a1|^2 = {n2!r}, expected 1")

    def in_state(self, mode: str = "a") -> FockVector:
        reg = ModeRegister((mode,), 1)
        return FockVector(reg, [self.a0, self.a1])


@dataclass(frozen=True)
class ClosedCycleConfig:
    phi: float = math.pi

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")

    @property
    def time_machine(self) -> TimeMachineConfig:
        return TimeMachineConfig(SQRT_HALF, SQRT_HALF, 0.0)


@dataclass(frozen=True, eq=False)
class ChannelOutcome:
    outcome: str
    counts: tuple[int, int]
    probability: float
    # squared amplitude accumulated along the retrodictive chain, for cross-checks
    retro_probability: float
    out_state: FockVector | None


@dataclass(frozen=True, eq=False)
class BackwardChannelReport:
    config: TimeMachineConfig
    records: tuple[ChannelOutcome, ...]
    averaged_state: DensityOperator

    def __getitem__(self, outcome) -> ChannelOutcome:
        key = label(outcome) if isinstance(outcome, tuple) else outcome
        for r in self.records:
            if r.outcome == key:
                return r
        raise KeyError(outcome)

    @property
    def total_probability(self) -> float:
        return sum(r.probability for r in self.records)


def time_machine_setup(config: TimeMachineConfig) -> ExperimentSetup:
    """The double beam splitter as one predictive experiment on modes a, b, c."""
    reg = ModeRegister(("a", "b", "c"), 2)
    psi0 = tensor(config.in_state("a"), FockVector.basis_state(ModeRegister(("b", "c"), 1), (0, 1)), reg)
    schedule = UnitarySchedule(
        (
            ScheduleStep(BSL, T_PREPARATION),
            ScheduleStep(Propagation("b", config.path_b_wavelength_fraction)),
            ScheduleStep(BSU, T_MEASUREMENT),
        )
    )
    return ExperimentSetup(
        PreparationDevice(reg, {"in": pure_preparation(psi0)}),
        compose_schedule(schedule, reg),
        photon_counting_pom(reg, {D0: "a", D1: "b"}),
    )


def retrodict_out(config: TimeMachineConfig, counts: tuple[int, int]) -> tuple[FockVector | None, float]:
    """Retrodictive chain from a detector record back to mode c at t_p.

    Returns the normalized |out>_c (``None`` if the record is impossible) and
    the squared norm the chain accumulated, which is the record's probability.
    """
    n0, n1 = counts
    reg_ab = ModeRegister(("a", "b"), 2)
    retro = FockVector.basis_state(reg_ab, (n0, n1), Direction.RETRODICTIVE)
    retro = apply_backward(build_element_unitary(BSU, reg_ab), retro)
    first = preparation_projection(retro, config.in_state("a"))
    if first.state is None:
        return None, 0.0
    retro_b = first.state.with_direction(Direction.RETRODICTIVE)
    prop = Propagation("b", config.path_b_wavelength_fraction)
    retro_b = apply_backward(build_element_unitary(prop, retro_b.register), retro_b)
    second = preparation_projection(retro_b, bsl_output())
    weight = (first.norm * second.norm) ** 2
    if second.state is None:
        return None, weight
    return canonical_phase(second.state.with_direction(Direction.PREDICTIVE)), weight


def backward_channel(config: TimeMachineConfig) -> BackwardChannelReport:
    setup = time_machine_setup(config)
    records = []
    for counts in CHANNEL_OUTCOMES:
        p = forward_probability(setup, "in", label(counts))
        out, weight = retrodict_out(config, counts)
        if p < DEGENERATE_NORM2:
            p, out = 0.0, None
        records.append(ChannelOutcome(label(counts), counts, p, weight, out))
    c_reg = ModeRegister(("c",), 1)
    averaged = DensityOperator.mixture(c_reg, [(r.probability, r.out_state) for r in records if r.out_state])
    return BackwardChannelReport(config, tuple(records), averaged)


@dataclass(frozen=True, eq=False)
class NoSignalingReport:
    averaged_states: tuple[DensityOperator, ...]
    oracle_state: DensityOperator
    max_pairwise_trace_distance: float
    max_oracle_trace_distance: float
    tolerance: float = PHYSICS_ATOL

    @property
    def passed(self) -> bool:
        return self.max_pairwise_trace_distance <= self.tolerance and self.max_oracle_trace_distance <= self.tolerance


def no_signaling_check(configs: Iterable[TimeMachineConfig]) -> NoSignalingReport:
    """Compare the backward mixed state across configs and against the mode-c marginal."""
    states = tuple(backward_channel(c).averaged_state for c in configs)
    oracle = partial_trace(DensityOperator.from_vector(bsl_output()), keep=("c",))
    pairwise = max(
        (trace_distance(x, y) for k, x in enumerate(states) for y in states[k + 1 :]), default=0.0
    )
    to_oracle = max((trace_distance(x, oracle) for x in states), default=0.0)
    return NoSignalingReport(states, oracle, pairwise, to_oracle)


class Consistency(Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    PARTIAL = "partial"


def verdict(probability: float, tol: float = PHYSICS_ATOL) -> Consistency:
    if probability >= 1 - tol:
        return Consistency.CONSISTENT
    if probability <= tol:
        return Consistency.INCONSISTENT
    return Consistency.PARTIAL


@dataclass(frozen=True, eq=False)
class CycleOutcome:
    outcome: str
    counts: tuple[int, int]
    out_state: FockVector
    in_bar: FockVector
    overlap: complex
    cycle_probability: float
    oracle_probability: float
    consistency: Consistency


@dataclass(frozen=True, eq=False)
class CycleReport:
    config: ClosedCycleConfig
    in_state: FockVector
    records: tuple[CycleOutcome, ...]

    def __getitem__(self, outcome) -> CycleOutcome:
        key = label(outcome) if isinstance(outcome, tuple) else outcome
        for r in self.records:
            if r.outcome == key:
                return r
        raise KeyError(outcome)


def cycle_analysis(config: ClosedCycleConfig) -> CycleReport:
    """Retrodict |out> for each one-photon record, feed it through the phase shifter
    back to BSU's input, and score the loop by |<in|in_bar>|^2."""
    tm = config.time_machine
    in_state = tm.in_state("a")
    shifter = PhaseShifter("c", config.phi)
    oracle = forward_interferometer_oracle(config.phi)
    records = []
    for counts in CYCLE_OUTCOMES:
        out, _ = retrodict_out(tm, counts)
        shifted = apply_forward(build_element_unitary(shifter, out.register), out)
        in_bar = relabel(shifted, {"c": "a"})
        overlap = inner_product(in_state, in_bar)
        p = abs(overlap) ** 2
        records.append(
            CycleOutcome(label(counts), counts, out, in_bar, overlap, p, oracle[label(counts)], verdict(p))
        )
    return CycleReport(config, in_state, tuple(records))


# Elementary amplitudes read off the 50/50 splitter output R|0>_b|1>_c.
AMPLITUDE_REFLECT = 1j * SQRT_HALF
AMPLITUDE_TRANSMIT = SQRT_HALF


def path_amplitude_oracle(phi: float) -> complex:
    """Amplitude for D1 to fire, summed over the two routes through the loop."""
    via_b = AMPLITUDE_REFLECT * AMPLITUDE_TRANSMIT
    transmit_and_shift = AMPLITUDE_TRANSMIT * cmath.exp(1j * phi)
    via_shifter = transmit_and_shift * AMPLITUDE_REFLECT
    return via_b + via_shifter


def interferometer_setup(phi: float, pi_fraction=None) -> ExperimentSetup:
    """The closed cycle unrolled as a forward Mach-Zehnder interferometer on modes b and c."""
    reg = ModeRegister(("b", "c"), 1)
    schedule = UnitarySchedule(
        (
            ScheduleStep(BeamSplitter("b", "c"), T_PREPARATION),
            ScheduleStep(PhaseShifter("c", phi, pi_fraction)),
            ScheduleStep(BeamSplitter("c", "b"), T_MEASUREMENT),
        )
    )
    start = FockVector.basis_state(reg, (0, 1))
    return ExperimentSetup(
        PreparationDevice(reg, {"P0,P1": pure_preparation(start)}),
        compose_schedule(schedule, reg),
        photon_counting_pom(reg, {D0: "c", D1: "b"}),
    )


def forward_interferometer_oracle(phi: float) -> dict[str, float]:
    setup = interferometer_setup(phi)
    return {label(c): forward_probability(setup, "P0,P1", label(c)) for c in CYCLE_OUTCOMES}


def cycle_sweep(phis: Sequence[float]) -> list[CycleReport]:
    return [cycle_analysis(ClosedCycleConfig(phi)) for phi in phis]
