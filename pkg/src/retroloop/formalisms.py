"""Predictive and retrodictive assignment of states, probabilities and collapse.

The predictive route assigns Λ_i/TrΛ_i at preparation and evolves it forward
through U; the retrodictive route assigns Π_j/TrΠ_j at measurement and evolves
it backward through U†. Both give the same conditional probabilities, and
both collapse operations below are the same partial inner product; only the
time at which the collapse is attached differs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .devices import MeasurementDevice, PreparationDevice, prior_probability
from .fock import (
    DEGENERATE_NORM2,
    PHYSICS_ATOL,
    DensityOperator,
    Direction,
    DirectionError,
    FockVector,
    ImpossibleOutcome,
    OperatorMatrix,
    Projection,
    RegisterMismatch,
    project_and_renormalize,
)


@dataclass(frozen=True, eq=False)
class ExperimentSetup:
    preparation: PreparationDevice
    evolution: OperatorMatrix
    measurement: MeasurementDevice

    def __post_init__(self):
        reg = self.preparation.register
        if self.evolution.register != reg or self.measurement.register != reg:
            raise RegisterMismatch("preparation, evolution and measurement must share one register")
        if not self.evolution.is_unitary(PHYSICS_ATOL):
            raise ValueError("evolution operator is not unitary")

    @property
    def register(self):
        return self.preparation.register


def _element(device, outcome):
    try:
        return device.elements[outcome]
    except KeyError:
        raise KeyError(f"unknown outcome {outcome!r}") from None


def _normalized(op: OperatorMatrix, what: str) -> DensityOperator:
    tr = float(np.real(op.trace))
    if tr <= DEGENERATE_NORM2:
        raise ImpossibleOutcome(f"{what} has zero trace")
    return DensityOperator(op.register, op.matrix / tr)


def predictive_state(setup: ExperimentSetup, i: str) -> DensityOperator:
    return _normalized(_element(setup.preparation, i), f"preparation element {i!r}")


def retrodictive_state(setup: ExperimentSetup, j: str) -> DensityOperator:
    return _normalized(_element(setup.measurement, j), f"measurement element {j!r}")


def forward_probability(setup: ExperimentSetup, i: str, j: str) -> float:
    """P(j|i) = Tr[U ρ_i U† Π_j]."""
    rho = predictive_state(setup, i).matrix
    u = setup.evolution.matrix
    pi = _element(setup.measurement, j).matrix
    return float(np.real(np.trace(u @ rho @ u.conj().T @ pi)))


def forward_distribution(setup: ExperimentSetup, i: str) -> dict[str, float]:
    rho = predictive_state(setup, i).matrix
    u = setup.evolution.matrix
    evolved = u @ rho @ u.conj().T
    return {
        j: float(np.real(np.trace(evolved @ op.matrix))) for j, op in setup.measurement.elements.items()
    }


def bayes_retrodict(setup: ExperimentSetup, j: str) -> dict[str, float]:
    """P(i|j) from the forward probabilities and the priors via Bayes' theorem."""
    joint = {
        i: forward_probability(setup, i, j) * prior_probability(setup.preparation, i)
        for i in setup.preparation.outcomes
        if prior_probability(setup.preparation, i) > DEGENERATE_NORM2
    }
    total = sum(joint.values())
    if total <= DEGENERATE_NORM2:
        raise ImpossibleOutcome(f"measurement outcome {j!r} has zero probability", np.sqrt(max(total, 0.0)))
    return {i: joint.get(i, 0.0) / total for i in setup.preparation.outcomes}


def retrodictive_probability(setup: ExperimentSetup, j: str) -> dict[str, float]:
    """P(i|j) from the retrodictive state evolved back to the preparation."""
    rho = retrodictive_state(setup, j).matrix
    u = setup.evolution.matrix
    back = u.conj().T @ rho @ u
    weights = {
        i: float(np.real(np.trace(back @ op.matrix))) for i, op in setup.preparation.elements.items()
    }
    total = sum(weights.values())
    if total <= DEGENERATE_NORM2:
        raise ImpossibleOutcome(f"measurement outcome {j!r} has zero probability", np.sqrt(max(total, 0.0)))
    return {i: w / total for i, w in weights.items()}


def collapse_at_measurement(entangled: FockVector, outcome_state: FockVector) -> FockVector:
    """Project a predictive state onto the measured subsystem's outcome state.

    The measured subsystem is whichever modes ``outcome_state`` lives on.
    """
    if entangled.direction is not Direction.PREDICTIVE:
        raise DirectionError("collapse at measurement acts on predictive states")
    proj = project_and_renormalize(outcome_state, entangled)
    if proj.state is None:
        raise ImpossibleOutcome("measurement outcome is orthogonal to the state", proj.norm)
    return proj.state


def preparation_projection(entangled_retro: FockVector, prepared_state: FockVector) -> Projection:
    """The partial inner product behind :func:`collapse_at_preparation`, with its norm.

    Whichever of the two states lives on fewer modes plays the bra.
    """
    if entangled_retro.direction is not Direction.RETRODICTIVE:
        raise DirectionError("collapse at preparation acts on retrodictive states")
    retro_modes, prep_modes = set(entangled_retro.modes), set(prepared_state.modes)
    if prep_modes < retro_modes:
        return project_and_renormalize(prepared_state, entangled_retro)
    if retro_modes < prep_modes:
        return project_and_renormalize(entangled_retro, prepared_state)
    raise RegisterMismatch(
        f"one of {entangled_retro.modes} and {prepared_state.modes} must be a proper subset of the other"
    )


def collapse_at_preparation(
    entangled_retro: FockVector, prepared_state: FockVector, *, continue_as: Direction
) -> FockVector:
    """Project a retrodictive state onto a known preparation.

    A prepared state on a subsystem of the retrodictive one leaves a
    retrodictive remainder on the other modes; a retrodictive state on a
    subsystem of an entangled preparation leaves a remainder that is
    re-emitted forwards. ``continue_as`` fixes the direction tag of the result.
    """
    proj = preparation_projection(entangled_retro, prepared_state)
    if proj.state is None:
        raise ImpossibleOutcome("preparation is orthogonal to the retrodictive state", proj.norm)
    return proj.state.with_direction(continue_as)
