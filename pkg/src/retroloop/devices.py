"""Preparation devices (collections of PDOs) and measurement devices (POMs)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Union

import numpy as np

from .fock import PHYSICS_ATOL, FockVector, ModeRegister, OperatorMatrix, RegisterMismatch

OVERFLOW = "overflow"


class Side(Enum):
    AFTER_PREPARATION = "after-preparation"
    BEFORE_MEASUREMENT = "before-measurement"


def _freeze(register: ModeRegister, elements: Mapping[str, OperatorMatrix]) -> dict[str, OperatorMatrix]:
    out = {}
    for key, op in elements.items():
        if op.register != register:
            raise RegisterMismatch(f"element {key!r} lives on {op.register}, device on {register}")
        out[str(key)] = op
    return out


@dataclass(frozen=True, eq=False)
class MeasurementDevice:
    register: ModeRegister
    elements: Mapping[str, OperatorMatrix]

    def __post_init__(self):
        object.__setattr__(self, "elements", _freeze(self.register, self.elements))

    @property
    def outcomes(self) -> tuple[str, ...]:
        return tuple(self.elements)


@dataclass(frozen=True, eq=False)
class PreparationDevice:
    register: ModeRegister
    elements: Mapping[str, OperatorMatrix]

    def __post_init__(self):
        object.__setattr__(self, "elements", _freeze(self.register, self.elements))

    @property
    def outcomes(self) -> tuple[str, ...]:
        return tuple(self.elements)


Device = Union[MeasurementDevice, PreparationDevice]


def validate(device: Device, atol: float = PHYSICS_ATOL) -> list[str]:
    """Return human-readable violations; an empty list means the device is valid."""
    problems = []
    dim = device.register.dim
    total = np.zeros((dim, dim), dtype=complex)
    if not device.elements:
        problems.append("device has no elements")
    for key, op in device.elements.items():
        m = op.matrix
        herm = float(np.max(np.abs(m - m.conj().T), initial=0.0))
        if herm > atol:
            problems.append(f"element {key!r}: not Hermitian (max deviation {herm:.3g})")
        lo = op.min_eigenvalue()
        if lo < -atol:
            problems.append(f"element {key!r}: min eigenvalue {lo:.3g} < {-atol:g}")
        total += m
    if isinstance(device, MeasurementDevice):
        dev = float(np.max(np.abs(total - np.eye(dim)), initial=0.0))
        if dev > atol:
            problems.append(f"elements do not sum to identity (max deviation {dev:.3g} > {atol:g})")
    else:
        tr = float(np.real(np.trace(total)))
        if abs(tr - 1.0) > atol:
            problems.append(f"element traces sum to {tr:.12g}, not 1")
    return problems


def prior_probability(device: PreparationDevice, outcome: str) -> float:
    try:
        op = device.elements[outcome]
    except KeyError:
        raise KeyError(f"unknown preparation outcome {outcome!r}") from None
    return float(np.real(op.trace))


def pure_preparation(state: FockVector, weight: float = 1.0) -> OperatorMatrix:
    """weight * |p><p| for a normalized state |p>."""
    if not state.is_normalized(PHYSICS_ATOL):
        raise ValueError(f"state must be normalized (norm^2 = {state.norm**2:.12g})")
    if not 0.0 < weight <= 1.0:
        raise ValueError(f"weight {weight} outside (0, 1]")
    return weight * OperatorMatrix.projector(state)


def combine_with_unitary(device: Device, u: OperatorMatrix, side: Side) -> Device:
    """Absorb ``u`` into the device.

    A preparation followed by ``u`` has elements U L U†; a measurement preceded
    by ``u`` has elements U† P U.
    """
    if u.register != device.register:
        raise RegisterMismatch(f"unitary on {u.register}, device on {device.register}")
    if not u.is_unitary(PHYSICS_ATOL):
        raise ValueError("combine_with_unitary needs a unitary")
    m, md = u.matrix, u.matrix.conj().T
    if side is Side.AFTER_PREPARATION:
        if not isinstance(device, PreparationDevice):
            raise TypeError("only a preparation device can absorb a unitary after it")
        return PreparationDevice(
            device.register,
            {k: OperatorMatrix(device.register, m @ op.matrix @ md) for k, op in device.elements.items()},
        )
    if not isinstance(device, MeasurementDevice):
        raise TypeError("only a measurement device can absorb a unitary before it")
    return MeasurementDevice(
        device.register,
        {k: OperatorMatrix(device.register, md @ op.matrix @ m) for k, op in device.elements.items()},
    )


def outcome_label(counts: Mapping[str, int]) -> str:
    """Encode detector counts as an outcome id, e.g. ``"D0=0,D1=1"``."""
    return ",".join(f"{name}={n}" for name, n in counts.items())


def parse_outcome_label(label: str) -> dict[str, int]:
    out = {}
    for part in label.split(","):
        name, _, n = part.partition("=")
        out[name] = int(n)
    return out


def photon_counting_pom(
    register: ModeRegister, detectors: Mapping[str, str], max_count: int | None = None
) -> MeasurementDevice:
    """Joint photon-number-resolving POM for ``{detector name: mode}``.

    Undetected modes are left alone (identity). Count patterns above
    ``max_count`` per detector are lumped into a catch-all :data:`OVERFLOW`
    element, present only when it is nonzero.
    """
    names = list(detectors)
    pos = [register.position(detectors[n]) for n in names]
    if len(set(pos)) != len(pos):
        raise ValueError("two detectors on the same mode")
    cap = register.max_total_photons if max_count is None else max_count
    dim = register.dim
    elements: dict[str, OperatorMatrix] = {}
    covered = np.zeros(dim, dtype=bool)
    for counts in itertools.product(range(cap + 1), repeat=len(names)):
        if sum(counts) > register.max_total_photons:
            continue
        diag = np.array([all(occ[p] == c for p, c in zip(pos, counts)) for occ in register.basis])
        covered |= diag
        elements[outcome_label(dict(zip(names, counts)))] = OperatorMatrix(register, np.diag(diag.astype(complex)))
    if not covered.all():
        elements[OVERFLOW] = OperatorMatrix(register, np.diag((~covered).astype(complex)))
    return MeasurementDevice(register, elements)
