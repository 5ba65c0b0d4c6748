"""Passive optical elements as unitaries on a truncated Fock space.

Every element is specified by how it maps single-mode creation operators.
The beam splitter convention is symmetric with a factor ``i`` on reflection::

    a1† -> sqrt(1-r) a1† + i sqrt(r) a2†
    a2† -> i sqrt(r) a1† + sqrt(1-r) a2†

Multi-photon matrix elements come from expanding the image of the creation
monomial that builds each basis state, which is exact because passive optics
conserves photon number and so never leaves the truncated space.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .fock import Direction, DirectionError, FockVector, ModeRegister, OperatorMatrix

T_PREPARATION = "t_p"
T_MEASUREMENT = "t_m"

_TWO_PI = 2 * math.pi


def exp_i_pi(q: Fraction) -> complex:
    """exp(i*pi*q), exact when q is a multiple of 1/2."""
    q = Fraction(q) % 2
    exact = {Fraction(0): 1 + 0j, Fraction(1, 2): 1j, Fraction(1): -1 + 0j, Fraction(3, 2): -1j}
    if q in exact:
        return exact[q]
    return cmath.exp(1j * math.pi * float(q))


@dataclass(frozen=True)
class BeamSplitter:
    mode1: str
    mode2: str
    reflectivity: float = 0.5

    def __post_init__(self):
        if self.mode1 == self.mode2:
            raise ValueError("a beam splitter needs two distinct modes")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity {self.reflectivity} outside [0, 1]")

    @property
    def modes(self) -> tuple[str, str]:
        return (self.mode1, self.mode2)

    def single_particle(self) -> np.ndarray:
        t = math.sqrt(1.0 - self.reflectivity)
        r = 1j * math.sqrt(self.reflectivity)
        return np.array([[t, r], [r, t]])


@dataclass(frozen=True)
class PhaseShifter:
    """Phase ``phi`` per photon in ``mode``.

    ``pi_fraction`` gives the angle as an exact multiple of pi when known; it
    then takes precedence over ``phi`` when building the matrix.
    """

    mode: str
    phi: float
    pi_fraction: Fraction | None = None

    def __post_init__(self):
        if self.pi_fraction is not None:
            q = Fraction(self.pi_fraction) % 2
            object.__setattr__(self, "pi_fraction", q)
            object.__setattr__(self, "phi", float(q) * math.pi)
        else:
            if not math.isfinite(self.phi):
                raise ValueError("phase must be finite")
            object.__setattr__(self, "phi", float(self.phi) % _TWO_PI)

    @classmethod
    def pi_multiple(cls, mode: str, q) -> PhaseShifter:
        return cls(mode, float(Fraction(q)) * math.pi, Fraction(q))

    @property
    def modes(self) -> tuple[str]:
        return (self.mode,)

    def single_particle(self) -> np.ndarray:
        if self.pi_fraction is not None:
            return np.array([[exp_i_pi(self.pi_fraction)]])
        return np.array([[cmath.exp(1j * self.phi)]])


@dataclass(frozen=True)
class Propagation:
    """Free propagation along ``mode`` over ``wavelengths`` optical wavelengths.

    Only the fractional part matters; whole wavelengths are the identity.
    """

    mode: str
    wavelengths: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.wavelengths):
            raise ValueError("path length must be finite")

    @property
    def modes(self) -> tuple[str]:
        return (self.mode,)

    @property
    def fraction(self) -> float:
        return self.wavelengths % 1.0

    def single_particle(self) -> np.ndarray:
        frac = self.fraction
        if frac == 0.0:
            return np.array([[1.0 + 0j]])
        return np.array([[cmath.exp(1j * _TWO_PI * frac)]])


OpticalElement = Union[BeamSplitter, PhaseShifter, Propagation]


@dataclass(frozen=True)
class ScheduleStep:
    element: OpticalElement
    time: str = ""


@dataclass(frozen=True)
class UnitarySchedule:
    """Elements in time order, earliest first."""

    steps: tuple[ScheduleStep, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @classmethod
    def of(cls, *elements: OpticalElement) -> UnitarySchedule:
        return cls(tuple(ScheduleStep(e) for e in elements))

    @property
    def elements(self) -> tuple[OpticalElement, ...]:
        return tuple(s.element for s in self.steps)


def _expand(register: ModeRegister, columns: dict[int, dict[int, complex]], occ) -> dict:
    """Image of the (unnormalized) creation monomial for ``occ`` as {occupation: coeff}."""
    poly = {tuple([0] * len(occ)): 1.0 + 0j}
    for k, n in enumerate(occ):
        image = columns.get(k, {k: 1.0})
        for _ in range(n):
            nxt: dict[tuple[int, ...], complex] = {}
            for mono, c in poly.items():
                for l, u in image.items():
                    if u == 0:
                        continue
                    m = list(mono)
                    m[l] += 1
                    m = tuple(m)
                    nxt[m] = nxt.get(m, 0) + c * u
            poly = nxt
    return poly


@lru_cache(maxsize=4096)
def _element_matrix(element: OpticalElement, register: ModeRegister) -> np.ndarray:
    pos = [register.position(m) for m in element.modes]
    sp = element.single_particle()
    columns = {k: {l: sp[b, a] for b, l in enumerate(pos)} for a, k in enumerate(pos)}
    dim = register.dim
    u = np.zeros((dim, dim), dtype=complex)
    fact = [math.factorial(n) for n in range(register.max_total_photons + 1)]
    for col, occ in enumerate(register.basis):
        norm_in = math.sqrt(math.prod(fact[n] for n in occ))
        for mono, c in _expand(register, columns, occ).items():
            u[register.index(mono), col] += c * math.sqrt(math.prod(fact[n] for n in mono)) / norm_in
    u.setflags(write=False)
    return u


def build_element_unitary(element: OpticalElement, register: ModeRegister) -> OperatorMatrix:
    return OperatorMatrix(register, _element_matrix(element, register))


def compose_schedule(schedule: UnitarySchedule | Sequence[OpticalElement], register: ModeRegister) -> OperatorMatrix:
    """Product of the element unitaries with later elements on the left."""
    if not isinstance(schedule, UnitarySchedule):
        schedule = UnitarySchedule.of(*schedule)
    u = np.eye(register.dim, dtype=complex)
    for element in schedule.elements:
        u = _element_matrix(element, register) @ u
    return OperatorMatrix(register, u)


def _check_register(u: OperatorMatrix, s: FockVector):
    if u.register != s.register:
        raise ValueError(f"operator on {u.register} cannot act on state on {s.register}")


def apply_forward(u: OperatorMatrix, s: FockVector) -> FockVector:
    if s.direction is not Direction.PREDICTIVE:
        raise DirectionError("apply_forward needs a predictive state; use apply_backward")
    _check_register(u, s)
    return FockVector(s.register, u.matrix @ s.amplitudes, s.direction)


def apply_backward(u: OperatorMatrix, s: FockVector) -> FockVector:
    """Evolve a retrodictive state back through ``u`` by applying its adjoint."""
    if s.direction is not Direction.RETRODICTIVE:
        raise DirectionError("apply_backward needs a retrodictive state; use apply_forward")
    _check_register(u, s)
    return FockVector(s.register, u.matrix.conj().T @ s.amplitudes, s.direction)


def evolve(elements: Iterable[OpticalElement], s: FockVector) -> FockVector:
    """Run ``s`` through ``elements`` in the sense its direction dictates.

    ``elements`` are listed in forward time order in both cases; a
    retrodictive state meets them last-first.
    """
    u = compose_schedule(tuple(elements), s.register)
    if s.direction is Direction.PREDICTIVE:
        return apply_forward(u, s)
    return apply_backward(u, s)
