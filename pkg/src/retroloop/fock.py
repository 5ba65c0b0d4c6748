"""Occupation-number basis, state vectors and operators on a truncated Fock space.

A :class:`ModeRegister` fixes an ordered set of optical modes and a bound on
the total photon number. Every other object in the package is a dense numpy
array indexed by the register's basis, which is the lexicographically ordered
list of occupation tuples whose sum does not exceed the bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

ATOL = 1e-12
PHYSICS_ATOL = 1e-9
# squared norm below which a projection is treated as an impossible outcome
DEGENERATE_NORM2 = 1e-12


class Direction(Enum):
    PREDICTIVE = "predictive"
    RETRODICTIVE = "retrodictive"


class RegisterMismatch(ValueError):
    pass


class DirectionError(ValueError):
    pass


class ImpossibleOutcome(ValueError):
    """Conditioning on an outcome whose probability is zero.

    ``norm`` is the amplitude norm the projection produced (below threshold).
    """

    def __init__(self, message: str, norm: float = 0.0):
        super().__init__(message)
        self.norm = norm

    @property
    def probability(self) -> float:
        return self.norm**2


@dataclass(frozen=True)
class ModeRegister:
    modes: tuple[str, ...]
    max_total_photons: int = 2

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        for m in modes:
            if not isinstance(m, str) or not m:
                raise ValueError(f"mode labels must be nonempty strings, got {m!r}")
        if len(set(modes)) != len(modes):
            raise ValueError(f"duplicate mode labels in {modes}")
        if int(self.max_total_photons) != self.max_total_photons or self.max_total_photons < 0:
            raise ValueError("max_total_photons must be a non-negative integer")

    @cached_property
    def basis(self) -> tuple[tuple[int, ...], ...]:
        n = self.max_total_photons
        return tuple(
            occ for occ in itertools.product(range(n + 1), repeat=len(self.modes)) if sum(occ) <= n
        )

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {occ: k for k, occ in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, occupation: Sequence[int] | Mapping[str, int]) -> int:
        occ = self._as_tuple(occupation)
        try:
            return self._index[occ]
        except KeyError:
            raise ValueError(f"{occ} is not in the basis of {self}") from None

    def find(self, occupation: tuple[int, ...]) -> int | None:
        return self._index.get(occupation)

    def position(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise RegisterMismatch(f"unknown mode {mode!r}; register has {self.modes}") from None

    def subregister(self, modes: Iterable[str], max_total_photons: int | None = None) -> ModeRegister:
        modes = tuple(modes)
        for m in modes:
            self.position(m)
        n = self.max_total_photons if max_total_photons is None else max_total_photons
        return ModeRegister(modes, n)

    def label(self, occupation: Sequence[int]) -> str:
        return ",".join(f"{m}={n}" for m, n in zip(self.modes, occupation))

    def _as_tuple(self, occupation) -> tuple[int, ...]:
        if isinstance(occupation, Mapping):
            unknown = set(occupation) - set(self.modes)
            if unknown:
                raise RegisterMismatch(f"unknown modes {sorted(unknown)}")
            return tuple(int(occupation.get(m, 0)) for m in self.modes)
        occ = tuple(int(n) for n in occupation)
        if len(occ) != len(self.modes):
            raise ValueError(f"occupation {occ} does not match {len(self.modes)} modes")
        return occ


def enumerate_basis(register: ModeRegister) -> list[tuple[int, ...]]:
    return list(register.basis)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FockVector:
    """Pure state amplitudes over ``register.basis``.

    ``direction`` never changes the numbers; it only controls which evolution
    routines accept the vector.
    """

    register: ModeRegister
    amplitudes: np.ndarray
    direction: Direction = Direction.PREDICTIVE

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.register.dim,):
            raise ValueError(f"expected {self.register.dim} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, register, occupation, direction=Direction.PREDICTIVE) -> FockVector:
        amps = np.zeros(register.dim, dtype=complex)
        amps[register.index(occupation)] = 1.0
        return cls(register, amps, direction)

    @classmethod
    def from_components(cls, register, components: Mapping, direction=Direction.PREDICTIVE) -> FockVector:
        """Build from ``{occupation tuple: amplitude}``."""
        amps = np.zeros(register.dim, dtype=complex)
        for occ, amp in components.items():
            amps[register.index(occ)] += amp
        return cls(register, amps, direction)

    @property
    def modes(self) -> tuple[str, ...]:
        return self.register.modes

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, atol: float = ATOL) -> bool:
        return abs(self.norm**2 - 1.0) <= atol

    def amplitude(self, occupation) -> complex:
        return complex(self.amplitudes[self.register.index(occupation)])

    def normalized(self) -> FockVector:
        n = self.norm
        if n**2 < DEGENERATE_NORM2:
            raise ImpossibleOutcome("cannot normalize a zero vector", n)
        return FockVector(self.register, self.amplitudes / n, self.direction)

    def with_direction(self, direction: Direction) -> FockVector:
        return FockVector(self.register, self.amplitudes, direction)

    def __mul__(self, scalar) -> FockVector:
        return FockVector(self.register, self.amplitudes * complex(scalar), self.direction)

    __rmul__ = __mul__

    def __add__(self, other: FockVector) -> FockVector:
        _check_same(self, other)
        if other.direction is not self.direction:
            raise DirectionError("cannot add predictive and retrodictive vectors")
        return FockVector(self.register, self.amplitudes + other.amplitudes, self.direction)

    def __sub__(self, other: FockVector) -> FockVector:
        return self + (-1) * other

    def __repr__(self):
        terms = [
            f"({a:.4g})|{self.register.label(occ)}>"
            for occ, a in zip(self.register.basis, self.amplitudes)
            if abs(a) > 1e-14
        ]
        return f"FockVector[{self.direction.value}]({' + '.join(terms) or '0'})"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    register: ModeRegister
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.register.dim
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, register: ModeRegister) -> OperatorMatrix:
        return cls(register, np.eye(register.dim))

    @classmethod
    def projector(cls, state: FockVector) -> OperatorMatrix:
        v = state.amplitudes
        return cls(state.register, np.outer(v, v.conj()))

    @property
    def dagger(self) -> OperatorMatrix:
        return OperatorMatrix(self.register, self.matrix.conj().T)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __matmul__(self, other: OperatorMatrix) -> OperatorMatrix:
        _check_same(self, other)
        return OperatorMatrix(self.register, self.matrix @ other.matrix)

    def __mul__(self, scalar) -> OperatorMatrix:
        return OperatorMatrix(self.register, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __add__(self, other: OperatorMatrix) -> OperatorMatrix:
        _check_same(self, other)
        return OperatorMatrix(self.register, self.matrix + other.matrix)

    def __sub__(self, other: OperatorMatrix) -> OperatorMatrix:
        _check_same(self, other)
        return OperatorMatrix(self.register, self.matrix - other.matrix)

    def is_unitary(self, atol: float = ATOL) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(len(m))), initial=0.0) <= atol)

    def is_hermitian(self, atol: float = ATOL) -> bool:
        m = self.matrix
        return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= atol)

    def min_eigenvalue(self) -> float:
        h = (self.matrix + self.matrix.conj().T) / 2
        return float(np.linalg.eigvalsh(h)[0])


@dataclass(frozen=True, eq=False)
class DensityOperator:
    register: ModeRegister
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.register.dim
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, state: FockVector) -> DensityOperator:
        v = state.amplitudes
        return cls(state.register, np.outer(v, v.conj()))

    @classmethod
    def mixture(cls, register: ModeRegister, weighted: Iterable[tuple[float, FockVector]]) -> DensityOperator:
        m = np.zeros((register.dim, register.dim), dtype=complex)
        for p, v in weighted:
            if v.register != register:
                raise RegisterMismatch(f"{v.register} differs from {register}")
            m += p * np.outer(v.amplitudes, v.amplitudes.conj())
        return cls(register, m)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)

    def is_valid(self, atol: float = PHYSICS_ATOL, normalized: bool = True) -> bool:
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T), initial=0.0) <= atol
        pos = self.eigenvalues()[0] >= -atol if self.register.dim else True
        tr = abs(self.trace - 1.0) <= atol if normalized else True
        return bool(herm and pos and tr)


def _check_same(x, y):
    if x.register != y.register:
        raise RegisterMismatch(f"register mismatch: {x.register} vs {y.register}")


def _aligned(x: FockVector, y: FockVector) -> tuple[np.ndarray, np.ndarray]:
    if x.register == y.register:
        return x.amplitudes, y.amplitudes
    if x.register.modes != y.register.modes:
        raise RegisterMismatch(f"register mismatch: {x.register.modes} vs {y.register.modes}")
    # same modes, different truncation: compare on the larger basis
    big = x.register if x.register.dim >= y.register.dim else y.register
    return embed(x, big).amplitudes, embed(y, big).amplitudes


def inner_product(x: FockVector, y: FockVector) -> complex:
    """<x|y>, conjugate-linear in ``x``."""
    a, b = _aligned(x, y)
    return complex(np.vdot(a, b))


def overlap_up_to_phase(x: FockVector, y: FockVector) -> float:
    return float(min(1.0, abs(inner_product(x, y))))


class Projection(NamedTuple):
    state: FockVector | None
    norm: float

    @property
    def probability(self) -> float:
        return self.norm**2


def project_and_renormalize(bra: FockVector, joint: FockVector) -> Projection:
    """Partial inner product of ``bra`` (on a subset of modes) with ``joint``.

    Returns the renormalized remainder on the leftover modes together with the
    norm it had before renormalization. ``state`` is ``None`` when the squared
    norm is below :data:`DEGENERATE_NORM2`. The global phase is left as computed.
    """
    jreg = joint.register
    s_pos = [jreg.position(m) for m in bra.modes]
    t_modes = tuple(m for m in jreg.modes if m not in bra.modes)
    t_pos = [jreg.position(m) for m in t_modes]
    out_reg = ModeRegister(t_modes, jreg.max_total_photons)
    out = np.zeros(out_reg.dim, dtype=complex)
    bra_amps = bra.amplitudes.conj()
    for k, occ in enumerate(jreg.basis):
        amp = joint.amplitudes[k]
        if amp == 0:
            continue
        j = bra.register.find(tuple(occ[p] for p in s_pos))
        if j is None:
            continue
        out[out_reg.index(tuple(occ[p] for p in t_pos))] += bra_amps[j] * amp
    norm = float(np.linalg.norm(out))
    if norm**2 < DEGENERATE_NORM2:
        return Projection(None, norm)
    return Projection(FockVector(out_reg, out / norm, joint.direction), norm)


def _split_indices(register: ModeRegister, keep: Sequence[str]):
    k_pos = [register.position(m) for m in keep]
    t_pos = [p for p in range(len(register.modes)) if p not in k_pos]
    return k_pos, t_pos


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    reg = rho.register
    keep_set = set(keep)
    if not keep_set:
        raise ValueError("keep must name at least one mode")
    keep = tuple(m for m in reg.modes if m in keep_set)
    if len(keep) != len(keep_set):
        raise RegisterMismatch(f"unknown modes {sorted(keep_set - set(reg.modes))}")
    k_pos, t_pos = _split_indices(reg, keep)
    out_reg = ModeRegister(keep, reg.max_total_photons)
    groups: dict[tuple[int, ...], tuple[list[int], list[int]]] = {}
    for idx, occ in enumerate(reg.basis):
        full, kept = groups.setdefault(tuple(occ[p] for p in t_pos), ([], []))
        full.append(idx)
        kept.append(out_reg.index(tuple(occ[p] for p in k_pos)))
    out = np.zeros((out_reg.dim, out_reg.dim), dtype=complex)
    for full, kept in groups.values():
        out[np.ix_(kept, kept)] += rho.matrix[np.ix_(full, full)]
    return DensityOperator(out_reg, out)


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    _check_same(rho, sigma)
    diff = rho.matrix - sigma.matrix
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def tensor(x: FockVector, y: FockVector, register: ModeRegister | None = None) -> FockVector:
    """Product state on the concatenated modes of ``x`` and ``y``."""
    if set(x.modes) & set(y.modes):
        raise RegisterMismatch(f"modes overlap: {x.modes} and {y.modes}")
    if register is None:
        register = ModeRegister(
            x.modes + y.modes, x.register.max_total_photons + y.register.max_total_photons
        )
    elif set(register.modes) != set(x.modes + y.modes):
        raise RegisterMismatch(f"{register.modes} is not the union of {x.modes} and {y.modes}")
    order = [register.position(m) for m in x.modes + y.modes]
    out = np.zeros(register.dim, dtype=complex)
    for i, ox in enumerate(x.register.basis):
        for j, oy in enumerate(y.register.basis):
            amp = x.amplitudes[i] * y.amplitudes[j]
            if amp == 0:
                continue
            occ = [0] * len(order)
            for p, n in zip(order, ox + oy):
                occ[p] = n
            k = register.find(tuple(occ))
            if k is None:
                raise ValueError(f"component {tuple(occ)} exceeds truncation of {register}")
            out[k] = amp
    return FockVector(register, out, x.direction)


def embed(x: FockVector, register: ModeRegister) -> FockVector:
    """Re-express ``x`` on ``register``, which must hold the same modes in any order."""
    if set(register.modes) != set(x.modes):
        raise RegisterMismatch(f"{register.modes} and {x.modes} hold different modes")
    perm = [x.register.position(m) for m in register.modes]
    out = np.zeros(register.dim, dtype=complex)
    for i, occ in enumerate(x.register.basis):
        if x.amplitudes[i] == 0:
            continue
        k = register.find(tuple(occ[p] for p in perm))
        if k is None:
            raise ValueError(f"component {occ} exceeds truncation of {register}")
        out[k] = x.amplitudes[i]
    return FockVector(register, out, x.direction)


def relabel(x: FockVector, mapping: Mapping[str, str]) -> FockVector:
    modes = tuple(mapping.get(m, m) for m in x.modes)
    reg = ModeRegister(modes, x.register.max_total_photons)
    return FockVector(reg, x.amplitudes, x.direction)


def canonical_phase(x: FockVector, atol: float = 1e-12) -> FockVector:
    """Multiply by the global phase that makes the first significant amplitude real positive."""
    for a in x.amplitudes:
        if abs(a) > atol:
            return x * (abs(a) / a)
    return x


def number_operator(register: ModeRegister, modes: Iterable[str] | None = None) -> np.ndarray:
    pos = [register.position(m) for m in (register.modes if modes is None else modes)]
    return np.diag([float(sum(occ[p] for p in pos)) for occ in register.basis])
