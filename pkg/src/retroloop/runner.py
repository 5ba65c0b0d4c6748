"""Execute a parsed circuit and render the result as CSV or JSON.

The retrodictive numbers come from :mod:`retroloop.scenarios`; the
``oracle_probability`` column is always an independent forward
simulation of the circuit exactly as written in the file.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import scenarios
from .circuit import (
    BeamSplitterStmt,
    CircuitError,
    CircuitSpec,
    Diagnostic,
    PhaseStmt,
    PropagateStmt,
    SweepSpec,
    sweep_from_options,
)
from .devices import (
    OVERFLOW,
    PreparationDevice,
    outcome_label,
    parse_outcome_label,
    photon_counting_pom,
    pure_preparation,
)
from .fock import FockVector, ModeRegister
from .formalisms import ExperimentSetup, forward_distribution
from .linear_optics import BeamSplitter, PhaseShifter, Propagation, apply_forward, compose_schedule

TABLE_SCHEMA = "retroloop.table/1"
MAX_DIM = 20000
KINDS = ("str", "int", "float", "complex")


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    kinds: tuple[str, ...]
    rows: tuple[tuple, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(self.columns) != len(self.kinds) or any(k not in KINDS for k in self.kinds):
            raise ValueError("each column needs one kind out of " + ", ".join(KINDS))
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row {r} does not have {len(self.columns)} cells")

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def _fail(spec: CircuitSpec, message: str, line: int | None = None):
    if line is None:
        line = spec.scenario.line if spec.scenario else spec.modes.line
    raise CircuitError([Diagnostic(line or 1, 1, message)])


# --- building blocks ---------------------------------------------------------


def _register(spec: CircuitSpec) -> ModeRegister:
    reg = spec.register
    n, m = reg.max_total_photons, len(reg.modes)
    if math.comb(n + m, m) > MAX_DIM:
        _fail(spec, f"truncated space too large ({n} photons in {m} modes)", spec.modes.line)
    return reg


def _element(stmt, phi: float | None = None):
    if isinstance(stmt, BeamSplitterStmt):
        return BeamSplitter(stmt.mode1, stmt.mode2, stmt.reflectivity)
    if isinstance(stmt, PhaseStmt):
        if phi is not None:
            return PhaseShifter(stmt.mode, phi)
        return PhaseShifter(stmt.mode, stmt.angle.radians, stmt.angle.pi_fraction)
    return Propagation(stmt.mode, stmt.wavelengths.real)


def initial_state(spec: CircuitSpec, register: ModeRegister) -> FockVector:
    """Product of the per-mode preparations; unprepared modes start in vacuum."""
    single = {m: {0: 1.0 + 0j} for m in register.modes}
    for p in spec.preparations:
        if p.kind == "photons":
            single[p.mode] = {p.photons: 1.0 + 0j}
        elif p.kind == "superpose":
            single[p.mode] = {0: p.a0.value, 1: p.a1.value}
    amps = np.zeros(register.dim, dtype=complex)
    total = 0.0
    for k, occ in enumerate(register.basis):
        a = 1.0 + 0j
        for m, n in zip(register.modes, occ):
            a *= single[m].get(n, 0.0)
        amps[k] = a
        total += abs(a) ** 2
    if abs(total - 1.0) > 1e-9:
        _fail(spec, "prepared photons exceed the declared max_photons truncation", spec.modes.line)
    return FockVector(register, amps)


def forward_setup(spec: CircuitSpec, phi: float | None = None) -> ExperimentSetup:
    reg = _register(spec)
    state = initial_state(spec, reg)
    u = compose_schedule([_element(s, phi) for s in spec.elements], reg)
    pom = photon_counting_pom(reg, {d.name: d.mode for d in spec.detectors})
    return ExperimentSetup(PreparationDevice(reg, {"prep": pure_preparation(state)}), u, pom)


# --- scenarios ---------------------------------------------------------------


def run_forward(spec: CircuitSpec) -> Table:
    reg = _register(spec)
    u = compose_schedule([_element(s) for s in spec.elements], reg)
    out = apply_forward(u, initial_state(spec, reg))
    rows = [
        (reg.label(occ), complex(a), abs(a) ** 2)
        for occ, a in zip(reg.basis, out.amplitudes)
        if abs(a) ** 2 > 1e-24
    ]
    return Table(("state", "amplitude", "probability"), ("str", "complex", "float"), rows)


def _two_splitters(spec: CircuitSpec) -> tuple[BeamSplitterStmt, BeamSplitterStmt]:
    bss = [s for s in spec.elements if isinstance(s, BeamSplitterStmt)]
    if len(bss) != 2:
        _fail(spec, f"{spec.scenario.kind} needs exactly two beam splitters, found {len(bss)}")
    for bs in bss:
        if abs(bs.reflectivity - 0.5) > 1e-12:
            _fail(spec, f"{spec.scenario.kind} needs 50/50 beam splitters; {bs.name} has r={bs.reflectivity:g}", bs.line)
    return bss[0], bss[1]


def _detector_on(spec: CircuitSpec, mode: str) -> str:
    for d in spec.detectors:
        if d.mode == mode:
            return d.name
    _fail(spec, f"no detector on mode {mode!r}")


def _marginal(distribution: dict[str, float], counts: dict[str, int]) -> float:
    """Total probability of the POM outcomes that agree with ``counts``."""
    total = 0.0
    for key, p in distribution.items():
        if key == OVERFLOW:
            continue
        full = parse_outcome_label(key)
        if all(full.get(name) == n for name, n in counts.items()):
            total += p
    return total


def _other(bs: BeamSplitterStmt, mode: str) -> str:
    return bs.mode2 if bs.mode1 == mode else bs.mode1


def run_backward_channel(spec: CircuitSpec) -> Table:
    """Map the file's modes onto the a/b/c layout and report every detector record."""
    sup = [p for p in spec.preparations if p.kind == "superpose"]
    if len(sup) != 1:
        _fail(spec, "backward-channel needs exactly one 'prepare <mode> superpose' statement")
    a = sup[0].mode
    first, second = _two_splitters(spec)
    if a in (second.mode1, second.mode2):
        upper, lower = second, first
    elif a in (first.mode1, first.mode2):
        upper, lower = first, second
    else:
        _fail(spec, f"mode {a!r} must enter one of the beam splitters")
    b = _other(upper, a)
    if b not in (lower.mode1, lower.mode2):
        _fail(spec, "the two beam splitters must share one mode")
    c = _other(lower, b)
    photons = {p.mode: p for p in spec.preparations}
    if photons.get(c) is None or photons[c].kind != "photons" or photons[c].photons != 1:
        _fail(spec, f"mode {c!r} must be prepared with photons=1")
    if b in photons and photons[b].kind != "vacuum":
        _fail(spec, f"mode {b!r} must start in vacuum", photons[b].line)
    length = sum(s.wavelengths.real for s in spec.elements if isinstance(s, PropagateStmt) and s.mode == b)
    d0, d1 = _detector_on(spec, a), _detector_on(spec, b)

    config = scenarios.TimeMachineConfig(sup[0].a0.value, sup[0].a1.value, length)
    report = scenarios.backward_channel(config)
    oracle = forward_distribution(forward_setup(spec), "prep")
    rows = []
    for rec in report.records:
        counts = {d0: rec.counts[0], d1: rec.counts[1]}
        out0, out1 = (rec.out_state.amplitudes if rec.out_state is not None else (0j, 0j))
        rows.append((outcome_label(counts), rec.probability, _marginal(oracle, counts), complex(out0), complex(out1)))
    return Table(
        ("outcome", "probability", "oracle_probability", "out_0", "out_1"),
        ("str", "float", "float", "complex", "complex"),
        rows,
    )


def run_cycle(spec: CircuitSpec, sweep: SweepSpec | None) -> Table:
    phases = [s for s in spec.elements if isinstance(s, PhaseStmt)]
    if len(phases) != 1:
        _fail(spec, f"cycle needs exactly one phase statement, found {len(phases)}")
    shifter = phases[0]
    first, second = _two_splitters(spec)
    if shifter.mode not in (first.mode1, first.mode2) or shifter.mode not in (second.mode1, second.mode2):
        _fail(spec, "the phase shifter must sit on a mode shared by both beam splitters", shifter.line)
    feedback, direct = shifter.mode, _other(first, shifter.mode)
    if _other(second, feedback) != direct:
        _fail(spec, "both beam splitters must act on the same two modes")
    d0, d1 = _detector_on(spec, feedback), _detector_on(spec, direct)

    phis = sweep.grid() if sweep is not None else [None]
    rows = []
    for phi in phis:
        oracle = forward_distribution(forward_setup(spec, phi), "prep")
        value = shifter.angle.radians if phi is None else phi
        report = scenarios.cycle_analysis(scenarios.ClosedCycleConfig(value))
        for rec in report.records:
            counts = {d0: rec.counts[0], d1: rec.counts[1]}
            rows.append(
                (value, outcome_label(counts), rec.cycle_probability, _marginal(oracle, counts), rec.consistency.value)
            )
    return Table(
        ("phi", "outcome", "cycle_probability", "oracle_probability", "verdict"),
        ("float", "str", "float", "float", "str"),
        rows,
    )


def run(spec: CircuitSpec, sweep: SweepSpec | None = None) -> Table:
    kind = spec.scenario.kind if spec.scenario else "forward"
    if kind == "sweep":
        if sweep is None:
            sweep = sweep_from_options(dict(spec.scenario.options))
        return run_cycle(spec, sweep)
    if sweep is not None and kind != "cycle":
        _fail(spec, f"a phi sweep applies to cycle scenarios, not {kind}")
    if kind == "forward":
        return run_forward(spec)
    if kind == "backward-channel":
        return run_backward_channel(spec)
    return run_cycle(spec, sweep)


# --- output ------------------------------------------------------------------


def _fmt_real(x: float) -> str:
    x = float(x)
    return format(0.0 if x == 0 else x, ".12g")


def format_complex(z: complex) -> str:
    re_, im = _fmt_real(z.real), _fmt_real(z.imag)
    return f"{re_}{'' if im.startswith('-') else '+'}{im}i"


def parse_complex(text: str) -> complex:
    return complex(text.replace("i", "j"))


def _cell(value, kind: str) -> str:
    if kind == "complex":
        return format_complex(complex(value))
    if kind == "float":
        return _fmt_real(value)
    return str(value)


def emit(table: Table, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_cell(v, k) for v, k in zip(row, table.kinds)])
        return buf.getvalue()
    if fmt == "json":
        rows = [
            [format_complex(complex(v)) if k == "complex" else v for v, k in zip(row, table.kinds)]
            for row in table.rows
        ]
        doc: dict[str, Any] = {
            "schema": TABLE_SCHEMA,
            "columns": [{"name": c, "kind": k} for c, k in zip(table.columns, table.kinds)],
            "rows": rows,
        }
        return json.dumps(doc, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def load_json(text: str) -> Table:
    doc = json.loads(text)
    if doc.get("schema") != TABLE_SCHEMA:
        raise ValueError(f"unsupported table schema {doc.get('schema')!r}")
    kinds = [c["kind"] for c in doc["columns"]]
    conv = {"str": str, "int": int, "float": float, "complex": parse_complex}
    rows = [tuple(conv[k](v) for v, k in zip(row, kinds)) for row in doc["rows"]]
    return Table(tuple(c["name"] for c in doc["columns"]), tuple(kinds), tuple(rows))
