"""Line-oriented circuit description files.

Grammar, one statement per line, ``#`` starts a comment::

    modes <label>... [max_photons=<n>]
    prepare <mode> vacuum
    prepare <mode> photons=<n>
    prepare <mode> superpose a0=<complex> a1=<complex>
    beamsplitter <name> <mode1> <mode2> [r=<real>]
    phase <mode> <angle>
    propagate <mode> wavelengths=<real>
    detect <mode> <name>
    scenario <forward|backward-channel|cycle|sweep> [key=value]...

Numbers are small expressions over ``+ - * / ^``, parentheses, ``pi``, the
imaginary unit ``i`` (also as a suffix, ``0.5+0.5i``), and the functions
``sqrt``, ``exp``, ``cos``, ``sin``. Angles of the form ``k*pi/n`` keep their
exact rational multiple of pi.

:func:`parse_circuit` never raises anything but :class:`CircuitError`, which
carries one :class:`Diagnostic` (line, column, message) per problem found.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .fock import ModeRegister

SCENARIO_KINDS = ("forward", "backward-channel", "cycle", "sweep")
SCENARIO_KEYS = {
    "forward": (),
    "backward-channel": (),
    "cycle": (),
    "sweep": ("param", "start", "end", "steps"),
}
MAX_NESTING = 32


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def format(self, source: str = "<circuit>") -> str:
        return f"{source}:{self.line}:{self.column}: error: {self.message}"


class CircuitError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.format() for d in self.diagnostics))


class ExpressionError(ValueError):
    def __init__(self, message: str, offset: int = 0):
        super().__init__(message)
        self.offset = offset


# --- expressions -------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)(?P<imag>i(?![A-Za-z_]))?|(?P<name>[A-Za-z_]+)|(?P<op>[-+*/^()]))")
_FUNCS = {"sqrt": cmath.sqrt, "exp": cmath.exp, "cos": cmath.cos, "sin": cmath.sin}


class _ExprParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ExpressionError(f"unexpected character {text[pos]!r}", pos)
            start = m.start(m.lastgroup) if m.lastgroup else pos
            if m.group("num") is not None:
                value = float(m.group("num"))
                self.tokens.append(("num", value * 1j if m.group("imag") else complex(value), m.start("num")))
            elif m.group("name") is not None:
                self.tokens.append(("name", m.group("name"), start))
            else:
                self.tokens.append(("op", m.group("op"), start))
            pos = m.end()
        self.k = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.k] if self.k < len(self.tokens) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.k += 1
        return tok

    def parse(self) -> complex:
        if not self.tokens:
            raise ExpressionError("empty expression")
        value = self.sum()
        kind, tok, off = self.peek()
        if kind is not None:
            raise ExpressionError(f"unexpected {tok!r}", off)
        return value

    def sum(self) -> complex:
        value = self.product()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.product()
            value = value + rhs if op == "+" else value - rhs
        return value

    def product(self) -> complex:
        value = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            _, op, off = self.take()
            rhs = self.unary()
            if op == "/":
                if rhs == 0:
                    raise ExpressionError("division by zero", off)
                value = value / rhs
            else:
                value = value * rhs
        return value

    def unary(self) -> complex:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> complex:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            _, _, off = self.take()
            exponent = self.unary()
            try:
                return base**exponent
            except (ZeroDivisionError, OverflowError) as exc:
                raise ExpressionError(str(exc), off) from None
        return base

    def atom(self) -> complex:
        kind, tok, off = self.take()
        if kind == "num":
            return tok
        if kind == "name":
            if tok == "pi":
                return complex(math.pi)
            if tok == "i":
                return 1j
            if tok in _FUNCS:
                if self.peek()[:2] != ("op", "("):
                    raise ExpressionError(f"{tok} needs parentheses", off)
                arg = self.atom()
                try:
                    return _FUNCS[tok](arg)
                except (OverflowError, ValueError) as exc:
                    raise ExpressionError(f"{tok}: {exc}", off) from None
            raise ExpressionError(f"unknown name {tok!r}", off)
        if (kind, tok) == ("op", "("):
            self.depth += 1
            if self.depth > MAX_NESTING:
                raise ExpressionError("expression nested too deeply", off)
            value = self.sum()
            if self.peek()[:2] != ("op", ")"):
                raise ExpressionError("missing ')'", self.peek()[2])
            self.take()
            self.depth -= 1
            return value
        if kind is None:
            raise ExpressionError("expression ends unexpectedly", off)
        raise ExpressionError(f"unexpected {tok!r}", off)


def evaluate(text: str) -> complex:
    value = _ExprParser(text).parse()
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ExpressionError("value is not finite")
    return value


def evaluate_real(text: str) -> float:
    value = evaluate(text)
    if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        raise ExpressionError(f"expected a real number, got {value}")
    return value.real


_PI_MULTIPLE = re.compile(r"^([+-]?)(?:([0-9]+)\s*\*?\s*)?pi(?:\s*/\s*([0-9]+))?$")
_INTEGER = re.compile(r"^[+-]?[0-9]+$")
_COUNT = re.compile(r"^[0-9]+$")


def pi_fraction(text: str) -> Fraction | None:
    """Exact multiple of pi for texts like ``pi``, ``-3*pi/4``, ``2pi``, ``0``."""
    t = text.strip()
    if _INTEGER.match(t) and int(t) == 0:
        return Fraction(0)
    m = _PI_MULTIPLE.match(t)
    if not m:
        return None
    sign, num, den = m.groups()
    if den is not None and int(den) == 0:
        return None
    q = Fraction(int(num) if num else 1, int(den) if den else 1)
    return -q if sign == "-" else q


# --- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Number:
    """A literal as written, with its value."""

    text: str
    value: complex

    @classmethod
    def parse(cls, text: str) -> Number:
        return cls(text, evaluate(text))

    @property
    def real(self) -> float:
        return self.value.real


@dataclass(frozen=True)
class Angle:
    text: str
    radians: float
    pi_fraction: Fraction | None = None

    @classmethod
    def parse(cls, text: str) -> Angle:
        q = pi_fraction(text)
        if q is not None:
            return cls(text, float(q) * math.pi, q)
        return cls(text, evaluate_real(text))


@dataclass(frozen=True)
class ModesDecl:
    labels: tuple[str, ...]
    max_photons: int | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Prepare:
    mode: str
    kind: str  # vacuum | photons | superpose
    photons: int = 0
    a0: Number | None = None
    a1: Number | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BeamSplitterStmt:
    name: str
    mode1: str
    mode2: str
    r: Number | None = None
    line: int = field(default=0, compare=False)

    @property
    def reflectivity(self) -> float:
        return 0.5 if self.r is None else self.r.real


@dataclass(frozen=True)
class PhaseStmt:
    mode: str
    angle: Angle
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PropagateStmt:
    mode: str
    wavelengths: Number
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DetectStmt:
    mode: str
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ScenarioStmt:
    kind: str
    options: tuple[tuple[str, str], ...] = ()
    line: int = field(default=0, compare=False)

    def option(self, key: str, default: str | None = None) -> str | None:
        return dict(self.options).get(key, default)


Statement = Union[ModesDecl, Prepare, BeamSplitterStmt, PhaseStmt, PropagateStmt, DetectStmt, ScenarioStmt]
ElementStmt = Union[BeamSplitterStmt, PhaseStmt, PropagateStmt]


@dataclass(frozen=True)
class CircuitSpec:
    modes: ModesDecl
    statements: tuple[Statement, ...]
    scenario: ScenarioStmt | None = None

    @property
    def register(self) -> ModeRegister:
        n = self.modes.max_photons
        if n is None:
            n = max(2, sum(p.photons if p.kind == "photons" else int(p.kind == "superpose") for p in self.preparations))
        return ModeRegister(self.modes.labels, n)

    @property
    def preparations(self) -> tuple[Prepare, ...]:
        return tuple(s for s in self.statements if isinstance(s, Prepare))

    @property
    def elements(self) -> tuple[ElementStmt, ...]:
        return tuple(s for s in self.statements if isinstance(s, (BeamSplitterStmt, PhaseStmt, PropagateStmt)))

    @property
    def detectors(self) -> tuple[DetectStmt, ...]:
        return tuple(s for s in self.statements if isinstance(s, DetectStmt))


@dataclass(frozen=True)
class SweepSpec:
    start: float
    end: float
    steps: int
    parameter: str = "phi"

    def __post_init__(self):
        if self.parameter != "phi":
            raise ValueError(f"only phi can be swept, not {self.parameter!r}")
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValueError("a sweep needs at least 2 steps")
        if not self.end > self.start:
            raise ValueError("sweep end must exceed start")

    @classmethod
    def parse(cls, text: str) -> SweepSpec:
        """``phi=<start>:<end>:<steps>``"""
        name, eq, rng = text.partition("=")
        parts = rng.split(":")
        if not eq or len(parts) != 3:
            raise ValueError(f"expected phi=<start>:<end>:<steps>, got {text!r}")
        try:
            steps = int(parts[2])
        except ValueError:
            raise ValueError(f"steps must be an integer, got {parts[2]!r}") from None
        return cls(evaluate_real(parts[0]), evaluate_real(parts[1]), steps, name.strip())

    def grid(self) -> list[float]:
        span = self.end - self.start
        return [self.start + span * k / (self.steps - 1) for k in range(self.steps)]


# --- parser ------------------------------------------------------------------

_WORD = re.compile(r"\S+")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class _LineParser:
    def __init__(self, lineno: int, text: str, diags: list[Diagnostic]):
        self.lineno = lineno
        self.words = [(m.group(), m.start() + 1) for m in _WORD.finditer(text)]
        self.diags = diags
        self.ok = True

    def error(self, column: int, message: str):
        self.diags.append(Diagnostic(self.lineno, column, message))
        self.ok = False

    def end_column(self) -> int:
        if not self.words:
            return 1
        w, c = self.words[-1]
        return c + len(w)

    def keyvalue(self, word: str, col: int, key: str) -> str | None:
        k, eq, v = word.partition("=")
        if k != key or not eq:
            self.error(col, f"expected {key}=<value>, got {word!r}")
            return None
        if not v:
            self.error(col + len(k) + 1, f"missing value for {key}")
            return None
        return v

    def number(self, text: str, col: int, what: str, real: bool = False) -> Number | None:
        try:
            n = Number.parse(text)
            if real:
                evaluate_real(text)
            return n
        except ExpressionError as exc:
            self.error(col + exc.offset, f"bad {what} {text!r}: {exc}")
            return None


def parse_circuit(text: str) -> CircuitSpec:
    diags: list[Diagnostic] = []
    statements: list[Statement] = []
    modes: ModesDecl | None = None
    scenario: ScenarioStmt | None = None
    prepared: set[str] = set()
    detector_names: set[str] = set()
    element_names: set[str] = set()

    def known(p: _LineParser, mode: str, col: int) -> bool:
        if modes is None:
            p.error(col, f"mode {mode!r} used before any 'modes' declaration")
            return False
        if mode not in modes.labels:
            p.error(col, f"undeclared mode {mode!r}")
            return False
        return True

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        p = _LineParser(lineno, line, diags)
        if not p.words:
            continue
        (kw, kcol), args = p.words[0], p.words[1:]
        stmt: Statement | None = None

        if kw == "modes":
            labels, max_photons = [], None
            for w, c in args:
                if w.startswith("max_photons="):
                    v = p.keyvalue(w, c, "max_photons")
                    if v is not None:
                        if _COUNT.match(v):
                            max_photons = int(v)
                        else:
                            p.error(c, f"max_photons must be a non-negative integer, got {v!r}")
                elif not _IDENT.match(w):
                    p.error(c, f"invalid mode label {w!r}")
                elif w in labels:
                    p.error(c, f"duplicate mode {w!r}")
                else:
                    labels.append(w)
            if not labels and p.ok:
                p.error(p.end_column(), "'modes' needs at least one label")
            if modes is not None:
                p.error(kcol, f"modes already declared on line {modes.line}")
            elif p.ok:
                modes = stmt = ModesDecl(tuple(labels), max_photons, line=lineno)

        elif kw == "prepare":
            if len(args) < 2:
                p.error(p.end_column(), "usage: prepare <mode> vacuum|photons=<n>|superpose a0=<c> a1=<c>")
            else:
                (mode, mc), (kind, kc) = args[0], args[1]
                if known(p, mode, mc) and mode in prepared:
                    p.error(mc, f"mode {mode!r} prepared twice")
                if kind == "vacuum":
                    if len(args) > 2:
                        p.error(args[2][1], f"unexpected {args[2][0]!r}")
                    elif p.ok:
                        stmt = Prepare(mode, "vacuum", line=lineno)
                elif kind.startswith("photons="):
                    v = p.keyvalue(kind, kc, "photons")
                    if len(args) > 2:
                        p.error(args[2][1], f"unexpected {args[2][0]!r}")
                    elif v is not None and not _COUNT.match(v):
                        p.error(kc + len("photons="), f"photon number must be a non-negative integer, got {v!r}")
                    elif v is not None and p.ok:
                        stmt = Prepare(mode, "photons", int(v), line=lineno)
                elif kind == "superpose":
                    if len(args) != 4:
                        p.error(kc, "usage: superpose a0=<complex> a1=<complex>")
                    else:
                        (w0, c0), (w1, c1) = args[2], args[3]
                        v0, v1 = p.keyvalue(w0, c0, "a0"), p.keyvalue(w1, c1, "a1")
                        a0 = p.number(v0, c0 + 3, "amplitude") if v0 else None
                        a1 = p.number(v1, c1 + 3, "amplitude") if v1 else None
                        if a0 and a1:
                            n2 = abs(a0.value) ** 2 + abs(a1.value) ** 2
                            if abs(n2 - 1) > 1e-12:
                                p.error(c0, f"|a0|^2 + |a1|^2 = {n2:.12g}, must be 1")
                        if p.ok:
                            stmt = Prepare(mode, "superpose", 1, a0, a1, line=lineno)
                else:
                    p.error(kc, f"unknown preparation {kind!r}")
                if p.ok:
                    prepared.add(mode)

        elif kw == "beamsplitter":
            if len(args) not in (3, 4):
                p.error(p.end_column(), "usage: beamsplitter <name> <mode1> <mode2> [r=<real>]")
            else:
                (name, nc), (m1, c1), (m2, c2) = args[:3]
                if not _IDENT.match(name):
                    p.error(nc, f"invalid element name {name!r}")
                elif name in element_names:
                    p.error(nc, f"duplicate element name {name!r}")
                known(p, m1, c1)
                known(p, m2, c2)
                if m1 == m2:
                    p.error(c2, "a beam splitter needs two distinct modes")
                r = None
                if len(args) == 4:
                    w, c = args[3]
                    v = p.keyvalue(w, c, "r")
                    r = p.number(v, c + 2, "reflectivity", real=True) if v else None
                    if r is not None and not 0.0 <= r.real <= 1.0:
                        p.error(c + 2, f"reflectivity {r.real:g} outside [0, 1]")
                if p.ok:
                    element_names.add(name)
                    stmt = BeamSplitterStmt(name, m1, m2, r, line=lineno)

        elif kw == "phase":
            if len(args) != 2:
                p.error(p.end_column(), "usage: phase <mode> <angle>")
            else:
                (mode, mc), (a, ac) = args
                known(p, mode, mc)
                try:
                    angle = Angle.parse(a)
                except ExpressionError as exc:
                    p.error(ac + exc.offset, f"bad angle {a!r}: {exc}")
                if p.ok:
                    stmt = PhaseStmt(mode, angle, line=lineno)

        elif kw == "propagate":
            if len(args) != 2:
                p.error(p.end_column(), "usage: propagate <mode> wavelengths=<real>")
            else:
                (mode, mc), (w, c) = args
                known(p, mode, mc)
                v = p.keyvalue(w, c, "wavelengths")
                length = p.number(v, c + len("wavelengths="), "path length", real=True) if v else None
                if p.ok:
                    stmt = PropagateStmt(mode, length, line=lineno)

        elif kw == "detect":
            if len(args) != 2:
                p.error(p.end_column(), "usage: detect <mode> <name>")
            else:
                (mode, mc), (name, nc) = args
                known(p, mode, mc)
                if not _IDENT.match(name):
                    p.error(nc, f"invalid detector name {name!r}")
                elif name in detector_names:
                    p.error(nc, f"duplicate detector {name!r}")
                if p.ok:
                    detector_names.add(name)
                    stmt = DetectStmt(mode, name, line=lineno)

        elif kw == "scenario":
            if not args:
                p.error(p.end_column(), f"usage: scenario <{'|'.join(SCENARIO_KINDS)}> [key=value]...")
            else:
                (kind, kc), opts = args[0], []
                if kind not in SCENARIO_KINDS:
                    p.error(kc, f"unknown scenario {kind!r}")
                else:
                    for w, c in args[1:]:
                        k, eq, v = w.partition("=")
                        if not eq or not v:
                            p.error(c, f"expected key=value, got {w!r}")
                        elif k not in SCENARIO_KEYS[kind]:
                            p.error(c, f"scenario {kind} takes no option {k!r}")
                        else:
                            opts.append((k, v))
                    if kind == "sweep" and p.ok:
                        _check_sweep(p, dict(opts), kc)
                if scenario is not None:
                    p.error(kcol, f"duplicate scenario (first on line {scenario.line})")
                if p.ok:
                    scenario = stmt = ScenarioStmt(kind, tuple(opts), line=lineno)
        else:
            p.error(kcol, f"unknown statement {kw!r}")

        if stmt is not None and not isinstance(stmt, ModesDecl):
            statements.append(stmt)

    if modes is None and not diags:
        diags.append(Diagnostic(1, 1, "missing 'modes' declaration"))
    if diags:
        raise CircuitError(diags)
    return CircuitSpec(modes, tuple(statements), scenario)


def _check_sweep(p: _LineParser, opts: dict[str, str], col: int):
    try:
        missing = [k for k in ("start", "end", "steps") if k not in opts]
        if missing:
            p.error(col, f"sweep needs {', '.join(missing)}")
            return
        sweep_from_options(opts)
    except ValueError as exc:
        p.error(col, f"bad sweep: {exc}")


def sweep_from_options(opts: dict[str, str]) -> SweepSpec:
    steps = opts["steps"]
    if not _COUNT.match(steps):
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    return SweepSpec(evaluate_real(opts["start"]), evaluate_real(opts["end"]), int(steps), opts.get("param", "phi"))


def format_circuit(spec: CircuitSpec) -> str:
    """Canonical text for ``spec``; parsing it gives back an equal spec."""
    m = spec.modes
    lines = ["modes " + " ".join(m.labels) + ("" if m.max_photons is None else f" max_photons={m.max_photons}")]
    for s in spec.statements:
        if isinstance(s, Prepare):
            if s.kind == "vacuum":
                lines.append(f"prepare {s.mode} vacuum")
            elif s.kind == "photons":
                lines.append(f"prepare {s.mode} photons={s.photons}")
            else:
                lines.append(f"prepare {s.mode} superpose a0={s.a0.text} a1={s.a1.text}")
        elif isinstance(s, BeamSplitterStmt):
            r = "" if s.r is None else f" r={s.r.text}"
            lines.append(f"beamsplitter {s.name} {s.mode1} {s.mode2}{r}")
        elif isinstance(s, PhaseStmt):
            lines.append(f"phase {s.mode} {s.angle.text}")
        elif isinstance(s, PropagateStmt):
            lines.append(f"propagate {s.mode} wavelengths={s.wavelengths.text}")
        elif isinstance(s, DetectStmt):
            lines.append(f"detect {s.mode} {s.name}")
        elif isinstance(s, ScenarioStmt):
            lines.append(" ".join([f"scenario {s.kind}"] + [f"{k}={v}" for k, v in s.options]))
    return "\n".join(lines) + "\n"
