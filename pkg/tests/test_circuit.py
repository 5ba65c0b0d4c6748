import cmath
import math
from fractions import Fraction
from importlib.resources import files
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retroloop.circuit import (
    BeamSplitterStmt,
    CircuitError,
    ExpressionError,
    PhaseStmt,
    SweepSpec,
    evaluate,
    format_circuit,
    parse_circuit,
    pi_fraction,
)

FIXTURES = Path(__file__).parent / "fixtures"


def bundled(name):
    return files("retroloop").joinpath("data", name).read_text()


def diagnostics(text):
    with pytest.raises(CircuitError) as info:
        parse_circuit(text)
    return info.value.diagnostics


@pytest.mark.parametrize("name", ["fig1a.circ", "fig2.circ", "fig3.circ"])
def test_golden_files_parse(name):
    spec = parse_circuit(bundled(name))
    assert spec.scenario is not None


def test_bundled_cycle_keeps_exact_pi():
    spec = parse_circuit(bundled("fig3.circ"))
    assert spec.scenario.kind == "cycle"
    assert spec.register.modes == ("b", "c") and spec.register.max_total_photons == 1
    phase = next(s for s in spec.statements if isinstance(s, PhaseStmt))
    assert phase.angle.pi_fraction == Fraction(1)
    assert [d.name for d in spec.detectors] == ["D0", "D1"]


def test_bundled_channel_amplitudes_and_elements():
    spec = parse_circuit(bundled("fig2.circ"))
    sup = next(p for p in spec.preparations if p.kind == "superpose")
    assert sup.a0.value == pytest.approx(1 / math.sqrt(2))
    assert [type(e).__name__ for e in spec.elements] == ["BeamSplitterStmt", "PropagateStmt", "BeamSplitterStmt"]


def test_undeclared_mode_names_mode_and_line():
    diags = diagnostics((FIXTURES / "undeclared_mode.circ").read_text())
    assert len(diags) == 1
    assert diags[0].line == 4 and "'d'" in diags[0].message


def test_reflectivity_out_of_range():
    (d,) = diagnostics("modes a b\nbeamsplitter BS1 a b r=1.5\n")
    assert d.line == 2 and "reflectivity" in d.message and "[0, 1]" in d.message


def test_duplicate_scenario():
    diags = diagnostics((FIXTURES / "duplicate_scenario.circ").read_text())
    assert diags[0].line == 9 and "duplicate scenario" in diags[0].message


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("modes a\nfrobnicate a\n", 2, "unknown statement"),
        ("modes a a\n", 1, "duplicate"),
        ("prepare a vacuum\n", 1, "modes"),
        ("modes a\nprepare a superpose a0=1 a1=1\n", 2, "must be 1"),
        ("modes a\nscenario sweep start=0 end=1\n", 2, "steps"),
        ("modes a b\nphase a 2*(pi\n", 2, ""),
        ("modes a b\ndetect z D0\n", 2, "'z'"),
        ("modes a\nprepare a photons=-1\n", 2, ""),
    ],
)
def test_malformed_statements_are_line_anchored(text, line, fragment):
    diags = diagnostics(text)
    assert diags[0].line == line and diags[0].column >= 1
    assert fragment in diags[0].message


def test_all_problems_reported_together():
    diags = diagnostics("modes a b\nbeamsplitter X a q\nbeamsplitter Y a b r=2\n")
    assert [d.line for d in diags] == [2, 3]


def test_diagnostic_format():
    (d,) = diagnostics("modes a\nphase q pi\n")
    assert d.format("x.circ").startswith("x.circ:2:")
    assert ": error: " in d.format("x.circ")


def test_comments_and_blank_lines_ignored():
    spec = parse_circuit("# header\n\nmodes a b   # trailing\n  beamsplitter B a b\n")
    assert spec.elements == (BeamSplitterStmt("B", "a", "b"),)


@pytest.mark.parametrize(
    "text,value",
    [
        ("1", 1),
        ("0.5+0.5i", 0.5 + 0.5j),
        ("-i", -1j),
        ("sqrt(1/2)", math.sqrt(0.5)),
        ("exp(i*pi/4)", cmath.exp(1j * math.pi / 4)),
        ("2^3", 8),
        ("3*(1-2i)", 3 - 6j),
        ("cos(pi)", -1),
        ("1e-3", 0.001),
    ],
)
def test_expressions(text, value):
    assert evaluate(text) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("text", ["", "1+", "(1", "foo", "1/0", "sqrt(", "((" * 40 + "1" + "))" * 40])
def test_bad_expressions(text):
    with pytest.raises(ExpressionError):
        evaluate(text)


@pytest.mark.parametrize(
    "text,q",
    [("pi", Fraction(1)), ("pi/2", Fraction(1, 2)), ("3*pi/4", Fraction(3, 4)), ("-pi", Fraction(-1)), ("0.3", None), ("2", None)],
)
def test_pi_fractions(text, q):
    assert pi_fraction(text) == q


def test_sweep_spec():
    s = SweepSpec.parse("phi=0:2*pi:5")
    assert s.grid() == pytest.approx([0, math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi])
    for bad in ["phi=0:1", "phi=1:0:5", "phi=0:1:1", "theta=0:1:3", "phi=0:1:x"]:
        with pytest.raises(ValueError):
            SweepSpec.parse(bad)


@pytest.mark.parametrize("name", ["fig1a.circ", "fig2.circ", "fig3.circ"])
def test_format_parse_fixed_point_on_golden(name):
    spec = parse_circuit(bundled(name))
    again = parse_circuit(format_circuit(spec))
    assert again == spec
    assert format_circuit(again) == format_circuit(spec)


MODES = ("a", "b", "c")
numbers = st.sampled_from(["0", "0.25", "1/3", "sqrt(1/2)", "0.5", "1"])
angles = st.sampled_from(["pi", "pi/2", "3*pi/4", "0.7", "-1.25", "2*pi"])
mode = st.sampled_from(MODES)


@st.composite
def circuits(draw):
    lines = [f"modes {' '.join(MODES)}" + draw(st.sampled_from(["", " max_photons=2"]))]
    for m in draw(st.lists(mode, unique=True, max_size=3)):
        lines.append(draw(st.sampled_from([f"prepare {m} vacuum", f"prepare {m} photons=1", f"prepare {m} superpose a0=0.6 a1=0.8i"])))
    for k in range(draw(st.integers(0, 5))):
        m1, m2 = draw(st.lists(mode, unique=True, min_size=2, max_size=2))
        lines.append(
            draw(
                st.sampled_from(
                    [
                        f"beamsplitter B{k} {m1} {m2} r={draw(numbers)}",
                        f"beamsplitter B{k} {m1} {m2}",
                        f"phase {m1} {draw(angles)}",
                        f"propagate {m2} wavelengths={draw(numbers)}",
                    ]
                )
            )
        )
    for k, m in enumerate(draw(st.lists(mode, unique=True, max_size=2))):
        lines.append(f"detect {m} D{k}")
    lines.append(draw(st.sampled_from(["", "scenario forward", "scenario cycle", "scenario sweep start=0 end=pi steps=3"])))
    return "\n".join(lines) + "\n"


@settings(max_examples=100)
@given(circuits())
def test_parse_format_parse_fixed_point(text):
    spec = parse_circuit(text)
    assert parse_circuit(format_circuit(spec)) == spec


statement_words = st.sampled_from(
    ["modes", "prepare", "beamsplitter", "phase", "propagate", "detect", "scenario", "a", "b", "vacuum",
     "photons=1", "superpose", "a0=1", "a1=", "r=0.5", "r=(", "pi", "wavelengths=1", "cycle", "sweep", "#", "=", "max_photons=x"]
)


@settings(max_examples=300)
@given(st.one_of(st.text(max_size=200), st.lists(st.lists(statement_words, max_size=6).map(" ".join), max_size=8).map("\n".join)))
def test_parsing_is_total(text):
    try:
        parse_circuit(text)
    except CircuitError as exc:
        assert exc.diagnostics
        assert all(d.line >= 1 and d.column >= 1 for d in exc.diagnostics)
