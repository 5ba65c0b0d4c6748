import cmath
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_partial_trace, double_splitter_probabilities
from retroloop.fock import DensityOperator, FockVector, ModeRegister, overlap_up_to_phase
from retroloop.scenarios import (
    CYCLE_OUTCOMES,
    CHANNEL_OUTCOMES,
    ClosedCycleConfig,
    Consistency,
    TimeMachineConfig,
    backward_channel,
    bsl_output,
    cycle_analysis,
    forward_interferometer_oracle,
    label,
    no_signaling_check,
    path_amplitude_oracle,
    verdict,
)

S = 1 / math.sqrt(2)
C = ModeRegister(("c",), 1)


def c_state(x0, x1):
    return FockVector(C, [x0, x1])


amplitude_pairs = st.tuples(
    st.floats(0, math.pi / 2), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi)
).map(lambda t: (math.cos(t[0]) * cmath.exp(1j * t[1]), math.sin(t[0]) * cmath.exp(1j * t[2])))


def test_config_rejects_unnormalized_amplitudes():
    with pytest.raises(ValueError):
        TimeMachineConfig(1.0, 1.0)


def test_out_state_for_one_photon_at_d1_is_in_state():
    a0, a1 = 0.6, 0.8j
    rec = backward_channel(TimeMachineConfig(a0, a1))[(0, 1)]
    assert overlap_up_to_phase(rec.out_state, c_state(a0, a1)) >= 1 - 1e-12


def test_out_state_for_one_photon_at_d0_flips_sign():
    a0, a1 = 0.6, 0.8j
    rec = backward_channel(TimeMachineConfig(a0, a1))[(1, 0)]
    assert overlap_up_to_phase(rec.out_state, c_state(a0, -a1)) >= 1 - 1e-12


def test_zero_and_two_photon_records():
    report = backward_channel(TimeMachineConfig(S, S))
    assert overlap_up_to_phase(report[(0, 0)].out_state, c_state(0, 1)) >= 1 - 1e-12
    for counts in [(0, 2), (2, 0)]:
        assert overlap_up_to_phase(report[counts].out_state, c_state(1, 0)) >= 1 - 1e-12


def test_coincidence_record_never_occurs():
    rec = backward_channel(TimeMachineConfig(S, S))[(1, 1)]
    assert rec.probability == 0.0 and rec.out_state is None


@pytest.mark.parametrize("a0,a1", [(S, S), (0.6, 0.8j), (1.0, 0.0), (0.0, 1.0), (S, -1j * S)])
def test_record_probabilities_match_operator_algebra(a0, a1):
    exact = double_splitter_probabilities(sp.nsimplify(a0), sp.nsimplify(a1))
    report = backward_channel(TimeMachineConfig(a0, a1))
    for counts in CHANNEL_OUTCOMES:
        assert report[counts].probability == pytest.approx(float(exact.get(counts, 0)), abs=1e-12)
    assert report.total_probability == pytest.approx(1.0, abs=1e-9)


def test_symmetric_input_probability_table():
    got = {r.counts: r.probability for r in backward_channel(TimeMachineConfig(S, S)).records}
    assert got == pytest.approx({(0, 0): 0.25, (0, 1): 0.25, (1, 0): 0.25, (1, 1): 0.0, (0, 2): 0.125, (2, 0): 0.125})


@settings(max_examples=50)
@given(amplitude_pairs)
def test_backward_channel_properties(amps):
    a0, a1 = amps
    report = backward_channel(TimeMachineConfig(a0, a1))
    assert report.total_probability == pytest.approx(1.0, abs=1e-9)
    assert overlap_up_to_phase(report[(0, 1)].out_state, c_state(a0, a1)) >= 1 - 1e-10
    for rec in report.records:
        # the retrodictive chain carries the same weight as the forward calculation
        assert rec.retro_probability == pytest.approx(rec.probability, abs=1e-12)
    mixture = sum(
        r.probability * np.outer(r.out_state.amplitudes, r.out_state.amplitudes.conj())
        for r in report.records
        if r.out_state is not None
    )
    assert np.allclose(report.averaged_state.matrix, mixture, atol=1e-12)


def test_whole_wavelength_path_is_transparent():
    base = backward_channel(TimeMachineConfig(0.6, 0.8j))
    longer = backward_channel(TimeMachineConfig(0.6, 0.8j, 3.0))
    for r1, r2 in zip(base.records, longer.records):
        assert r1.probability == pytest.approx(r2.probability, abs=1e-12)


def test_no_signaling_against_partial_trace():
    report = no_signaling_check([TimeMachineConfig(1, 0), TimeMachineConfig(0, 1), TimeMachineConfig(S, S)])
    assert report.passed
    rho = DensityOperator.from_vector(bsl_output())
    expected, _ = brute_partial_trace(rho.matrix, list(rho.register.basis), 2, 1, [1])
    assert np.allclose(report.oracle_state.matrix, expected, atol=1e-12)
    for state in report.averaged_states:
        assert np.allclose(state.matrix, np.eye(2) / 2, atol=1e-9)


def test_no_signaling_single_config_is_vacuous():
    report = no_signaling_check([TimeMachineConfig(0.6, 0.8)])
    assert report.max_pairwise_trace_distance == 0.0 and report.passed


@settings(max_examples=10, deadline=None)
@given(st.lists(amplitude_pairs, min_size=2, max_size=5))
def test_no_signaling_for_any_configs(pairs):
    report = no_signaling_check([TimeMachineConfig(a0, a1) for a0, a1 in pairs])
    assert report.passed
    assert report.max_pairwise_trace_distance <= 1e-9


def test_cycle_at_pi():
    report = cycle_analysis(ClosedCycleConfig(math.pi))
    blocked = report[(0, 1)]
    assert abs(blocked.overlap) <= 1e-12
    assert blocked.consistency is Consistency.INCONSISTENT
    closed = report[(1, 0)]
    assert overlap_up_to_phase(closed.in_bar, report.in_state) >= 1 - 1e-12
    assert closed.consistency is Consistency.CONSISTENT


def test_cycle_at_zero():
    report = cycle_analysis(ClosedCycleConfig(0.0))
    rec = report[(1, 0)]
    assert overlap_up_to_phase(rec.in_bar, FockVector(rec.in_bar.register, [S, -S])) >= 1 - 1e-12
    assert rec.consistency is Consistency.INCONSISTENT
    assert report[(0, 1)].consistency is Consistency.CONSISTENT


def test_cycle_at_half_pi_is_partial():
    rec = cycle_analysis(ClosedCycleConfig(math.pi / 2))[(0, 1)]
    assert rec.cycle_probability == pytest.approx(0.5, abs=1e-12)
    assert rec.consistency is Consistency.PARTIAL


def test_cycle_overlap_has_closed_form():
    for phi in np.linspace(0, 2 * math.pi, 17):
        rec = cycle_analysis(ClosedCycleConfig(phi))[(0, 1)]
        assert abs(abs(rec.overlap) - abs(1 + cmath.exp(1j * phi)) / 2) <= 1e-12


def test_path_amplitude_oracle_values():
    assert abs(path_amplitude_oracle(math.pi)) <= 1e-15
    assert path_amplitude_oracle(0.0) == pytest.approx(1j, abs=1e-15)
    assert abs(path_amplitude_oracle(math.pi / 2)) ** 2 == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize(
    "phi,p01",
    [(0.0, 1.0), (math.pi, 0.0), (2 * math.pi / 3, 0.25)],
)
def test_forward_interferometer_oracle(phi, p01):
    dist = forward_interferometer_oracle(phi)
    assert dist[label((0, 1))] == pytest.approx(p01, abs=1e-12)
    assert dist[label((1, 0))] == pytest.approx(1 - p01, abs=1e-12)


def test_three_way_agreement_on_grid():
    worst = 0.0
    for phi in np.arange(256) * 2 * math.pi / 256:
        report = cycle_analysis(ClosedCycleConfig(phi))
        rec = report[(0, 1)]
        path = abs(path_amplitude_oracle(phi)) ** 2
        worst = max(worst, abs(rec.cycle_probability - path), abs(rec.cycle_probability - rec.oracle_probability))
        assert sum(report[c].cycle_probability for c in CYCLE_OUTCOMES) == pytest.approx(1.0, abs=1e-9)
    assert worst <= 1e-9


@settings(max_examples=40)
@given(st.floats(-20, 20))
def test_two_pi_shift_invariance(phi):
    r1, r2 = cycle_analysis(ClosedCycleConfig(phi)), cycle_analysis(ClosedCycleConfig(phi + 2 * math.pi))
    for counts in CYCLE_OUTCOMES:
        assert r1[counts].cycle_probability == pytest.approx(r2[counts].cycle_probability, abs=1e-12)
        assert abs(r1[counts].overlap - r2[counts].overlap) <= 1e-12
        assert r1[counts].consistency is r2[counts].consistency


def test_verdict_thresholds():
    assert verdict(1.0) is Consistency.CONSISTENT
    assert verdict(1e-10) is Consistency.INCONSISTENT
    assert verdict(0.3) is Consistency.PARTIAL
