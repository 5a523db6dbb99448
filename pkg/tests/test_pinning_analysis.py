import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpcpin.errors import ArgumentError, PreconditionError, UnsupportedTruncationError
from gpcpin.fock_core import (
    FermionState,
    Setting,
    det_from_orbitals,
    orbitals_of,
    random_state,
    spectrum_of,
)
from gpcpin.pauli_constraints import catalog, is_member
from gpcpin.pinning_analysis import (
    analyze,
    borland_dennis_pinned_dets,
    counterexample_state,
    pad_spectrum,
    projection_weight,
    selection_zero_space,
    structure_bounds,
    truncate,
)

HARM_02 = [.99999655, .99966393, .99966062, .00033932, .00033608, 3.416e-6, 8.8e-8, 1.1e-9, 0, 0]
S36 = Setting(3, 6)


def dets(*orbs):
    return {det_from_orbitals(o) for o in orbs}


def test_truncation_of_tabulated_harmonium():
    t = truncate(HARM_02, epsilon_threshold=1e-8, tol=1e-8)
    assert (t.r, t.setting) == (0, Setting(3, 7))
    assert t.epsilon == pytest.approx(1.1e-9)


def test_truncation_removes_exact_pauli_entries():
    t = truncate((1, 1, 0.6, 0.4, 0, 0))
    assert (t.r, t.s, t.epsilon, t.setting) == (2, 2, 0.0, Setting(1, 2))
    assert t.values == (0.6, 0.4)


def test_identity_truncation():
    lam = spectrum_of(random_state(S36, np.random.default_rng(2)))
    t = truncate(lam)
    assert (t.r, t.s, t.epsilon, t.setting) == (0, 0, 0.0, S36)


def test_explicit_truncation_and_errors():
    t = truncate(HARM_02, r=0, s=2, tol=1e-8)
    assert t.setting == Setting(3, 8) and t.epsilon == 0
    with pytest.raises(UnsupportedTruncationError) as err:
        truncate(np.linspace(0.55, 0.05, 10) * 3 / np.linspace(0.55, 0.05, 10).sum(), epsilon_threshold=1e-6)
    assert err.value.achievable
    with pytest.raises(ArgumentError):
        truncate(HARM_02, r=5, tol=1e-8)


def test_analyze_tabulated_harmonium():
    rep = analyze(HARM_02, epsilon_threshold=1e-8, tol=1e-8)
    assert rep.verdict == "quasi-pinned"
    assert rep.min_label == "D^{(3,7)}_1"
    assert rep.min_value == pytest.approx(2.4e-8, rel=1e-3)
    assert rep.min_value > rep.epsilon
    assert rep.bound == pytest.approx(4 * 1.1e-9)
    d = rep.to_dict()
    assert list(d) == ["setting", "measure", "epsilon", "truncated_setting", "r", "s", "constraints",
                       "equalities", "min", "verdict"]
    assert min(c["value"] for c in d["constraints"]) == d["min"]["value"]


def test_analyze_hartree_fock_is_pinned():
    rep = analyze((1, 1, 1, 0, 0, 0))
    assert rep.verdict == "pinned" and rep.min_value == 0 and rep.epsilon == 0


def test_exact_pinning_is_never_confirmed_with_truncation_error():
    # D^{(3,6)} saturated in the truncated part, but a NON was dropped inexactly
    lam = [0.9, 0.8, 0.7, 0.3, 0.2, 0.1 - 1e-7, 1e-7]
    rep = analyze(lam, epsilon_threshold=1e-6)
    assert rep.truncation.setting == S36
    assert abs(rep.min_value) < 1e-6
    assert rep.verdict == "quasi-pinned"


def test_selection_zero_space_examples():
    cat = catalog(S36)
    eight = selection_zero_space(cat.equalities, S36)
    expected = dets((1, 2, 3), (1, 2, 4), (1, 3, 5), (1, 4, 5), (2, 3, 6), (2, 4, 6), (3, 5, 6), (4, 5, 6))
    assert eight == expected
    assert borland_dennis_pinned_dets() == dets((1, 2, 3), (1, 4, 5), (2, 4, 6))
    assert len(selection_zero_space([], S36)) == 20


def test_projection_weights():
    p = borland_dennis_pinned_dets()
    assert projection_weight(FermionState.from_orbitals(S36, {(1, 2, 3): 1}), p) == 1
    assert projection_weight(counterexample_state(0.6, 0.3, 0.01), p) == 0
    eight = selection_zero_space(catalog(S36).equalities, S36)
    uniform = FermionState.from_orbitals(S36, {orbitals_of(d): 1 for d in eight}, normalize=True)
    assert projection_weight(uniform, p) == pytest.approx(3 / 8)


def test_counterexample_is_quasi_pinned_when_amplitudes_are_consistent():
    # 2|a|^2 + 2|g|^2 - delta = 1 keeps the printed amplitudes normalized
    delta, g = 0.01, 0.3
    a = math.sqrt((1 + delta) / 2 - g * g)
    st_ = counterexample_state(a, g, delta)
    lam = spectrum_of(st_)
    d36 = catalog(S36)["D^{(3,6)}"].value(lam.values)
    assert d36 == pytest.approx(delta, abs=1e-12)
    assert lam.values[2] - lam.values[3] == pytest.approx(delta, abs=1e-12)


def test_hf_bounds_example():
    st_ = FermionState.from_orbitals(S36, {(1, 2, 3): math.sqrt(0.9), (4, 5, 6): math.sqrt(0.1)})
    rep = structure_bounds(st_, "hf")
    assert rep.delta == pytest.approx(0.3)
    assert rep.value == pytest.approx(0.9)
    assert (rep.lower, rep.upper) == (pytest.approx(0.7), pytest.approx(0.9))
    assert rep.passed
    rep = structure_bounds(FermionState.from_orbitals(S36, {(2, 4, 5): 1}), "hf")
    assert rep.delta == pytest.approx(0, abs=1e-14) and rep.value == pytest.approx(1) and rep.passed


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 0.6))
def test_hf_bounds_random(seed, scale):
    rng = np.random.default_rng(seed)
    s = Setting(3, 7)
    v = random_state(s, rng).to_vector() * scale
    v[0] += 1
    assert structure_bounds(FermionState.from_vector(s, v, normalize=True), "hf").passed


def random_bd_state(rng, scale):
    v = random_state(S36, rng).to_vector() * scale
    v[0] += 1
    return FermionState.from_vector(S36, v, normalize=True)


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 0.5))
def test_borland_dennis_sandwich(seed, scale):
    st_ = random_bd_state(np.random.default_rng(seed), scale)
    lam = spectrum_of(st_).values
    if 3 - sum(lam[:3]) > 0.25:
        with pytest.raises(PreconditionError):
            structure_bounds(st_, "borland_dennis")
        return
    rep = structure_bounds(st_, "borland_dennis")
    assert rep.passed, rep


def test_borland_dennis_precondition():
    st_ = FermionState.from_orbitals(S36, {(1, 2, 3): math.sqrt(0.5), (4, 5, 6): math.sqrt(0.5)})
    with pytest.raises(PreconditionError):
        structure_bounds(st_, "borland_dennis")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_states_in_pinned_span_saturate_borland_dennis(seed):
    rng = np.random.default_rng(seed)
    # NONs come out in index order exactly when w0 >= w1 + w2 and w1 >= w2
    w2, w1 = np.sort(rng.random(2))
    w = np.array([w1 + w2 + rng.random(), w1, w2])
    w /= w.sum()
    phases = np.exp(2j * np.pi * rng.random(3))
    st_ = FermionState.from_orbitals(
        S36, {(1, 2, 3): math.sqrt(w[0]) * phases[0], (1, 4, 5): math.sqrt(w[1]) * phases[1],
              (2, 4, 6): math.sqrt(w[2]) * phases[2]})
    lam = spectrum_of(st_).values
    assert abs(catalog(S36)["D^{(3,6)}"].value(lam)) < 1e-10


EMBEDDINGS = [((2, 5), 1, 0), ((2, 6), 1, 0), ((3, 6), 0, 1), ((3, 6), 0, 2), ((3, 7), 0, 1),
              ((2, 5), 1, 1), ((2, 4), 1, 1), ((4, 7), 1, 0)]


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(EMBEDDINGS), st.booleans())
def test_padding_preserves_membership(seed, emb, physical):
    (n, d), r, s = emb
    rng = np.random.default_rng(seed)
    small = Setting(n, d)
    if physical:
        lam = spectrum_of(random_state(small, rng)).values
    else:
        x = np.sort(rng.random(d))[::-1]
        x = x * n / x.sum()
        if x.max() > 1:
            return
        lam = tuple(x)
    big = Setting(n + r, d + r + s)
    assert is_member(pad_spectrum(lam, r, s), big) == is_member(lam, small)
