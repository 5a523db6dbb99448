import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from gpcpin.errors import ArgumentError
from gpcpin.qmp_compat import MarginalTriple, check, check_spectra, marginal_triple


def test_bell_state_is_compatible():
    r = check_spectra((0.5, 0.5), (0.5, 0.5), (1, 0, 0, 0))
    assert r.compatible and len(r.values) == 4


def test_pure_product_with_mixed_marginal_fails_fourth():
    r = check_spectra((1, 0), (0.5, 0.5), (1, 0, 0, 0))
    assert not r.compatible
    label, slack = r.values[3]
    assert label.startswith("|A1 - B1|") and slack == -0.5
    assert all(v >= 0 for _, v in r.values[:3])


def test_classical_mixture_realizes_its_triple():
    rho = np.zeros((4, 4))
    rho[0, 0] = rho[3, 3] = 0.5
    t = marginal_triple(rho)
    assert np.allclose(t.spec_a, (0.5, 0.5)) and np.allclose(t.spec_b, (0.5, 0.5))
    assert np.allclose(t.spec_ab, (0.5, 0.5, 0, 0))
    assert check(t).compatible
    assert check_spectra((0.5, 0.5), (0.5, 0.5), (0.5, 0.5, 0, 0)).compatible


def test_a_ab_mode():
    assert check_spectra((0.9, 0.1), None, (0.5, 0.5, 0, 0), mode="a_ab").compatible
    r = check_spectra((1, 0), None, (0.25, 0.25, 0.25, 0.25), mode="a_ab")
    assert not r.compatible and r.values[0][1] == pytest.approx(-0.5)


def random_pure_rho(rng):
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_mixed_rho(rng):
    w = rng.dirichlet(np.ones(4))
    u = scipy.stats.unitary_group.rvs(4, random_state=rng)
    return u @ np.diag(w) @ u.conj().T


@pytest.mark.parametrize("maker", [random_pure_rho, random_mixed_rho])
def test_random_states_pass(maker):
    rng = np.random.default_rng(7)
    for _ in range(1000):
        t = marginal_triple(maker(rng))
        assert check(t).compatible
        assert check(MarginalTriple.create(t.spec_a, None, t.spec_ab, "a_ab")).compatible


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 1.0), st.floats(0.5, 1.0))
def test_product_states(p, q):
    # rho_A (x) rho_B realizes its own marginals
    a, b = np.diag([p, 1 - p]), np.diag([q, 1 - q])
    t = marginal_triple(np.kron(a, b))
    assert check(t).compatible


def test_malformed_spectra():
    for args in [((0.4, 0.6), (0.5, 0.5), (1, 0, 0, 0)),
                 ((0.5, 0.5), (0.5, 0.5), (1, 0, 0)),
                 ((0.5, 0.6), (0.5, 0.5), (1, 0, 0, 0)),
                 ((1.1, -0.1), (0.5, 0.5), (1, 0, 0, 0))]:
        with pytest.raises(ArgumentError):
            check_spectra(*args)
    with pytest.raises(ArgumentError):
        check_spectra((0.5, 0.5), None, (1, 0, 0, 0))
    with pytest.raises(ArgumentError):
        check_spectra((0.5, 0.5), (0.5, 0.5), (1, 0, 0, 0), mode="abc")
