import warnings

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from purity_decay.entanglement import Bipartition, purity
from purity_decay.fock import SparseOperator, SpaceConfig, StateVector, embed, number_op
from purity_decay.model import OneOneParams, build_1x1, total_h
from purity_decay.propagator import (Method, PropagationConfig, PropagationStats, PropagationWarning, TimeGrid,
                                     diagonal_average, echo_evolve, evolve, free_phase_back, spectral_bounds)
from purity_decay.states import coherent_product_state

from conftest import random_state

METHODS = [Method.KRYLOV, Method.CHEBYSHEV]


def small_model(dims=(8, 8), hbar=0.1, delta=0.3):
    return build_1x1(OneOneParams(hbar=hbar, delta=delta), SpaceConfig(dims))


def test_zero_hamiltonian_is_identity(rng):
    space = SpaceConfig((3, 4))
    psi = StateVector(random_state(rng, 12), space)
    H = SparseOperator.from_entries(12, [], hermitian=True)
    for s in evolve(H, psi, TimeGrid([0.0, 1.0, 7.5])):
        np.testing.assert_array_equal(s.amplitudes, psi.amplitudes)


@pytest.mark.parametrize("method", METHODS)
def test_number_operator_phases(method):
    space = SpaceConfig((6,))
    psi = StateVector.normalized(np.ones(6), space)
    H = SparseOperator(number_op(6).matrix, hermitian=True)
    [s] = evolve(H, psi, TimeGrid([1.0]), PropagationConfig(method=method), hbar=1.0)
    want = np.exp(-1j * np.arange(6)) / np.sqrt(6)
    np.testing.assert_allclose(s.amplitudes, want, atol=1e-10)


@pytest.mark.parametrize("method", METHODS)
def test_matches_dense_exponential(method, rng):
    model = small_model()
    H = total_h(model)
    psi = StateVector(random_state(rng, 64), model.space)
    times = [0.0, 0.5, 2.0]
    states = evolve(H, psi, TimeGrid(times), PropagationConfig(method=method), hbar=model.hbar)
    w, v = np.linalg.eigh(H.toarray())
    for t, s in zip(times, states):
        want = v @ (np.exp(-1j * w * t / model.hbar) * (v.conj().T @ psi.amplitudes))
        assert np.linalg.norm(s.amplitudes - want) < 1e-8


def test_fixed_step_and_stats(rng):
    model = small_model()
    psi = StateVector(random_state(rng, 64), model.space)
    stats = PropagationStats()
    cfg = PropagationConfig(step_dt=0.01, krylov_dim=20)
    [s] = evolve(total_h(model), psi, TimeGrid([1.0]), cfg, hbar=model.hbar, stats=stats)
    want = sla.expm(-1j * total_h(model).toarray() / model.hbar) @ psi.amplitudes
    assert np.linalg.norm(s.amplitudes - want) < 1e-8
    assert stats.steps >= 100 and stats.matvecs > 0
    assert stats.max_norm_drift < 1e-9


def test_unitarity_and_energy_conservation(rng):
    model = small_model((7, 7), hbar=0.2, delta=0.5)
    H = total_h(model)
    psi = StateVector(random_state(rng, 49), model.space)
    e0 = psi.expectation(H)
    for s in evolve(H, psi, TimeGrid(np.linspace(0, 10, 11)), hbar=model.hbar):
        assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-10
        assert abs(s.expectation(H) - e0) < 1e-9 * max(1.0, abs(e0))


def test_unrenormalized_norm_drift_is_tiny(rng):
    model = small_model()
    psi = StateVector(random_state(rng, 64), model.space)
    stats = PropagationStats()
    cfg = PropagationConfig(renormalize_each_step=False)
    evolve(total_h(model), psi, TimeGrid([5.0]), cfg, hbar=model.hbar, stats=stats)
    assert stats.max_norm_drift < 1e-9


@pytest.mark.parametrize("method", METHODS)
def test_time_reversal(method, rng):
    model = small_model((7, 7))
    H = total_h(model)
    psi = StateVector(random_state(rng, 49), model.space)
    cfg = PropagationConfig(method=method)
    [fwd] = evolve(H, psi, TimeGrid([3.0]), cfg, hbar=model.hbar)
    [back] = evolve(H * -1.0, fwd, TimeGrid([3.0]), cfg, hbar=model.hbar)
    assert np.linalg.norm(back.amplitudes - psi.amplitudes) < 1e-7


def test_interaction_picture_purity(rng):
    model = small_model((6, 6), hbar=0.5, delta=0.4)
    part = Bipartition.split(model.space, 1)
    psi = StateVector(random_state(rng, 36), model.space)
    times = np.linspace(0, 8, 9)
    states = evolve(total_h(model), psi, TimeGrid(times), hbar=model.hbar)
    back = free_phase_back(model.H0, states, times, model.hbar)
    for s, b in zip(states, back):
        assert abs(purity(s, part) - purity(b, part)) < 1e-10


def test_rejects_bad_input(rng):
    space = SpaceConfig((2, 2))
    psi = StateVector(random_state(rng, 4), space)
    nonherm = SparseOperator.from_entries(4, [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        evolve(nonherm, psi, TimeGrid([1.0]))
    with pytest.raises(ValueError):
        evolve(SparseOperator.identity(5), psi, TimeGrid([1.0]))
    with pytest.raises(ValueError):
        TimeGrid([0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        PropagationConfig(step_dt=-1.0)
    with pytest.raises(ValueError):
        PropagationConfig(krylov_dim=2)


def test_spectral_bounds_contain_spectrum():
    H = total_h(small_model((5, 5)))
    lo, hi = spectral_bounds(H)
    w = np.linalg.eigvalsh(H.toarray())
    assert lo <= w.min() + 1e-12 and w.max() <= hi + 1e-12


def test_diagonal_average_one_one():
    hbar = 0.05
    model = build_1x1(OneOneParams(hbar=hbar), SpaceConfig((6, 6)))
    vbar = diagonal_average(model.V, model.H0)
    assert vbar.is_diagonal()
    n_a, n_b = np.divmod(np.arange(36), 6)
    # <n|(a+a^+)^2|n> = 2n+1, so each diagonal entry is hbar^2 (2nA+1)(2nB+1)
    np.testing.assert_allclose(vbar.diagonal_values().real, hbar**2 * (2 * n_a + 1) * (2 * n_b + 1),
                               rtol=1e-14)
    # a diagonal V is its own average
    again = diagonal_average(vbar, model.H0)
    np.testing.assert_array_equal(again.toarray(), vbar.toarray())


def test_diagonal_average_classical_limit():
    hbar = 0.001
    model = build_1x1(OneOneParams(hbar=hbar), SpaceConfig((3, 3)))
    vbar = diagonal_average(model.V, model.H0).diagonal_values().real
    # compare with 4 jA jB at j = hbar (n + 1/2)
    j = hbar * (np.divmod(np.arange(9), 3)[0] + 0.5), hbar * (np.divmod(np.arange(9), 3)[1] + 0.5)
    np.testing.assert_allclose(vbar, 4 * j[0] * j[1], rtol=1e-12)


def test_diagonal_average_degenerate_block():
    H0 = SparseOperator.diagonal([0.0, 0.0, 1.0])
    V = SparseOperator.from_entries(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 2.0), (2, 1, 2.0)], hermitian=True)
    with pytest.warns(PropagationWarning):
        vbar = diagonal_average(V, H0)
    np.testing.assert_array_equal(vbar.toarray(), [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        diagonal_average(V, H0, weights=[0.0, 0.0, 1.0])


def test_echo_zero_delta_is_identity():
    model = build_1x1(OneOneParams(hbar=0.1, delta=0.0), SpaceConfig((17, 17)))
    psi = coherent_product_state([0.1, 0.1], 0.1, model.space)
    for s in echo_evolve(model, psi, TimeGrid([0.0, 3.0, 100.0])):
        np.testing.assert_array_equal(s.amplitudes, psi.amplitudes)


@pytest.mark.filterwarnings("ignore:H0 has degenerate levels")
def test_echo_tracks_full_evolution_short_time():
    # Delta/hbar = 12 is an integer, so (hbar n - Delta)^2 is degenerate for n = 12 +- k
    hbar, delta = 0.1, 0.01
    model = build_1x1(OneOneParams(hbar=hbar, delta=delta), SpaceConfig((17, 17)))
    part = Bipartition.split(model.space, 1)
    psi = coherent_product_state([0.1, 0.1], hbar, model.space)
    times = np.linspace(0, 1.0 / delta, 6)
    full = evolve(total_h(model), psi, TimeGrid(times), hbar=hbar)
    echo = echo_evolve(model, psi, TimeGrid(times))
    for f, e in zip(full, echo):
        assert abs(purity(f, part) - purity(e, part)) < 0.02


@settings(max_examples=15)
@given(st.integers(0, 2**31), st.floats(0.1, 4.0))
def test_purity_from_evolution_stays_bounded(seed, t):
    rng = np.random.default_rng(seed)
    model = small_model((5, 5), hbar=0.3, delta=0.7)
    psi = StateVector(random_state(rng, 25), model.space)
    [s] = evolve(total_h(model), psi, TimeGrid([t]), hbar=model.hbar)
    p = purity(s, Bipartition.split(model.space, 1))
    assert 0.2 - 1e-12 <= p <= 1 + 1e-12
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-10
