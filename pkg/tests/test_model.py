import numpy as np
import pytest

from purity_decay.fock import DimensionError, SpaceConfig, commutator, embed, number_op, op_combine
from purity_decay.model import (CouplingCase, OneOneParams, TwoTwoParams, build_1x1, build_2x2,
                                classical_hamiltonian, total_h)


def idx(space, *n):
    return int(np.ravel_multi_index(n, space.mode_dims))


def dense_x2(dim):
    """(a + a^+)^2 from an untruncated-enough ladder matrix."""
    big = dim + 2
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    x = a + a.T
    return (x @ x)[:dim, :dim]


def test_h0_ground_entry_trivial():
    m = build_1x1(OneOneParams(gamma_A=1, gamma_B=1, delta_offset=0.0, hbar=1.0), SpaceConfig((3, 3)))
    assert m.H0.toarray()[0, 0] == 0


def test_1x1_h0_and_v_entries():
    space = SpaceConfig((3, 3))
    m = build_1x1(OneOneParams(hbar=0.01), space)
    assert m.H0.toarray()[0, 0].real == pytest.approx(1.2**2 * (1 + 0.6456), rel=1e-14)
    v = m.V.toarray()
    assert v[idx(space, 0, 0), idx(space, 2, 2)].real == pytest.approx(2 * 0.01**2, rel=1e-12)
    dense = 0.01**2 * np.kron(dense_x2(3), dense_x2(3))
    np.testing.assert_allclose(v, dense, atol=1e-18)


def test_wrong_mode_counts():
    with pytest.raises(DimensionError):
        build_1x1(OneOneParams(), SpaceConfig((3, 3, 3)))
    with pytest.raises(DimensionError):
        build_2x2(TwoTwoParams(), SpaceConfig((3, 3)))


def test_2x2_term_counts_and_h0():
    space = SpaceConfig((3, 3, 3, 3))
    m1 = build_2x2(TwoTwoParams(coupling_case=CouplingCase.CASE_I), space)
    m2 = build_2x2(TwoTwoParams(coupling_case="case2"), space)
    assert m1.coupling_pairs == ((0, 2), (1, 3))
    assert len(m2.coupling_pairs) == 4
    assert m1.d_A == m1.d_B == 2
    assert m1.H0.toarray()[0, 0].real == pytest.approx(1.0 * 1.44 + 0.64 * 1.44, rel=1e-14)
    # V13 + V24 against a dense Kronecker oracle
    hb = m1.hbar
    x, i3 = dense_x2(3), np.eye(3)
    kron = lambda *ops: np.kron(np.kron(ops[0], ops[1]), np.kron(ops[2], ops[3]))
    dense = hb**2 * (kron(x, i3, x, i3) + kron(i3, x, i3, x))
    np.testing.assert_allclose(m1.V.toarray(), dense, atol=1e-15)


@pytest.mark.parametrize("build,params,dims", [
    (build_1x1, OneOneParams(), (5, 6)),
    (build_2x2, TwoTwoParams(), (3, 4, 3, 3)),
    (build_2x2, TwoTwoParams(coupling_case=CouplingCase.CASE_II), (3, 3, 4, 3)),
])
def test_h0_commutes_with_number_ops(build, params, dims):
    space = SpaceConfig(dims)
    m = build(params, space)
    assert m.H0.is_diagonal() and m.H0.hermitian and m.V.hermitian
    for k in range(space.n_modes):
        nk = embed(number_op(dims[k]), k, space)
        assert commutator(m.H0, nk).is_zero(atol=1e-15)


def test_1x1_coupling_sparsity_pattern():
    space = SpaceConfig((6, 5))
    m = build_1x1(OneOneParams(), space)
    for r, c, _ in m.V.entries():
        ra, rb = np.unravel_index(r, space.mode_dims)
        ca, cb = np.unravel_index(c, space.mode_dims)
        assert abs(int(ra) - int(ca)) in (0, 2) and abs(int(rb) - int(cb)) in (0, 2)


def test_weyl_diagonal_limit():
    for hbar in (0.1, 0.01, 0.001):
        n = np.arange(0, 200)
        j = hbar * n
        diag = hbar**2 * (2 * n + 1)
        assert np.all(np.abs(diag - 2 * hbar * j) <= hbar * (1 + 2 * j))


def test_total_h():
    space = SpaceConfig((3, 3))
    m0 = build_1x1(OneOneParams(delta=0.0), space)
    np.testing.assert_array_equal(total_h(m0).toarray(), m0.H0.toarray())
    m = build_1x1(OneOneParams(delta=0.3), space)
    h = total_h(m)
    assert h.is_hermitian()
    np.testing.assert_allclose(h.toarray(), m.H0.toarray() + 0.3 * m.V.toarray(), atol=1e-15)


def test_classical_hamiltonian():
    m = build_1x1(OneOneParams(delta=0.04), SpaceConfig((3, 3)))
    j = np.array([0.1, 0.1])
    h0 = (0.1 - 1.2) ** 2 * (1 + 0.6456)
    assert classical_hamiltonian(m, j, [0.0, 1.0]) == pytest.approx(h0, rel=1e-14)
    assert classical_hamiltonian(m, j, [np.pi / 2, np.pi / 2]) == pytest.approx(1.997576, rel=1e-12)
    th = np.array([0.3, 1.1])
    assert classical_hamiltonian(m, j, th) == pytest.approx(classical_hamiltonian(m, j, th + np.pi))
    with pytest.raises(ValueError):
        classical_hamiltonian(m, [-0.1, 0.1], [0, 0])


def test_params_validation():
    with pytest.raises(ValueError):
        OneOneParams(hbar=0)
    with pytest.raises(ValueError):
        TwoTwoParams(delta=-1)
