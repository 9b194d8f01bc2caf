import numpy as np
import pytest
from hypothesis import given, strategies as st

from purity_decay.fock import (DimensionError, SpaceConfig, SparseOperator, StateVector, apply,
                               commutator, embed, lowering_op, number_op, op_combine, op_multiply,
                               quadrature_squared_op, raising_op)

from conftest import random_state


def test_space_config():
    s = SpaceConfig((3, 4, 5))
    assert s.n_modes == 3 and s.total_dim == 60
    with pytest.raises(DimensionError):
        SpaceConfig((3, 1))


def test_lowering_small():
    assert lowering_op(2).entries() == [(0, 1, 1.0)]
    e = lowering_op(3).entries()
    assert [(r, c) for r, c, _ in e] == [(0, 1), (1, 2)]
    assert np.allclose([v for *_, v in e], [1.0, np.sqrt(2.0)])
    with pytest.raises(DimensionError):
        lowering_op(1)


def test_number_op():
    np.testing.assert_array_equal(number_op(2).toarray(), np.diag([0, 1]))
    n4 = op_multiply(raising_op(4), lowering_op(4))
    np.testing.assert_allclose(n4.toarray(), np.diag([0, 1, 2, 3]), atol=1e-15)
    np.testing.assert_allclose(number_op(4).toarray(), n4.toarray(), atol=1e-15)
    for d in (2, 5, 9):
        assert np.trace(number_op(d).toarray()).real == pytest.approx(d * (d - 1) / 2)


@given(st.integers(2, 12))
def test_ladder_relations(dim):
    a = lowering_op(dim)
    ad = raising_op(dim)
    np.testing.assert_allclose(ad.toarray(), a.toarray().conj().T)
    comm = commutator(a, ad).toarray()
    np.testing.assert_allclose(comm[: dim - 1, : dim - 1], np.eye(dim - 1), atol=1e-12)


def test_quadrature_squared_matches_untruncated_product():
    dim = 6
    big = lowering_op(dim + 2)
    x = big + big.dagger()
    dense = op_multiply(x, x).toarray()[:dim, :dim]
    np.testing.assert_allclose(quadrature_squared_op(dim).toarray(), dense, atol=1e-14)
    np.testing.assert_allclose(np.diag(quadrature_squared_op(dim).toarray()).real,
                               2 * np.arange(dim) + 1)


def test_embed_identity_and_number():
    space = SpaceConfig((2, 3))
    np.testing.assert_array_equal(embed(SparseOperator.identity(3), 1, space).toarray(), np.eye(6))
    s22 = SpaceConfig((2, 2))
    np.testing.assert_array_equal(np.diag(embed(number_op(2), 0, s22).toarray()).real, [0, 0, 1, 1])
    with pytest.raises(DimensionError):
        embed(number_op(3), 0, s22)


def test_embed_commutator_dense_oracle():
    space = SpaceConfig((2, 2))
    a, ad = lowering_op(2), raising_op(2)
    x = op_multiply(embed(a, 0, space), embed(ad, 1, space))
    y = op_multiply(embed(ad, 0, space), embed(a, 1, space))
    got = commutator(x, y).toarray()

    da, dad, i2 = a.toarray(), ad.toarray(), np.eye(2)
    dx = np.kron(da, i2) @ np.kron(i2, dad)
    dy = np.kron(dad, i2) @ np.kron(i2, da)
    np.testing.assert_allclose(got, dx @ dy - dy @ dx, atol=1e-14)


@pytest.mark.parametrize("dims,mode", [((2, 3), 0), ((3, 4), 1), ((2, 2, 3), 2), ((4, 2, 2), 1)])
def test_embed_preserves_hermiticity_and_spectrum(dims, mode, rng):
    d = dims[mode]
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    op = SparseOperator(m + m.conj().T, hermitian=True)
    space = SpaceConfig(dims)
    big = embed(op, mode, space)
    assert big.hermitian and big.is_hermitian()
    ev_small = np.linalg.eigvalsh(op.toarray())
    ev_big = np.linalg.eigvalsh(big.toarray())
    np.testing.assert_allclose(np.sort(np.repeat(ev_small, space.total_dim // d)), ev_big, atol=1e-12)


def test_combine_and_apply(rng):
    a = lowering_op(5)
    assert op_combine([(1.0, a), (-1.0, a)]).is_zero()
    psi = StateVector(random_state(rng, 12), SpaceConfig((3, 4)))
    np.testing.assert_allclose(apply(SparseOperator.identity(12), psi), psi.amplitudes)
    m = rng.standard_normal((12, 12)) * (rng.random((12, 12)) < 0.3)
    op = SparseOperator(m)
    np.testing.assert_allclose(apply(op, psi), m @ psi.amplitudes, atol=1e-14)
    with pytest.raises(DimensionError):
        op_combine([(1.0, a), (1.0, lowering_op(4))])
    with pytest.raises(DimensionError):
        apply(a, psi)


def test_canonicalization():
    op = SparseOperator.from_entries(3, [(0, 1, 1.0), (0, 1, 2.0), (2, 2, 1e-17)])
    assert op.entries() == [(0, 1, 3.0)]
    assert not op.hermitian
    with pytest.raises(ValueError):
        SparseOperator.from_entries(2, [(0, 1, 1.0)], hermitian=True)
    h = SparseOperator.from_entries(2, [(0, 1, 1j), (1, 0, -1j)], hermitian=True)
    assert h.is_hermitian()


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
def test_apply_linear(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    op = op_combine([(0.7, lowering_op(8)), (1.3, number_op(8))])
    x, y = random_state(rng, 8), random_state(rng, 8)
    lhs = apply(op, alpha * x + beta * y)
    rhs = alpha * apply(op, x) + beta * apply(op, y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_state_vector_norm_check():
    space = SpaceConfig((2, 2))
    with pytest.raises(ValueError):
        StateVector(np.ones(4), space)
    s = StateVector.normalized(np.ones(4), space)
    assert np.linalg.norm(s.amplitudes) == pytest.approx(1.0)
    assert StateVector.basis((1, 0), space).amplitudes[2] == 1.0
