import numpy as np
import pytest

import conepart as cp
from conepart.group import MAX_ORDER, regular_action


def test_z3_structure():
    g = cp.make_group(3, 1)
    assert (g.p, g.k, g.d) == (3, 1, 3)
    assert g.op_table.shape == (3, 3)
    assert sorted(g.op_table[0]) == [0, 1, 2]


def test_z3_squared_every_nonzero_element_has_order_3():
    g = cp.make_group(3, 2)
    assert g.d == 9
    for e in range(1, 9):
        cube = g.multiply(g.multiply(e, e), e)
        assert cube == 0
        assert g.multiply(e, e) != 0  # order exactly 3, not 1


def test_even_prime_rejected():
    with pytest.raises(cp.InvalidParameterError):
        cp.make_group(2, 1)


@pytest.mark.parametrize("p", [1, 4, 9, 15])
def test_non_prime_rejected(p):
    with pytest.raises(cp.InvalidParameterError):
        cp.make_group(p, 1)


def test_bad_k_rejected():
    with pytest.raises(cp.InvalidParameterError):
        cp.make_group(3, 0)


def test_capacity_cap():
    with pytest.raises(cp.CapacityError):
        cp.make_group(3, 8)  # 6561 > MAX_ORDER
    assert 3**7 > MAX_ORDER


def test_multiply_examples():
    g = cp.make_group(3, 1)
    assert cp.multiply(g, 1, 2) == 0
    assert cp.multiply(g, 0, 2) == 2
    g9 = cp.make_group(3, 2)
    # digit encoding: (1,0) -> 1, (0,1) -> 3, sum (1,1) -> 4
    assert cp.multiply(g9, 1, 3) == 4


def test_multiply_range_check():
    g = cp.make_group(3, 1)
    with pytest.raises(cp.InvalidParameterError):
        cp.multiply(g, 0, 3)


def test_group_axioms_exhaustive():
    g = cp.make_group(3, 2)
    t = g.op_table
    d = g.d
    assert np.array_equal(t[0], np.arange(d))      # identity
    assert np.array_equal(t, t.T)                  # commutative
    for a in range(d):
        assert sorted(t[a]) == list(range(d))      # latin square
        assert any(t[a, b] == 0 for b in range(d))  # inverse exists
    for a in range(d):
        for b in range(d):
            for c in range(0, d, 4):
                assert t[t[a, b], c] == t[a, t[b, c]]


def test_inverse():
    g = cp.make_group(5, 1)
    for e in range(g.d):
        assert g.multiply(e, g.inverse(e)) == 0


def test_identity_action():
    g = cp.make_group(3, 1)
    a = regular_action(g)
    x = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(cp.act_on_vector(a, 0, x), x)


def test_regular_action_on_basis():
    g = cp.make_group(3, 1)
    a = regular_action(g)
    e0 = np.array([1.0, 0.0, 0.0])
    assert np.array_equal(cp.act_on_vector(a, 1, e0), [0.0, 1.0, 0.0])


def test_action_preserves_norm_and_sum():
    g = cp.make_group(3, 2)
    a = regular_action(g)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.standard_normal(9)
        h = int(rng.integers(9))
        y = cp.act_on_vector(a, h, x)
        # coordinates are exactly permuted; norm/sum only up to summation order
        assert sorted(y) == sorted(x)
        assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), abs=1e-12)
        assert y.sum() == pytest.approx(x.sum(), abs=1e-12)


def test_action_composition_exhaustive_d3():
    g = cp.make_group(3, 1)
    a = regular_action(g)
    rng = np.random.default_rng(1)
    x = rng.standard_normal(3)
    for gg in range(3):
        for hh in range(3):
            lhs = cp.act_on_vector(a, gg, cp.act_on_vector(a, hh, x))
            rhs = cp.act_on_vector(a, cp.multiply(g, gg, hh), x)
            assert np.array_equal(lhs, rhs)


def test_action_composition_sampled_d9():
    g = cp.make_group(3, 2)
    a = regular_action(g)
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.standard_normal(9)
        gg, hh = rng.integers(9, size=2)
        lhs = cp.act_on_vector(a, int(gg), cp.act_on_vector(a, int(hh), x))
        rhs = cp.act_on_vector(a, cp.multiply(g, int(gg), int(hh)), x)
        assert np.array_equal(lhs, rhs)


def test_diagonal_is_fixed():
    g = cp.make_group(5, 1)
    a = regular_action(g)
    ones = np.ones(5)
    for h in range(5):
        assert np.array_equal(cp.act_on_vector(a, h, ones), ones)


def test_permutation_matrices_orthogonal():
    g = cp.make_group(3, 2)
    a = regular_action(g)
    for h in range(g.d):
        mat = a.permutation_matrix(h)
        assert np.array_equal(mat.T @ mat, np.eye(g.d))
        assert abs(abs(np.linalg.det(mat)) - 1.0) < 1e-12
        # matrix realizes the same permutation as the action
        x = np.arange(9.0)
        assert np.array_equal(mat @ x, cp.act_on_vector(a, h, x))


def test_regular_action_transitive():
    g = cp.make_group(3, 2)
    a = regular_action(g)
    # the orbit of basis vector 0 under all g covers every basis index
    orbit = {int(a.perms[h][0]) for h in range(g.d)}
    assert orbit == set(range(g.d))
    assert np.array_equal(a.perms[0], np.arange(g.d))


def test_action_dimension_mismatch():
    g = cp.make_group(3, 1)
    a = regular_action(g)
    with pytest.raises(cp.InvalidParameterError):
        cp.act_on_vector(a, 1, np.zeros(4))


def test_digits_round_trip():
    g = cp.make_group(3, 2)
    assert g.digits(4) == (1, 1)
    assert g.digits(0) == (0, 0)
    assert g.digits(5) == (2, 1)
