import numpy as np
import pytest

from graph2ts import _accel as acc


@pytest.fixture(scope="module")
def sets(rng=None):
    r = np.random.default_rng(77)
    return r.standard_normal((120, 16)), r.standard_normal((90, 16))


def test_min_dist_paths_agree(sets):
    a, b = sets
    fast = acc.min_dist_to_set(a, b)
    ref = acc._min_dist_to_set_np(a, b)
    assert np.allclose(fast, ref, rtol=1e-12, atol=1e-12)


def test_nn_excl_self_paths_agree(sets):
    a, _ = sets
    assert np.allclose(
        acc.nn_dist_excl_self(a), acc._nn_dist_excl_self_np(a), rtol=1e-12, atol=1e-12
    )


def test_medoid_paths_agree(sets):
    a, _ = sets
    assert acc.medoid_index(a) == acc._medoid_index_np(a)


def test_medoid_tie_takes_lowest_index():
    a = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    assert acc.medoid_index(a) == 0
    assert acc._medoid_index_np(a) == 0


def test_transition_counts_paths_agree():
    rng = np.random.default_rng(3)
    s = rng.integers(1, 7, size=(40, 20))
    assert np.array_equal(acc.transition_counts(s, 6), acc._transition_counts_np(s, 6))


def test_transition_counts_values():
    s = np.array([[1, 2, 2, 1]])
    c = acc.transition_counts(s, 2)[0]
    assert np.array_equal(c, [[0, 1], [1, 1]])


def test_identical_rows_give_exact_zero(sets):
    a, _ = sets
    assert acc.min_dist_to_set(a, a).max() == 0.0
    assert acc._min_dist_to_set_np(a, a).max() == 0.0


def test_numba_flag_exposed():
    assert isinstance(acc.USING_NUMBA, bool)
