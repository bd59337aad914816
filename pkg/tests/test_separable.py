import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SQUARE_X
from polyfacet.datagen import SynthConfig, generate, rank_deficient_fixture
from polyfacet.metrics import err
from polyfacet.separable import snpa, spa


def _separable(seed, r=4, m=6, n=20):
    rng = np.random.default_rng(seed)
    w = rng.uniform(size=(m, r))
    h = np.hstack([np.eye(r), rng.dirichlet(np.ones(r), n).T])
    perm = rng.permutation(h.shape[1])
    h = h[:, perm]
    truth = sorted(int(np.flatnonzero(perm == k)[0]) for k in range(r))
    return w @ h, truth


@pytest.mark.parametrize("algo", [spa, snpa])
def test_identity_block(algo):
    rng = np.random.default_rng(0)
    x = np.hstack([np.eye(3), rng.dirichlet(np.ones(3), 10).T])
    assert sorted(algo(x, 3).indices.tolist()) == [0, 1, 2]


@pytest.mark.parametrize("algo", [spa, snpa])
def test_duplicated_vertices(algo):
    x = np.hstack([np.eye(3), np.eye(3), np.full((3, 1), 1 / 3)])
    idx = algo(x, 3).indices
    assert sorted(i % 3 for i in idx) == [0, 1, 2]


def test_spa_square_collapses():
    # rank 2: after two selections the residual is numerically zero
    res = spa(SQUARE_X, 2)
    assert len(res.indices) == 2
    with pytest.raises(ValueError, match="numerically zero"):
        spa(SQUARE_X, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_separable_recovery_and_agreement(seed):
    x, truth = _separable(seed)
    a, b = spa(x, 4), snpa(x, 4)
    assert sorted(a.indices.tolist()) == truth
    assert sorted(b.indices.tolist()) == truth
    for res in (a, b):
        assert np.all(np.diff(res.residual_norms) < 0)
        assert np.array_equal(res.w, x[:, res.indices])


def test_snpa_same_indices_as_spa_noiseless():
    gt = generate(SynthConfig(r=4, m=4, purity=1.0, seed=3))
    assert sorted(spa(gt.x, 4).indices) == sorted(snpa(gt.x, 4).indices)


def test_snpa_rank_deficient_error():
    gt = rank_deficient_fixture(purity=0.8, seed=0)
    assert err(gt.w_true, snpa(gt.x, 4).w) > 0.1


def test_r_one_picks_max_norm(rng):
    x = rng.uniform(size=(3, 9))
    j = int(np.argmax(np.linalg.norm(x, axis=0)))
    assert spa(x, 1).indices.tolist() == [j]
    assert snpa(x, 1).indices.tolist() == [j]


def test_tie_breaks_to_lowest_index():
    x = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    assert spa(x, 1).indices.tolist() == [0]


def test_r_out_of_range(rng):
    with pytest.raises(ValueError):
        spa(rng.uniform(size=(3, 4)), 5)
    with pytest.raises(ValueError):
        snpa(rng.uniform(size=(3, 4)), 0)


def test_snpa_selection_not_interior():
    rng = np.random.default_rng(4)
    x = rng.uniform(size=(5, 30))
    res = snpa(x, 4)
    assert np.all(res.residual_norms > 1e-9)
