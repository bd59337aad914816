import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyfacet.datagen import (
    INTERIOR,
    OUTLIER,
    RANK_DEFICIENT_W,
    SynthConfig,
    generate,
    noise_variance,
    purity_of,
    rank_deficient_fixture,
    sample_dirichlet,
    write_dataset,
)
from polyfacet.io import read_json, read_matrix
from polyfacet.metrics import check_fbc


def test_dirichlet_concentration():
    rng = np.random.default_rng(0)
    draws = np.array([sample_dirichlet([1e6, 1e6], rng) for _ in range(1000)])
    assert np.mean(np.all(np.abs(draws - 0.5) <= 0.01, axis=1)) > 0.99


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=8), st.integers(0, 2**32 - 1))
def test_dirichlet_on_simplex(alpha, seed):
    v = sample_dirichlet(alpha, np.random.default_rng(seed))
    assert np.all(v >= 0)
    assert abs(v.sum() - 1) <= 1e-12


def test_dirichlet_single():
    assert sample_dirichlet([1.0], np.random.default_rng(0)).tolist() == [1.0]


def test_dirichlet_rejects_nonpositive():
    with pytest.raises(ValueError):
        sample_dirichlet([1.0, 0.0], np.random.default_rng(0))


def test_noise_variance_formula():
    assert noise_variance(np.ones((2, 2)), 10) == pytest.approx(0.1)
    assert noise_variance(np.ones((2, 2)), float("inf")) == 0.0


def test_separable_purity():
    gt = generate(SynthConfig(r=3, m=3, purity=1.0, seed=2))
    assert purity_of(gt.h_true) > 0.95


@pytest.mark.parametrize("r, p", [(3, 0.6), (4, 0.4), (5, 0.3)])
def test_generate_invariants(r, p):
    cfg = SynthConfig(r=r, m=r, n1=12, n2=6, purity=p, seed=4)
    gt = generate(cfg)
    h = gt.h_true
    assert np.allclose(h.sum(axis=0), 1, atol=1e-12)
    assert purity_of(h) <= p + 1e-12
    assert np.array_equal(gt.x, gt.w_true @ h)
    assert np.linalg.cond(gt.w_true) <= 10 * r
    for k in range(r):
        block = h[:, gt.facet_assignment == k]
        assert block.shape[1] == cfg.n1
        zero_rows = np.flatnonzero(np.all(block == 0, axis=1))
        assert zero_rows.tolist() == [k]
    assert np.sum(gt.facet_assignment == INTERIOR) == cfg.n2


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generated_data_pass_fbc(seed):
    cfg = SynthConfig(r=3, m=3, n1=10, n2=5, purity=0.7, seed=seed)
    gt = generate(cfg)
    rep = check_fbc(gt.w_true, gt.h_true, cfg.n1)
    assert rep.a_vertices and rep.b_simplex and rep.c_facets


def test_determinism():
    cfg = SynthConfig(r=4, m=5, purity=0.5, snr=40, outliers=3, seed=99)
    a, b = generate(cfg), generate(cfg)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.h_true, b.h_true)
    assert np.array_equal(a.w_true, b.w_true)


def test_different_seeds_differ():
    a = generate(SynthConfig(seed=1))
    b = generate(SynthConfig(seed=2))
    assert not np.array_equal(a.x, b.x)


def test_outliers_appended():
    gt = generate(SynthConfig(r=3, m=3, outliers=10, seed=0))
    assert gt.x.shape[1] == 100 + 10
    out = gt.x[:, gt.facet_assignment == OUTLIER]
    assert out.shape[1] == 10 and np.all((out >= 0) & (out <= 1))
    assert gt.h_true.shape[1] == 100


def test_snr_realized():
    cfg = SynthConfig(r=3, m=10, n1=330, n2=10, purity=0.8, snr=30, seed=3)
    gt = generate(cfg)
    clean = gt.w_true @ gt.h_true
    assert clean.size >= 10_000
    expected = noise_variance(clean, 30)
    realized = np.var(gt.x - clean)
    assert abs(realized - expected) / expected < 0.05
    assert gt.noise_sigma**2 == pytest.approx(expected)


def test_low_purity_uses_concentrated_weights():
    gt = generate(SynthConfig(r=5, m=5, n1=5, n2=0, purity=0.26, seed=0))
    assert purity_of(gt.h_true) <= 0.26


@pytest.mark.parametrize("kwargs", [
    {"r": 2}, {"r": 3, "m": 1}, {"r": 3, "n1": 2}, {"purity": 0.5}, {"purity": 1.1},
    {"cond_cap": 0.5}, {"seed": -1}, {"outliers": -1},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def test_rank_deficient_fixture():
    gt = rank_deficient_fixture()
    assert np.linalg.matrix_rank(gt.w_true) == 3
    assert np.array_equal(gt.w_true, RANK_DEFICIENT_W)
    assert gt.x.shape == (4, 200)
    assert purity_of(gt.h_true) <= 0.8
    clean = rank_deficient_fixture(purity=0.7, noise_sigma=0.0, seed=3)
    assert np.array_equal(clean.x, clean.w_true @ clean.h_true)


def test_purity_of():
    assert purity_of(np.eye(3)) == 1.0
    assert purity_of(np.full((4, 5), 0.25)) == 0.25
    with pytest.raises(ValueError):
        purity_of(np.zeros((0, 3)))


def test_write_dataset(tmp_path):
    gt = generate(SynthConfig(r=3, m=3, n1=30, n2=10, purity=0.6, snr=40, seed=7))
    d = write_dataset(gt, tmp_path / "ds")
    assert np.array_equal(read_matrix(d / "X.csv"), gt.x)
    assert np.array_equal(read_matrix(d / "W_true.csv"), gt.w_true)
    meta = read_json(d / "meta.json")
    assert meta["noise_variance"] == pytest.approx(noise_variance(gt.x_clean, 40))
    assert meta["config"]["seed"] == 7
