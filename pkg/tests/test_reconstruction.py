import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluxjc.reconstruction import (
    IllConditionedGridError,
    bayesian_infer,
    build_map,
    fidelity,
    has_negative_eigenvalue,
    linear_inversion,
    param_vector,
    project_physical,
    rho_from_params,
)
from fluxjc.tomography import make_grid, wigner_exact


def _random_rho(d, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def _embed(rho, trunc):
    out = np.zeros((trunc, trunc), dtype=complex)
    out[: rho.shape[0], : rho.shape[0]] = rho
    return out


def test_param_vector_roundtrip_random():
    for seed in range(5):
        rho = _random_rho(5, seed)
        back = rho_from_params(param_vector(rho), 5)
        assert np.max(np.abs(back - rho)) < 1e-12


def test_rho_from_params_enforces_trace():
    y = np.zeros(3 * 3 - 1)
    y[0], y[1] = 0.2, 0.3
    rho = rho_from_params(y, 3)
    assert np.trace(rho) == pytest.approx(1.0)
    assert rho[2, 2] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        rho_from_params(np.zeros(5), 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.integers(0, 1000))
def test_param_roundtrip_property(d, seed):
    rho = _random_rho(d, seed)
    assert np.allclose(rho_from_params(param_vector(rho), d), rho, atol=1e-12)


def test_linear_inversion_recovers_exact_data():
    d = 4
    grid = make_grid("square", extent=1.8, n_points=5)
    wmap = build_map(grid, d)
    rho = _random_rho(d, 11)
    x = np.array([wigner_exact(_embed(rho, wmap.trunc), a) for a in grid])
    est = linear_inversion(x, wmap)
    # trace distance
    w = np.linalg.eigvalsh(est - rho)
    assert 0.5 * np.sum(np.abs(w)) < 1e-8


def test_linear_inversion_unphysical_on_noisy_data():
    d = 3
    grid = make_grid("square", extent=1.6, n_points=4)
    wmap = build_map(grid, d)
    rho = np.diag([1.0, 0.0, 0.0]).astype(complex)  # pure state: eigenvalue 0
    x = np.array([wigner_exact(_embed(rho, wmap.trunc), a) for a in grid])
    rng = np.random.default_rng(0)
    est = linear_inversion(x + 0.01 * rng.standard_normal(x.size), wmap)
    assert has_negative_eigenvalue(est)
    fixed = project_physical(est)
    assert not has_negative_eigenvalue(fixed)
    assert np.trace(fixed).real == pytest.approx(1.0)


def test_build_map_rejects_underdetermined_grid():
    with pytest.raises(IllConditionedGridError):
        build_map(np.array([0.0, 0.5, 1.0j]), d=4)


def test_bayesian_posterior_tracks_linear_inversion():
    d = 3
    rho = _random_rho(d, 21)
    res = bayesian_infer(rho, repetitions=10 ** 6, seed=4,
                         n_samples=128, thinning=32, burn_in=2000)
    mean = res.posterior_mean()
    assert np.max(np.abs(mean - rho)) < 0.01
    assert 0.05 < res.acceptance_rate < 0.95
    assert np.trace(mean).real == pytest.approx(1.0, abs=1e-9)
    assert not has_negative_eigenvalue(mean, tol=1e-8)


def test_bayesian_deterministic_for_fixed_seed():
    rho = _random_rho(2, 5)
    a = bayesian_infer(rho, 10 ** 4, seed=9, n_samples=32, thinning=8,
                       burn_in=500)
    b = bayesian_infer(rho, 10 ** 4, seed=9, n_samples=32, thinning=8,
                       burn_in=500)
    assert np.array_equal(a.posterior_mean(), b.posterior_mean())
    c = bayesian_infer(rho, 10 ** 4, seed=10, n_samples=32, thinning=8,
                       burn_in=500)
    assert not np.array_equal(a.posterior_mean(), c.posterior_mean())


def test_bayesian_width_shrinks_with_repetitions():
    rho = _random_rho(2, 7)
    lo = bayesian_infer(rho, 10 ** 3, seed=1, n_samples=128, thinning=16,
                        burn_in=1500)
    hi = bayesian_infer(rho, 10 ** 6, seed=1, n_samples=128, thinning=16,
                        burn_in=1500)
    spread = lambda r: np.mean(
        [np.std([param_vector(s)[k] for s in r.samples])
         for k in range(3)]
    )
    assert spread(hi) < spread(lo) / 3.0


def test_bayesian_validates_repetitions():
    with pytest.raises(ValueError):
        bayesian_infer(np.eye(2) / 2.0, repetitions=0)


def test_fidelity_pure_state_overlap():
    a = np.array([1.0, 0.0])
    b = np.array([np.sqrt(0.7), np.sqrt(0.3)])
    ra = np.outer(a, a)
    rb = np.outer(b, b)
    assert fidelity(ra, rb) == pytest.approx(0.7, abs=1e-12)
    assert fidelity(ra, ra) == pytest.approx(1.0)


def test_fidelity_symmetric_and_validated():
    x = _random_rho(4, 2)
    y = _random_rho(4, 3)
    assert fidelity(x, y) == pytest.approx(fidelity(y, x), abs=1e-10)
    with pytest.raises(ValueError):
        fidelity(np.eye(4), y)  # trace 4


def test_fidelity_mixed_oracle_commuting():
    # commuting states: F = (sum sqrt(p q))^2
    p = np.array([0.5, 0.3, 0.2])
    q = np.array([0.2, 0.5, 0.3])
    f = fidelity(np.diag(p).astype(complex), np.diag(q).astype(complex))
    assert f == pytest.approx(np.sum(np.sqrt(p * q)) ** 2, abs=1e-12)
