import math
from dataclasses import replace

import numpy as np
import pytest

from dfop_stream.errors import MissingTruthError, ParameterError, SingularMatrixError
from dfop_stream.estimators import Sample, dfop_init, dfop_update, gdfop_init, gdfop_update, run_states
from dfop_stream.linalg import solve_spd
from dfop_stream.oracle import (
    BoundParams,
    History,
    RunTrace,
    closed_form_weighted_ls,
    confidence_factor,
    dfop_oracle_prior,
    discount_weights,
    gaussian_bounding_scale,
    realized_bound_params,
    theorem2_bound,
    theorem2_terms,
    wtilde_recurrence_check,
)
from simulation.data_generator import gen_drifting_linear


def random_samples(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = X @ rng.standard_normal(d) + 0.1 * rng.standard_normal(n)
    return [Sample(x=x, y=v) for x, v in zip(X, y)]


def base_params(**changes):
    params = BoundParams(K=1.0, x_star=0.0, sigma_star=0.0, gamma_star=0.0, R0_norm=1.0,
                         w_tilde0_norm=1.0, mu=0.5, t=1, delta=0.05)
    return replace(params, **changes)


def dfop_run(trace, mu, p0_scale=1e3):
    samples = list(trace.samples())
    states = run_states(dfop_update, dfop_init(trace.d, mu, p0_scale), samples)
    return RunTrace(
        X=trace.X,
        w_hat=np.stack([s.w_hat for s in states]),
        P=np.stack([s.P for s in states]),
        mu=mu,
        w_true=trace.w,
        s=trace.s,
        eps=trace.eps,
    )


# =================== FORMA CERRADA ===================

def test_discount_weights():
    lam0, weights = discount_weights(np.array([0.5, 0.5, 1.0]))
    assert lam0 == pytest.approx(0.25)
    np.testing.assert_allclose(weights, [0.5, 1.0, 1.0])


def test_empty_history_returns_prior_mean():
    w0 = np.array([1.0, -1.0])
    h = History.from_samples([], 0.9, d=2)
    np.testing.assert_array_equal(closed_form_weighted_ls(h, np.eye(2), w0), w0)


def test_single_sample_ratio():
    h = History.from_samples([Sample(x=np.array([1.0]), y=2.0)], 0.3)
    w = closed_form_weighted_ls(h, 1e-12 * np.eye(1), np.zeros(1))
    assert w[0] == pytest.approx(2.0, abs=1e-6)


def test_zero_prior_needs_spanning_data():
    h = History.from_samples([Sample(x=np.array([1.0, 0.0]), y=1.0)], 1.0)
    with pytest.raises(SingularMatrixError):
        closed_form_weighted_ls(h, np.zeros((2, 2)), np.zeros(2))


def test_matches_gdfop_endpoint():
    rng = np.random.default_rng(4)
    samples = random_samples(4, 50, 3)
    R0 = np.diag(rng.uniform(0.5, 2.0, 3))
    w0 = rng.standard_normal(3)
    state = replace(gdfop_init(3), P=np.linalg.inv(R0), w_hat=w0)
    for s in samples:
        state, _ = gdfop_update(state, s, 0.9)
    exact = closed_form_weighted_ls(History.from_samples(samples, 0.9), R0, w0)
    np.testing.assert_allclose(state.w_hat, exact, atol=1e-8)


def test_unit_discount_is_ridge():
    samples = random_samples(8, 40, 4)
    X = np.stack([s.x for s in samples])
    y = np.array([s.y for s in samples])
    eps = 1e-3
    ridge = solve_spd(X.T @ X + eps * np.eye(4), X.T @ y)
    exact = closed_form_weighted_ls(History.from_samples(samples, 1.0), eps * np.eye(4), np.zeros(4))
    np.testing.assert_allclose(exact, ridge, atol=1e-10)


@pytest.mark.parametrize("mu", [0.01, 0.1, 0.3])
def test_dfop_equals_closed_form_every_step(mu):
    for p0_scale in (1.0, 1e3):
        samples = random_samples(int(mu * 1000) + int(p0_scale), 100, 3)
        R0, lam = dfop_oracle_prior(3, mu, p0_scale)
        state = dfop_init(3, mu, p0_scale)
        for k, s in enumerate(samples, start=1):
            state, _ = dfop_update(state, s)
            exact = closed_form_weighted_ls(History.from_samples(samples[:k], lam), R0, np.zeros(3))
            assert np.linalg.norm(state.w_hat - exact) <= 1e-8


def test_history_validates_lambdas():
    with pytest.raises(ParameterError):
        History.from_samples([Sample(x=np.ones(1), y=0.0)], 1.5)
    with pytest.raises(ParameterError):
        History.from_samples([Sample(x=np.ones(1), y=0.0)], 0.0)


def test_oracle_prior_requires_positive_mu():
    with pytest.raises(ParameterError):
        dfop_oracle_prior(2, 0.0, 1.0)


# =================== COTA ===================

def test_bound_only_initialization_term():
    assert theorem2_bound(base_params()) == pytest.approx(0.5)
    assert theorem2_bound(base_params(t=200)) <= 1e-60


def test_bound_matches_direct_formula():
    p = BoundParams(K=3.2, x_star=1.7, sigma_star=0.4, gamma_star=0.02, R0_norm=1e-3,
                    w_tilde0_norm=1.1, mu=0.01, t=5000, delta=0.05)
    c = math.sqrt(2) * (1 + math.sqrt(3 * math.log(2 * 5000 / 0.05)))
    direct = 3.2 * (0.99 ** 5000 * 1e-3 * 1.1
                    + c * (2 * 0.4 * math.sqrt(0.01) + 0.02 * (1e-3 + 1.7 ** 2) / math.sqrt(0.01)))
    assert theorem2_bound(p) == pytest.approx(direct, rel=1e-12)
    terms = theorem2_terms(p)
    assert terms.total == pytest.approx(direct, rel=1e-12)
    assert set(terms.to_dict()) == {"initialization", "noise", "drift", "total"}


def test_bound_monotonicity():
    p = base_params(x_star=1.0, sigma_star=0.1, gamma_star=0.01, mu=0.05, t=100)
    grid = [0.0, 0.1, 0.5, 1.0]
    for name in ("sigma_star", "gamma_star", "w_tilde0_norm"):
        values = [theorem2_bound(replace(p, **{name: v})) for v in grid]
        assert all(a < b for a, b in zip(values, values[1:])), name
    # en t solo decrece el término de inicialización
    noiseless = base_params(mu=0.05)
    values = [theorem2_bound(replace(noiseless, t=t)) for t in (1, 10, 100, 1000)]
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("changes", [{"mu": 0.0}, {"mu": 1.0}, {"delta": 0.0}, {"delta": 1.0}, {"t": 0}, {"K": -1.0}])
def test_bound_rejects_invalid_params(changes):
    with pytest.raises(ParameterError):
        theorem2_bound(base_params(**changes))


def test_confidence_factor_and_bounding_scale():
    assert confidence_factor(1, 0.5) == pytest.approx(math.sqrt(2) * (1 + math.sqrt(3 * math.log(4))))
    for d in (1, 3, 10):
        c = gaussian_bounding_scale(d)
        assert (1 - 2 / c ** 2) ** (-d / 2) == pytest.approx(math.e, rel=1e-12)


def test_realized_params_from_run():
    trace = gen_drifting_linear(d=3, n=200, gamma=1e-3, sigma=0.1, seed=5)
    run = dfop_run(trace, 0.05)
    params = realized_bound_params(trace.X, run.P, mu=0.05, delta=0.05, gamma=1e-3, sigma=0.1,
                                   R0_norm=1e-3, w_tilde0_norm=1.0)
    assert params.t == 200
    assert params.K == pytest.approx(max(np.max(np.linalg.eigvalsh(P)) for P in run.P[1:]))
    assert params.x_star == pytest.approx(np.max(np.linalg.norm(trace.X, axis=1)))
    assert params.gamma_star == pytest.approx(gaussian_bounding_scale(3) * 1e-3)


# =================== RECURRENCIA ===================

def test_recurrence_noise_and_drift_free():
    trace = gen_drifting_linear(d=3, n=100, gamma=0.0, sigma=0.0, seed=1)
    assert wtilde_recurrence_check(dfop_run(trace, 0.1)) <= 1e-9


def test_recurrence_random_drifting_run():
    trace = gen_drifting_linear(d=3, n=100, gamma=1e-2, sigma=0.1, seed=2)
    assert wtilde_recurrence_check(dfop_run(trace, 0.05)) <= 1e-8


def test_recurrence_detects_corrupted_noise():
    trace = gen_drifting_linear(d=3, n=100, gamma=1e-2, sigma=0.1, seed=3)
    run = dfop_run(trace, 0.1)
    eps = run.eps.copy()
    eps[50] += 1.0
    assert wtilde_recurrence_check(replace(run, eps=eps)) > 1e-3


def test_recurrence_requires_truth():
    trace = gen_drifting_linear(d=2, n=10, seed=0)
    run = replace(dfop_run(trace, 0.1), s=None)
    with pytest.raises(MissingTruthError):
        wtilde_recurrence_check(run)
