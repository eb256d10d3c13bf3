import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boca.gp import (
    GPError,
    HyperBounds,
    TrainingSet,
    fit,
    jittered_cholesky,
    learn_hyperparameters,
    log_marginal_likelihood,
    pack,
    predict,
    predict_target,
    unpack,
)
from boca.kernels import KernelSpec, gram

from oracles import dense_gp


def random_problem(rng, n, p=1, d=2):
    spec = KernelSpec(rng.uniform(0.5, 3.0), tuple(rng.uniform(0.1, 2.0, d)), tuple(rng.uniform(0.1, 2.0, p)))
    data = TrainingSet(rng.uniform(size=(n, p)), rng.uniform(size=(n, d)), rng.normal(size=n))
    return spec, data, rng.uniform(0.01, 1.0), rng.normal()


def test_dense_oracle_agreement():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(1, 11))
        spec, data, noise, mean = random_problem(rng, n)
        post = fit(spec, data, noise, mean)
        qz, qx = rng.uniform(size=(6, 1)), rng.uniform(size=(6, 2))
        mu, sd = predict(post, qz, qx)
        m_ref, v_ref, lml_ref = dense_gp(
            data.points, data.y, np.hstack([qz, qx]), spec.scale, spec.fidelity_bandwidths,
            spec.domain_bandwidths, noise, mean,
        )
        np.testing.assert_allclose(mu, m_ref, atol=1e-8)
        np.testing.assert_allclose(sd**2, v_ref, atol=1e-8)
        assert log_marginal_likelihood(spec, data, noise, mean) == pytest.approx(lml_ref, abs=1e-8)


def test_single_observation_closed_form():
    spec = KernelSpec(2.0, (0.3,), (0.4,))
    data = TrainingSet([[0.5]], [[0.2]], [1.5])
    mu, sd = predict(fit(spec, data, 0.1), [0.5], [0.2])
    assert mu == pytest.approx(2.0 * 1.5 / 2.1, abs=1e-12)
    assert sd**2 == pytest.approx(2.0 - 4.0 / 2.1, abs=1e-12)


def test_prior_prediction():
    spec = KernelSpec(4.0, (0.3, 0.3), (0.2,))
    post = fit(spec, TrainingSet.empty(1, 2), 0.1, prior_mean=1.25)
    assert predict(post, [0.3], [0.1, 0.9]) == (1.25, 2.0)
    mu, sd = predict_target(post, np.random.default_rng(1).uniform(size=(5, 2)), [1.0])
    np.testing.assert_array_equal(mu, 1.25)
    np.testing.assert_array_equal(sd, 2.0)


def test_noiseless_interpolation():
    rng = np.random.default_rng(2)
    spec = KernelSpec(1.0, (0.3, 0.3), (0.5,))
    data = TrainingSet(rng.uniform(size=(8, 1)), rng.uniform(size=(8, 2)), rng.normal(size=8))
    post = fit(spec, data, 1e-10)
    mu, _ = predict(post, data.Z, data.X)
    np.testing.assert_allclose(mu, data.y, atol=1e-4)


def test_far_from_data_reverts_to_prior_std():
    spec = KernelSpec(3.0, (0.05,), (0.05,))
    data = TrainingSet([[0.0], [0.1]], [[0.0], [0.05]], [1.0, 2.0])
    _, sd = predict(fit(spec, data, 0.01), [1.0], [1.0])
    assert sd == pytest.approx(math.sqrt(3.0), abs=1e-6)


def test_predict_target_is_top_slice():
    rng = np.random.default_rng(3)
    spec, data, noise, mean = random_problem(rng, 7)
    post = fit(spec, data, noise, mean)
    x = rng.uniform(size=(4, 2))
    np.testing.assert_array_equal(predict_target(post, x, [1.0])[0], predict(post, [1.0], x)[0])


def test_predict_rejects_wrong_dimensions():
    post = fit(KernelSpec(1.0, (0.3, 0.3), (0.5,)), TrainingSet.empty(1, 2), 0.1)
    with pytest.raises(ValueError):
        predict(post, [1.0], [0.1, 0.2, 0.3])


def test_fit_rejects_bad_noise():
    with pytest.raises(ValueError):
        fit(KernelSpec(1.0, (0.3,), (0.5,)), TrainingSet.empty(1, 1), 0.0)


def test_jittered_cholesky_rescues_singular_matrix():
    A = np.ones((3, 3))
    L = jittered_cholesky(A, 1.0)
    np.testing.assert_allclose(L @ L.T, A, atol=1e-4)
    with pytest.raises(GPError):
        jittered_cholesky(-np.eye(2), 1.0)


def test_lml_single_point_closed_form():
    spec = KernelSpec(1.7, (0.4,), (0.6,))
    y, eta2 = 0.8, 0.3
    data = TrainingSet([[0.2]], [[0.9]], [y])
    s = 1.7 + eta2
    expected = -0.5 * y * y / s - 0.5 * math.log(s) - 0.5 * math.log(2 * math.pi)
    assert log_marginal_likelihood(spec, data, eta2, 0.0) == pytest.approx(expected, abs=1e-12)


def test_lml_permutation_invariant():
    rng = np.random.default_rng(4)
    spec, data, noise, mean = random_problem(rng, 9)
    perm = rng.permutation(9)
    shuffled = TrainingSet(data.Z[perm], data.X[perm], data.y[perm])
    assert log_marginal_likelihood(spec, shuffled, noise, mean) == pytest.approx(
        log_marginal_likelihood(spec, data, noise, mean), abs=1e-10
    )


def test_pack_unpack_round_trip():
    spec = KernelSpec(2.0, (0.1, 0.2), (0.3,))
    back, noise = unpack(pack(spec, 0.05), d=2, p=1)
    assert back.scale == pytest.approx(2.0)
    assert back.domain_bandwidths == pytest.approx((0.1, 0.2))
    assert back.fidelity_bandwidths == pytest.approx((0.3,))
    assert noise == pytest.approx(0.05)


def test_learn_hyperparameters_contract():
    rng = np.random.default_rng(5)
    data = TrainingSet(rng.uniform(size=(15, 1)), rng.uniform(size=(15, 2)), rng.normal(size=15) * 3 + 1)
    bounds = HyperBounds.default(data)
    spec, noise, mean = learn_hyperparameters(data, bounds)
    assert mean == pytest.approx(np.median(data.y))
    theta = pack(spec, noise)
    assert bounds.contains(theta)
    c_spec, c_noise = unpack(bounds.center(), d=2, p=1)
    assert log_marginal_likelihood(spec, data, noise, mean) >= log_marginal_likelihood(c_spec, data, c_noise, mean)


def test_learn_hyperparameters_rejects_degenerate_data():
    with pytest.raises(ValueError):
        learn_hyperparameters(TrainingSet([[1.0]], [[0.5]], [1.0]))
    with pytest.raises(ValueError):
        learn_hyperparameters(TrainingSet([[1.0], [1.0]], [[0.5], [0.2]], [1.0, 1.0]))


def _sample_1d(h, seed, n=30):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(size=(n, 1)), axis=0)
    spec = KernelSpec(1.0, (h,), ())
    K = gram(x, x, spec) + 1e-6 * np.eye(n)
    y = np.linalg.cholesky(K) @ rng.standard_normal(n) + 0.01 * rng.standard_normal(n)
    return TrainingSet(np.empty((n, 0)), x, y)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_learned_bandwidth_tracks_smoothness(seed):
    smooth, _, _ = learn_hyperparameters(_sample_1d(0.5, seed))
    rough, _, _ = learn_hyperparameters(_sample_1d(0.05, seed))
    assert smooth.domain_bandwidths[0] > rough.domain_bandwidths[0]


def posterior_variance_bound_slack(scale, h, noise, s, u1, u):
    spec = KernelSpec(scale, (h,), (h,))
    data = TrainingSet(np.full((s, 1), u1[0]), np.full((s, 1), u1[1]), np.zeros(s))
    _, sd = predict(fit(spec, data, noise), [u[0]], [u[1]])
    phi = math.exp(-0.5 * ((u[0] - u1[0]) ** 2 + (u[1] - u1[1]) ** 2) / h**2)
    bound = scale * (1 - phi**2) + (noise / s) / (1 + noise / (scale * s))
    return bound - sd**2


def test_posterior_variance_bound_lemma():
    rng = np.random.default_rng(6)
    for s in (1, 5, 20):
        for _ in range(60):
            slack = posterior_variance_bound_slack(
                rng.uniform(0.2, 3), rng.uniform(0.05, 1.5), rng.uniform(1e-3, 1), s,
                rng.uniform(size=2), rng.uniform(size=2),
            )
            assert slack >= -1e-8


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 8))
def test_adding_observation_never_increases_variance(seed, n):
    rng = np.random.default_rng(seed)
    spec, data, noise, mean = random_problem(rng, n)
    probes = rng.uniform(size=(10, 3))
    before = predict(fit(spec, data, noise, mean), probes[:, :1], probes[:, 1:])[1]
    bigger = data.append(rng.uniform(size=1), rng.uniform(size=2), rng.normal())
    after = predict(fit(spec, bigger, noise, mean), probes[:, :1], probes[:, 1:])[1]
    assert np.all(after**2 <= before**2 + 1e-9)
