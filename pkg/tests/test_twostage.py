import math
from dataclasses import asdict

import numpy as np
import pytest

from denseleaf.densities import make_model
from denseleaf.kde import Dataset, generate_responses, kde_eval, kde_integral, theory_shape
from denseleaf.kernels import build_order_kernel
from denseleaf.network import TrainSchedule, architecture_from_n
from denseleaf.twostage import (
    EstimatorHandle,
    KdeEstimator,
    evaluate,
    evaluate_on,
    fit_fd,
    fit_kde_reference,
    fit_sd,
    load_handle,
    save_handle,
)

BOX = build_order_kernel(0)
QUICK = TrainSchedule(epochs=15)
TRUTH = make_model({"family": "NBm", "d": 2, "seed": 1})


@pytest.fixture(scope="module")
def data():
    return TRUTH.sample(60, 3)


def test_sd_smoke_minimal():
    X = np.array([[0.2, 0.2], [0.21, 0.2], [0.2, 0.22], [0.22, 0.21]])
    h = fit_sd(X, BOX, 0.5, TrainSchedule(epochs=5), seed=0)
    out = h(np.random.default_rng(0).random((500, 2)))
    assert np.all(np.isfinite(out))
    assert h.provenance["m"] == 2


def test_sd_rejects_odd_size():
    with pytest.raises(ValueError):
        fit_sd(np.random.default_rng(0).random((5, 2)), BOX, 0.5)
    with pytest.raises(ValueError):
        fit_fd(np.random.default_rng(0).random((2, 2)), BOX, 0.5)


def test_sd_determinism(data):
    a = fit_sd(data, BOX, 0.5, QUICK, seed=4)
    b = fit_sd(data, BOX, 0.5, QUICK, seed=4)
    for x, y in zip(a.estimator.params.arrays(), b.estimator.params.arrays()):
        assert x.tobytes() == y.tobytes()
    c = fit_sd(data, BOX, 0.5, QUICK, seed=5)
    assert any(x.tobytes() != y.tobytes() for x, y in zip(a.estimator.params.arrays(), c.estimator.params.arrays()))


def test_sd_responses_recomputed(data):
    h = fit_sd(data, BOX, 0.5, QUICK, seed=0)
    X = data.points
    n = X.shape[0] // 2
    bw = 0.5 * theory_shape(n, 2)
    assert h.provenance["bandwidth"] == pytest.approx(bw)
    np.testing.assert_array_equal(h.provenance["responses"], generate_responses(X[n:], X[:n], BOX, bw))
    assert np.all(h.provenance["responses"] >= 0)
    arch = h.estimator.arch
    assert arch == architecture_from_n(n, 2, arch.sup_cap)
    assert arch.sup_cap == max(1.0, float(np.max(h.provenance["responses"])))


def test_fd_responses_include_self(data):
    h = fit_fd(data, BOX, 0.5, QUICK, seed=0)
    X = data.points
    N = X.shape[0]
    bw = 0.5 * theory_shape(N, 2)
    np.testing.assert_allclose(h.provenance["responses"], kde_eval(X, BOX, bw, X), rtol=1e-14)
    assert h.provenance["m"] == N
    loo = fit_fd(data, BOX, 0.5, QUICK, seed=0, self_inclusion=False).provenance["responses"]
    manual = (kde_eval(X, BOX, bw, X) * N - 0.25 / bw**2) / (N - 1)
    np.testing.assert_allclose(loo, manual, rtol=1e-12, atol=1e-12)


def test_fd_differs_from_sd_with_identical_halves():
    half = np.random.default_rng(0).random((5, 1)) * 0.8 + 0.1
    X = np.vstack([half, half])
    sd = fit_sd(X, BOX, 0.1, TrainSchedule(epochs=2), seed=0).provenance["responses"]
    fd = fit_fd(X, BOX, 0.1, TrainSchedule(epochs=2), seed=0).provenance["responses"]
    assert not np.allclose(sd, fd[:5])


def test_fd_architecture_uses_all_points():
    X = TRUTH.sample(200, 1)
    arch = fit_fd(X, BOX, 0.5, TrainSchedule(epochs=1), seed=0).estimator.arch
    assert arch.widths[1:-1] == (20,) * 9


def test_fd_determinism(data):
    a = fit_fd(data, BOX, 0.5, QUICK, seed=2)
    b = fit_fd(data, BOX, 0.5, QUICK, seed=2)
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.estimator.params.arrays(), b.estimator.params.arrays()))


def test_kde_reference():
    X = TRUTH.sample(100, 2)
    h1 = fit_kde_reference(X, BOX, 0.4, 0.5)
    h2 = fit_kde_reference(X, BOX, 0.8, 0.5)
    assert h1.estimator.h == pytest.approx(0.4 * 100 ** (-1 / 3))
    assert h2.estimator.h == pytest.approx(2 * h1.estimator.h, rel=1e-14)
    far = Dataset(np.full((4, 2), 0.05))
    assert fit_kde_reference(far, BOX, 0.1, 0.5)(np.array([[0.9, 0.9]]))[0] == 0.0
    assert abs(kde_integral(X, BOX, h1.estimator.h) - 1.0) < 1e-6
    assert math.isnan(h1.train_error)


def test_handle_validation():
    with pytest.raises(ValueError):
        EstimatorHandle("XX", KdeEstimator(np.zeros((1, 1)), BOX, 0.1))
    with pytest.raises(TypeError):
        EstimatorHandle("SD", KdeEstimator(np.zeros((1, 1)), BOX, 0.1))


def test_evaluate_oracle_and_zero():
    assert evaluate(TRUTH.pdf, TRUTH, 1000, 1).test_error == 0.0
    r = evaluate(lambda X: np.zeros(len(X)), TRUTH, 1000, 1)
    assert r.test_error == r.zero_baseline > 0
    assert r.n_test == 1000
    with pytest.raises(ValueError):
        evaluate(TRUTH.pdf, TRUTH, 0, 1)


def test_evaluate_clt_two_seeds(data):
    h = fit_kde_reference(data, BOX, 0.5, 0.5)
    n = 100_000
    a = evaluate(h, TRUTH, n, 1)
    b = evaluate(h, TRUTH, n, 2)
    T = TRUTH.sample(n, 3).points
    sd = np.std((h(T) - TRUTH.pdf(T)) ** 2)
    assert abs(a.test_error - b.test_error) <= 3 * math.sqrt(2) * sd / math.sqrt(n)


def _same(a, b):
    return repr(asdict(a)) == repr(asdict(b))  # repr makes NaN fields comparable


def test_evaluate_pure(data):
    h = fit_sd(data, BOX, 0.5, QUICK, seed=0)
    assert _same(evaluate(h, TRUTH, 2000, 9), evaluate(h, TRUTH, 2000, 9))


def test_test_error_bounded(data):
    g = np.linspace(0, 1, 401)
    G = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    fmax = TRUTH.pdf(G).max()
    for fit in (fit_sd, fit_fd):
        h = fit(data, BOX, 0.5, QUICK, seed=0)
        r = evaluate(h, TRUTH, 5000, 0)
        assert r.test_error <= (h.estimator.arch.sup_cap + fmax) ** 2
        assert r.train_error == h.provenance["train_error"]


def test_evaluate_on_matches_evaluate(data):
    h = fit_kde_reference(data, BOX, 0.5, 0.5)
    T = TRUTH.sample(3000, 4).points
    assert _same(evaluate_on(h, T, TRUTH.pdf(T)), evaluate(h, TRUTH, 3000, 4))


@pytest.mark.parametrize("method", ["SD", "FD", "KDE"])
def test_save_load(tmp_path, data, method):
    if method == "KDE":
        h = fit_kde_reference(data, BOX, 0.5, 0.5)
    else:
        h = (fit_sd if method == "SD" else fit_fd)(data, BOX, 0.5, QUICK, seed=1)
    save_handle(h, tmp_path / method)
    back = load_handle(tmp_path / method)
    assert back.method == method
    Q = np.random.default_rng(0).random((300, 2))
    assert h(Q).tobytes() == back(Q).tobytes()
    if method != "KDE":
        assert back.train_error == h.train_error
