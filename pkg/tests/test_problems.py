"""Test objectives: analytic derivatives against finite-difference oracles,
documented minimizers, batching semantics, and the synthetic dataset."""

import numpy as np
import pytest

from conftest import fd_gradient, fd_hessian
from genopt.core import FULL_DATA, IndexSet, SyntheticNoise
from genopt.problems import (
    BealeProblem,
    LogisticRegressionProblem,
    QuadraticProblem,
    RosenbrockProblem,
    beale_eval,
    generate_dataset,
    logreg_minibatch,
    quadratic_eval,
    rosenbrock_eval,
)


# ---------------------------------------------------------------------------
# Rosenbrock and Beale


def test_rosenbrock_documented_points():
    p = RosenbrockProblem()
    assert p.dim == 2
    np.testing.assert_array_equal(p.known_minimizer, [1.0, 1.0])
    np.testing.assert_array_equal(p.default_start, [-1.5, 2.0])
    assert p.loss(np.array([1.0, 1.0])) == 0.0
    np.testing.assert_array_equal(p.grad(np.array([1.0, 1.0])), [0.0, 0.0])


def test_beale_documented_points():
    p = BealeProblem()
    np.testing.assert_array_equal(p.known_minimizer, [3.0, 0.5])
    np.testing.assert_array_equal(p.default_start, [-2.0, -2.0])
    assert p.loss(np.array([3.0, 0.5])) == 0.0
    np.testing.assert_allclose(p.grad(np.array([3.0, 0.5])), [0.0, 0.0], atol=1e-14)


@pytest.mark.parametrize("make", [RosenbrockProblem, BealeProblem])
def test_testfunction_derivatives_match_fd(make):
    p = make()
    rng = np.random.default_rng(42)
    for _ in range(30):
        w = rng.uniform(-3.0, 3.0, size=2)
        g = p.grad(w)
        scale = 1.0 + np.linalg.norm(g)
        np.testing.assert_allclose(g, fd_gradient(p, w), rtol=1e-5, atol=1e-5 * scale)
        h = p.hessian(w)
        np.testing.assert_allclose(h, h.T, rtol=0, atol=0)
        np.testing.assert_allclose(
            h, fd_hessian(p, w), rtol=1e-5, atol=1e-4 * (1.0 + np.abs(h).max())
        )


@pytest.mark.parametrize("make", [RosenbrockProblem, BealeProblem])
def test_gradient_vanishes_only_near_minimum(make):
    # Scan a 100x100 grid over [-5, 5]^2: tiny gradients must only show up
    # next to the documented minimizer.
    p = make()
    xs = np.linspace(-5.0, 5.0, 100)
    for x in xs:
        for y in xs:
            w = np.array([x, y])
            if np.linalg.norm(p.grad(w)) < 1e-10:
                assert np.linalg.norm(w - p.known_minimizer) < 0.2


def test_hvp_via_exact_hessian():
    rng = np.random.default_rng(0)
    for p in (RosenbrockProblem(), BealeProblem()):
        assert p.has_exact_hessian
        for _ in range(10):
            w = rng.uniform(-2.0, 2.0, size=2)
            v = rng.standard_normal(2)
            np.testing.assert_allclose(p.hvp(w, v), p.hessian(w) @ v, rtol=1e-14)


def test_eval_helpers_agree_with_classes():
    w = np.array([0.3, -1.2])
    p = RosenbrockProblem()
    l, g, h = rosenbrock_eval(w)
    assert l == p.loss(w)
    np.testing.assert_array_equal(g, p.grad(w))
    np.testing.assert_array_equal(h, p.hessian(w))
    b = BealeProblem()
    l2, g2, h2 = beale_eval(w)
    assert l2 == b.loss(w)
    np.testing.assert_array_equal(g2, b.grad(w))
    np.testing.assert_array_equal(h2, b.hessian(w))


# ---------------------------------------------------------------------------
# Quadratic


def test_quadratic_validation():
    with pytest.raises(ValueError):
        QuadraticProblem(np.zeros((2, 3)))
    asym = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        QuadraticProblem(asym)
    indefinite = np.array([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValueError):
        QuadraticProblem(indefinite)
    with pytest.raises(ValueError):
        QuadraticProblem(np.eye(2), offset=np.zeros(3))


def test_quadratic_small_asymmetry_is_symmetrized():
    a = np.array([[2.0, 1.0], [1.0 + 1e-14, 2.0]])
    p = QuadraticProblem(a)
    np.testing.assert_array_equal(p.matrix_a, p.matrix_a.T)


def test_quadratic_loss_grad_hessian():
    rng = np.random.default_rng(9)
    m = rng.standard_normal((4, 4))
    a = m @ m.T + 4.0 * np.eye(4)
    offset = rng.standard_normal(4)
    p = QuadraticProblem(a, offset=offset)
    np.testing.assert_array_equal(p.known_minimizer, offset)
    np.testing.assert_array_equal(p.default_start, offset + 1.0)
    for _ in range(20):
        w = rng.standard_normal(4)
        r = w - offset
        assert p.loss(w) == pytest.approx(0.5 * r @ a @ r, rel=1e-14)
        np.testing.assert_allclose(p.grad(w), a @ r, rtol=1e-14)
        np.testing.assert_array_equal(p.hessian(w), p.matrix_a)


def test_quadratic_taylor_identity_is_exact():
    # For a quadratic the second-order expansion is the function itself, so
    # L(w - eta*g) - L(w) + eta*<G,g> - eta^2/2 <g,Hg> must vanish to rounding.
    rng = np.random.default_rng(101)
    for _ in range(100):
        d = int(rng.integers(2, 8))
        m = rng.standard_normal((d, d))
        a = m @ m.T + d * np.eye(d)
        p = QuadraticProblem(a, offset=rng.standard_normal(d))
        w = rng.standard_normal(d)
        g = rng.standard_normal(d)
        eta = float(rng.uniform(0.01, 1.0))
        lhs = p.loss(w - eta * g) - p.loss(w)
        rhs = -eta * np.dot(p.grad(w), g) + 0.5 * eta**2 * (g @ a @ g)
        scale = max(1.0, abs(p.loss(w)))
        assert abs(lhs - rhs) <= 1e-12 * scale


# ---------------------------------------------------------------------------
# Logistic regression


def _tiny_logreg(n=64, d=3, seed=2, l2=0.0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    y = (rng.random(n) < 0.5).astype(np.int64)
    return LogisticRegressionProblem(x, y, l2_penalty=l2)


def test_logreg_validation():
    x = np.zeros((4, 2))
    with pytest.raises(ValueError):
        LogisticRegressionProblem(x, np.array([0, 1, 2, 0]))
    with pytest.raises(ValueError):
        LogisticRegressionProblem(x, np.zeros(3))
    with pytest.raises(ValueError):
        LogisticRegressionProblem(x, np.zeros(4), l2_penalty=-0.1)


def test_logreg_loss_at_zero_is_log2():
    p = _tiny_logreg()
    assert p.loss(np.zeros(p.dim)) == pytest.approx(np.log(2.0), rel=1e-12)


def test_logreg_derivatives_match_fd():
    for l2 in (0.0, 0.05):
        p = _tiny_logreg(l2=l2)
        rng = np.random.default_rng(4)
        for _ in range(10):
            w = rng.standard_normal(p.dim)
            np.testing.assert_allclose(
                p.grad(w), fd_gradient(p, w), rtol=1e-6, atol=1e-8
            )
            np.testing.assert_allclose(
                p.hessian(w), fd_hessian(p, w), rtol=1e-5, atol=1e-7
            )
            l, g = p.loss_grad(w)
            assert l == pytest.approx(p.loss(w), rel=1e-15)
            np.testing.assert_allclose(g, p.grad(w), rtol=1e-15)


def test_logreg_convexity_property():
    p = _tiny_logreg(n=128, d=4)
    rng = np.random.default_rng(77)
    for _ in range(200):
        w1 = rng.standard_normal(4) * 2.0
        w2 = rng.standard_normal(4) * 2.0
        lam = float(rng.random())
        mid = p.loss(lam * w1 + (1.0 - lam) * w2)
        assert mid <= lam * p.loss(w1) + (1.0 - lam) * p.loss(w2) + 1e-12


def test_logreg_index_set_batches():
    p = _tiny_logreg(n=10, d=2)
    w = np.array([0.4, -0.2])
    idx = IndexSet((0, 3, 7))
    got = p.loss(w, idx)
    sub = LogisticRegressionProblem(p.features[[0, 3, 7]], p.labels[[0, 3, 7]])
    assert got == pytest.approx(sub.loss(w), rel=1e-12)
    with pytest.raises(ValueError):
        p.loss(w, IndexSet((10,)))


def test_logreg_synthetic_noise_batches():
    p = _tiny_logreg(n=32, d=2)
    w = np.array([0.1, 0.7])
    b = SyntheticNoise(seed=12, batch_size=8)
    # deterministic in the batch seed
    assert p.loss(w, b) == p.loss(w, SyntheticNoise(seed=12, batch_size=8))
    assert p.loss(w, b) != p.loss(w, SyntheticNoise(seed=13, batch_size=8))
    # drawing every sample reduces to the full-data loss
    full = SyntheticNoise(seed=99, batch_size=32)
    assert p.loss(w, full) == p.loss(w, FULL_DATA)
    with pytest.raises(ValueError):
        p.loss(w, SyntheticNoise(seed=0, batch_size=33))


def test_logreg_minibatch_helper():
    p = _tiny_logreg(n=16, d=2)
    w = np.array([0.2, -0.3])
    b = SyntheticNoise(seed=4, batch_size=4)
    l, g = logreg_minibatch(p, w, b)
    l2, g2 = p.loss_grad(w, b)
    assert l == l2
    np.testing.assert_array_equal(g, g2)


def test_quadratic_eval_helper():
    p = QuadraticProblem(np.diag([2.0, 8.0]))
    w = np.array([1.0, 1.0])
    l, g, h = quadratic_eval(p, w)
    assert l == 5.0
    np.testing.assert_array_equal(g, [2.0, 8.0])
    np.testing.assert_array_equal(h, np.diag([2.0, 8.0]))


# ---------------------------------------------------------------------------
# Synthetic dataset generation


def test_generate_dataset_shapes_and_determinism():
    a = generate_dataset(seed=5, n=200, d=4)
    b = generate_dataset(seed=5, n=200, d=4)
    assert a.features.shape == (200, 4)
    assert a.labels.shape == (200,)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    c = generate_dataset(seed=6, n=200, d=4)
    assert not np.array_equal(a.features, c.features)


def test_generate_dataset_labels_and_flips():
    ds = generate_dataset(seed=3, n=5000, d=6)
    assert set(np.unique(ds.labels)) <= {0, 1}
    # about 5% of labels are flipped off the separating hyperplane; with the
    # flip the empirical error rate should sit near that mark
    rng = np.random.default_rng(3)
    x = rng.standard_normal((5000, 6))
    w_true = rng.standard_normal(6)
    clean = (x @ w_true > 0).astype(np.int64)
    np.testing.assert_array_equal(x, ds.features)
    flip_rate = np.mean(clean != ds.labels)
    assert 0.03 < flip_rate < 0.07


def test_generate_dataset_validation():
    with pytest.raises(ValueError):
        generate_dataset(seed=0, n=1, d=2)
    with pytest.raises(ValueError):
        generate_dataset(seed=0, n=10, d=0)


def test_generate_dataset_l2_passthrough():
    ds = generate_dataset(seed=1, n=50, d=2, l2_penalty=0.5)
    w = np.ones(2)
    ds0 = generate_dataset(seed=1, n=50, d=2)
    assert ds.loss(w) == pytest.approx(ds0.loss(w) + 0.25 * 2.0, rel=1e-12)
