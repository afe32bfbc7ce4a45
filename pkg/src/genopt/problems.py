"""Benchmark objectives with analytic gradients and Hessians.

Two fixed 2-D test functions (a banana-shaped valley and a three-term
least-squares surface), a general SPD quadratic family on which the local
quadratic model is exact, and a seeded logistic-regression problem for
mini-batch studies.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from . import kernels
from .core import (
    Array,
    BatchSelector,
    FULL_DATA,
    FullData,
    IndexSet,
    Objective,
    SyntheticNoise,
    as_param_vector,
)


class RosenbrockProblem(Objective):
    """f(x1, x2) = 100*(x2 - x1^2)^2 + (1 - x1)^2, minimum at (1, 1)."""

    dim = 2
    has_exact_hessian = True
    has_hvp = True

    def __init__(self):
        self.known_minimizer = np.array([1.0, 1.0])
        self.default_start = np.array([-1.5, 2.0])

    def loss(self, w: Array, batch: BatchSelector = FULL_DATA) -> float:
        x1, x2 = _unpack2(w)
        return float(kernels.rosenbrock_loss(x1, x2))

    def grad(self, w: Array, batch: BatchSelector = FULL_DATA) -> Array:
        x1, x2 = _unpack2(w)
        g1, g2 = kernels.rosenbrock_grad(x1, x2)
        return np.array([g1, g2])

    def hessian(self, w: Array, batch: BatchSelector = FULL_DATA) -> Array:
        x1, x2 = _unpack2(w)
        h11, h12, h22 = kernels.rosenbrock_hess(x1, x2)
        return np.array([[h11, h12], [h12, h22]])


class BealeProblem(Objective):
    """Sum of three squared residuals (1.5 - x1 + x1*x2^k terms), minimum (3, 0.5)."""

    dim = 2
    has_exact_hessian = True
    has_hvp = True

    def __init__(self):
        self.known_minimizer = np.array([3.0, 0.5])
        self.default_start = np.array([-2.0, -2.0])

    def loss(self, w: Array, batch: BatchSelector = FULL_DATA) -> float:
        x1, x2 = _unpack2(w)
        return float(kernels.beale_loss(x1, x2))

    def grad(self, w: Array, batch: BatchSelector = FULL_DATA) -> Array:
        x1, x2 = _unpack2(w)
        g1, g2 = kernels.beale_grad(x1, x2)
        return np.array([g1, g2])

    def hessian(self, w: Array, batch: BatchSelector = FULL_DATA) -> Array:
        x1, x2 = _unpack2(w)
        h11, h12, h22 = kernels.beale_hess(x1, x2)
        return np.array([[h11, h12], [h12, h22]])


class QuadraticProblem(Objective):
    """loss = 0.5 * (w - offset)^T A (w - offset) with symmetric positive-definite A."""

    has_exact_hessian = True
    has_hvp = True

    def __init__(self, matrix_a, offset=None):
        a = np.array(matrix_a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix_a must be square")
        scale = float(np.max(np.abs(a))) or 1.0
        if float(np.max(np.abs(a - a.T))) > 1e-12 * scale:
            raise ValueError("matrix_a must be symmetric")
        a = 0.5 * (a + a.T)  # make symmetry exact to the bit
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise ValueError("matrix_a must be positive definite") from None
        self.dim = a.shape[0]
        self.matrix_a = a
        if offset is None:
            offset = np.zeros(self.dim)
        self.offset = as_param_vector(offset, dim=self.dim)
        self.known_minimizer = self.offset.copy()
        self.default_start = self.offset + 1.0

    def loss(self, w: Array, batch: BatchSelector = FULL_DATA) -> float:
        r = as_param_vector(w, dim=self.dim) - self.offset
        return 0.5 * float(r @ (self.matrix_a @ r))

    def grad(self, w: Array, batch: BatchSelector = FULL_DATA) -> Array:
        r = as_param_vector(w, dim=self.dim) - self.offset
        return self.matrix_a @ r

    def hessian(self, w: Array, batch: BatchSelector = FULL_DATA) -> Array:
        return self.matrix_a.copy()


class LogisticRegressionProblem(Objective):
    """Mean binary cross-entropy plus 0.5 * l2_penalty * ||w||^2.

    Labels are 0/1. Mini-batches select rows of the feature matrix; see
    ``SyntheticNoise`` for the seeded sampling contract.
    """

    has_exact_hessian = True
    has_hvp = True

    def __init__(self, features, labels, l2_penalty: float = 0.0,
                 generator_seed: int = 0):
        x = np.array(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("features must be a non-empty 2-D matrix")
        y = np.asarray(labels)
        if y.shape != (x.shape[0],):
            raise ValueError("labels must match the number of feature rows")
        uniq = set(np.unique(y).tolist())
        if not uniq <= {0, 1, False, True}:
            raise ValueError("labels must be binary (0/1)")
        if l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")
        self.features = x
        self.labels = y.astype(np.int64)
        self.l2_penalty = float(l2_penalty)
        self.generator_seed = int(generator_seed)
        self.n_samples = x.shape[0]
        self.dim = x.shape[1]
        self.default_start = np.zeros(self.dim)
        self._y64 = self.labels.astype(np.float64)

    def _resolve(self, batch: BatchSelector) -> Tuple[Array, Array]:
        if isinstance(batch, FullData):
            return self.features, self._y64
        if isinstance(batch, IndexSet):
            idx = np.asarray(batch.indices, dtype=np.int64)
            if idx.size == 0:
                raise ValueError("empty batch")
            if int(idx.max()) >= self.n_samples:
                raise ValueError("IndexSet index out of dataset bounds")
            return self.features[idx], self._y64[idx]
        if isinstance(batch, SyntheticNoise):
            if batch.batch_size > self.n_samples:
                raise ValueError(
                    f"batch_size {batch.batch_size} exceeds dataset size "
                    f"{self.n_samples}"
                )
            rng = np.random.default_rng(batch.seed)
            idx = rng.choice(self.n_samples, size=batch.batch_size,
                             replace=False, shuffle=False)
            idx.sort()
            return self.features[idx], self._y64[idx]
        raise TypeError(f"unsupported batch selector: {batch!r}")

    def loss(self, w: Array, batch: BatchSelector = FULL_DATA) -> float:
        x, y = self._resolve(batch)
        w = as_param_vector(w, dim=self.dim)
        return float(kernels.logreg_loss(x, y, w, self.l2_penalty))

    def grad(self, w: Array, batch: BatchSelector = FULL_DATA) -> Array:
        x, y = self._resolve(batch)
        w = as_param_vector(w, dim=self.dim)
        _, g = kernels.logreg_loss_grad(x, y, w, self.l2_penalty)
        return np.asarray(g)

    def loss_grad(self, w: Array, batch: BatchSelector = FULL_DATA):
        x, y = self._resolve(batch)
        w = as_param_vector(w, dim=self.dim)
        loss, g = kernels.logreg_loss_grad(x, y, w, self.l2_penalty)
        return float(loss), np.asarray(g)

    def hessian(self, w: Array, batch: BatchSelector = FULL_DATA) -> Array:
        x, _ = self._resolve(batch)
        w = as_param_vector(w, dim=self.dim)
        z = x @ w
        p = 0.5 * (1.0 + np.tanh(0.5 * z))  # overflow-free sigmoid
        d = p * (1.0 - p)
        h = (x * d[:, None]).T @ x / x.shape[0]
        h += self.l2_penalty * np.eye(self.dim)
        return h


def _unpack2(w) -> Tuple[float, float]:
    arr = np.asarray(w, dtype=np.float64)
    if arr.shape != (2,):
        raise ValueError(f"expected a 2-D parameter vector, got shape {arr.shape}")
    return float(arr[0]), float(arr[1])


# ---------------------------------------------------------------------------
# functional entry points

def rosenbrock_eval(w) -> Tuple[float, Array, Array]:
    """Loss, gradient, and Hessian of the valley function at w."""
    p = _ROSENBROCK
    return p.loss(w), p.grad(w), p.hessian(w)


def beale_eval(w) -> Tuple[float, Array, Array]:
    p = _BEALE
    return p.loss(w), p.grad(w), p.hessian(w)


def quadratic_eval(p: QuadraticProblem, w) -> Tuple[float, Array, Array]:
    return p.loss(w), p.grad(w), p.hessian(w)


def logreg_minibatch(p: LogisticRegressionProblem, w,
                     batch: BatchSelector = FULL_DATA) -> Tuple[float, Array]:
    """Mini-batch loss and gradient in one evaluation."""
    return p.loss_grad(w, batch)


def generate_dataset(seed: int, n: int, d: int,
                     l2_penalty: float = 0.0) -> LogisticRegressionProblem:
    """Seeded synthetic dataset: standard-normal features, a planted linear
    separator drawn from the same seed, and labels flipped with probability
    0.05. The same seed reproduces the dataset bit for bit.
    """
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 samples and d >= 1 features")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    w_true = rng.standard_normal(d)
    y = (x @ w_true > 0).astype(np.int64)
    flip = rng.random(n) < 0.05
    y = np.where(flip, 1 - y, y)
    return LogisticRegressionProblem(x, y, l2_penalty=l2_penalty,
                                     generator_seed=seed)


_ROSENBROCK = RosenbrockProblem()
_BEALE = BealeProblem()
