"""Hot evaluation kernels, numba-jitted by default.

Set ``GENOPT_JIT=0`` (or ``false``/``off``/``no``) before import to force the
plain python/numpy implementations. Both variants stay importable under
stable names (``*_py`` and, when numba is present, ``*_jit``) so tests and
``benchmarks/bench_kernels.py`` can compare the two paths in one process.
Each path is individually deterministic; they may differ from each other by
a few ulp because summation order differs.
"""

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def jit_requested(env: str | None = None) -> bool:
    """Parse the GENOPT_JIT env flag (default: enabled)."""
    raw = os.environ.get("GENOPT_JIT", "1") if env is None else env
    return raw.strip().lower() not in ("0", "false", "off", "no")


JIT_ENABLED = HAS_NUMBA and jit_requested()


# ---------------------------------------------------------------------------
# scalar 2-D kernels: plain python floats, identical source for both paths

def _rosenbrock_loss(x1: float, x2: float) -> float:
    r = x2 - x1 * x1
    return 100.0 * r * r + (1.0 - x1) * (1.0 - x1)


def _rosenbrock_grad(x1: float, x2: float):
    r = x2 - x1 * x1
    return -400.0 * x1 * r - 2.0 * (1.0 - x1), 200.0 * r


def _rosenbrock_hess(x1: float, x2: float):
    # returns (h11, h12, h22); h21 == h12 by symmetry
    return 1200.0 * x1 * x1 - 400.0 * x2 + 2.0, -400.0 * x1, 200.0


def _beale_loss(x1: float, x2: float) -> float:
    r1 = 1.5 - x1 + x1 * x2
    r2 = 2.25 - x1 + x1 * x2 * x2
    r3 = 2.625 - x1 + x1 * x2 * x2 * x2
    return r1 * r1 + r2 * r2 + r3 * r3


def _beale_grad(x1: float, x2: float):
    y = x2
    r1 = 1.5 - x1 + x1 * y
    r2 = 2.25 - x1 + x1 * y * y
    r3 = 2.625 - x1 + x1 * y * y * y
    g1 = 2.0 * (r1 * (y - 1.0) + r2 * (y * y - 1.0) + r3 * (y * y * y - 1.0))
    g2 = 2.0 * (r1 * x1 + r2 * 2.0 * x1 * y + r3 * 3.0 * x1 * y * y)
    return g1, g2


def _beale_hess(x1: float, x2: float):
    y = x2
    r1 = 1.5 - x1 + x1 * y
    r2 = 2.25 - x1 + x1 * y * y
    r3 = 2.625 - x1 + x1 * y * y * y
    a1 = y - 1.0
    a2 = y * y - 1.0
    a3 = y * y * y - 1.0
    b1 = x1
    b2 = 2.0 * x1 * y
    b3 = 3.0 * x1 * y * y
    h11 = 2.0 * (a1 * a1 + a2 * a2 + a3 * a3)
    # cross second derivatives of the residuals: 1, 2y, 3y^2
    h12 = 2.0 * (a1 * b1 + a2 * b2 + a3 * b3 + r1 + r2 * 2.0 * y + r3 * 3.0 * y * y)
    # d2/dy2 of the residuals: 0, 2*x1, 6*x1*y
    h22 = 2.0 * (b1 * b1 + b2 * b2 + b3 * b3 + r2 * 2.0 * x1 + r3 * 6.0 * x1 * y)
    return h11, h12, h22


# ---------------------------------------------------------------------------
# logistic regression: fused-loop kernel for numba, vectorized numpy fallback

def _logreg_loss_loop(x, y, w, l2):
    n, d = x.shape
    total = 0.0
    for i in range(n):
        z = 0.0
        for j in range(d):
            z += x[i, j] * w[j]
        if z > 0.0:
            total += z - y[i] * z + math.log1p(math.exp(-z))
        else:
            total += math.log1p(math.exp(z)) - y[i] * z
    reg = 0.0
    for j in range(d):
        reg += w[j] * w[j]
    return total / n + 0.5 * l2 * reg


def _logreg_loss_grad_loop(x, y, w, l2):
    n, d = x.shape
    total = 0.0
    g = np.zeros(d)
    for i in range(n):
        z = 0.0
        for j in range(d):
            z += x[i, j] * w[j]
        if z > 0.0:
            total += z - y[i] * z + math.log1p(math.exp(-z))
            p = 1.0 / (1.0 + math.exp(-z))
        else:
            total += math.log1p(math.exp(z)) - y[i] * z
            ez = math.exp(z)
            p = ez / (1.0 + ez)
        c = p - y[i]
        for j in range(d):
            g[j] += c * x[i, j]
    reg = 0.0
    inv = 1.0 / n
    for j in range(d):
        g[j] = g[j] * inv + l2 * w[j]
        reg += w[j] * w[j]
    return total / n + 0.5 * l2 * reg, g


def _sigmoid_np(z):
    # two-branch form stays overflow-free for any z
    p = np.empty_like(z)
    pos = z > 0.0
    p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    p[~pos] = ez / (1.0 + ez)
    return p


def _logreg_loss_np(x, y, w, l2):
    z = x @ w
    ce = np.logaddexp(0.0, z) - y * z
    return float(np.mean(ce)) + 0.5 * l2 * float(w @ w)


def _logreg_loss_grad_np(x, y, w, l2):
    z = x @ w
    ce = np.logaddexp(0.0, z) - y * z
    g = x.T @ (_sigmoid_np(z) - y) / x.shape[0] + l2 * w
    return float(np.mean(ce)) + 0.5 * l2 * float(w @ w), g


# ---------------------------------------------------------------------------
# path selection

rosenbrock_loss_py = _rosenbrock_loss
rosenbrock_grad_py = _rosenbrock_grad
rosenbrock_hess_py = _rosenbrock_hess
beale_loss_py = _beale_loss
beale_grad_py = _beale_grad
beale_hess_py = _beale_hess
logreg_loss_py = _logreg_loss_np
logreg_loss_grad_py = _logreg_loss_grad_np

if HAS_NUMBA:
    rosenbrock_loss_jit = njit(cache=True)(_rosenbrock_loss)
    rosenbrock_grad_jit = njit(cache=True)(_rosenbrock_grad)
    rosenbrock_hess_jit = njit(cache=True)(_rosenbrock_hess)
    beale_loss_jit = njit(cache=True)(_beale_loss)
    beale_grad_jit = njit(cache=True)(_beale_grad)
    beale_hess_jit = njit(cache=True)(_beale_hess)
    logreg_loss_jit = njit(cache=True)(_logreg_loss_loop)
    logreg_loss_grad_jit = njit(cache=True)(_logreg_loss_grad_loop)

if JIT_ENABLED:
    rosenbrock_loss = rosenbrock_loss_jit
    rosenbrock_grad = rosenbrock_grad_jit
    rosenbrock_hess = rosenbrock_hess_jit
    beale_loss = beale_loss_jit
    beale_grad = beale_grad_jit
    beale_hess = beale_hess_jit
    logreg_loss = logreg_loss_jit
    logreg_loss_grad = logreg_loss_grad_jit
else:
    rosenbrock_loss = rosenbrock_loss_py
    rosenbrock_grad = rosenbrock_grad_py
    rosenbrock_hess = rosenbrock_hess_py
    beale_loss = beale_loss_py
    beale_grad = beale_grad_py
    beale_hess = beale_hess_py
    logreg_loss = logreg_loss_py
    logreg_loss_grad = logreg_loss_grad_py


def warmup() -> None:
    """Trigger JIT compilation of every kernel (no-op on the python path)."""
    rosenbrock_loss(0.1, 0.2)
    rosenbrock_grad(0.1, 0.2)
    rosenbrock_hess(0.1, 0.2)
    beale_loss(0.1, 0.2)
    beale_grad(0.1, 0.2)
    beale_hess(0.1, 0.2)
    x = np.ones((2, 2))
    y = np.array([0.0, 1.0])
    w = np.array([0.1, -0.1])
    logreg_loss(x, y, w, 0.0)
    logreg_loss_grad(x, y, w, 0.0)
