"""Backend parity: the compiled kernels must agree with the numpy
reference on every operation, and the import-time selection must honor
the environment override."""

import os
import subprocess
import sys

import numpy as np
import pytest

from kospred import _kernels
from kospred._kernels import pyref

fast = pytest.importorskip("kospred._kernels._fast")


def random_stack(rng, widths):
    dims = [4, *widths, 1]
    weights = [
        np.ascontiguousarray(rng.normal(size=(dims[i], dims[i + 1])))
        for i in range(len(dims) - 1)
    ]
    biases = [np.ascontiguousarray(rng.normal(size=dims[i + 1])) for i in range(len(dims) - 1)]
    return weights, biases


@pytest.mark.parametrize("widths", [(), (8,), (16, 8), (8, 16, 8)])
def test_forward_parity(widths):
    rng = np.random.default_rng(1)
    weights, biases = random_stack(rng, widths)
    X = np.ascontiguousarray(rng.normal(size=(9, 4)))
    a = fast.forward(X, weights, biases)
    b = pyref.forward(X, weights, biases)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("widths", [(), (8,), (16, 8)])
def test_forward_backward_parity(widths):
    rng = np.random.default_rng(2)
    weights, biases = random_stack(rng, widths)
    X = np.ascontiguousarray(rng.normal(size=(7, 4)))
    y = rng.normal(size=7)
    loss_a, wg_a, bg_a = fast.forward_backward_mae(X, weights, biases, y)
    loss_b, wg_b, bg_b = pyref.forward_backward_mae(X, weights, biases, y)
    assert loss_a == pytest.approx(loss_b, rel=1e-12)
    for a, b in zip(wg_a + bg_a, wg_b + bg_b):
        assert a == pytest.approx(b, rel=1e-9, abs=1e-15)


def test_mae_sign_convention_matches():
    pred = np.array([1.0, 2.0, 3.0])
    target = np.array([1.0, 1.0, 4.0])  # residuals 0, +1, -1
    loss_a, grad_a = fast.mae_loss_grad(pred, target)
    loss_b, grad_b = pyref.mae_loss_grad(pred, target)
    assert loss_a == loss_b
    assert np.array_equal(grad_a, grad_b)
    assert grad_a[0] == 0.0  # sign(0) = 0


def test_adam_parity_over_steps():
    rng = np.random.default_rng(3)
    shapes = [(4, 8), (8,), (8, 1), (1,)]
    pa = [np.ascontiguousarray(rng.normal(size=s)) for s in shapes]
    pb = [p.copy() for p in pa]
    ma, va = [np.zeros(s) for s in shapes], [np.zeros(s) for s in shapes]
    mb, vb = [np.zeros(s) for s in shapes], [np.zeros(s) for s in shapes]
    for t in range(1, 6):
        grads = [np.ascontiguousarray(rng.normal(size=s)) for s in shapes]
        fast.adam_update(pa, grads, ma, va, t, 1e-3, 0.9, 0.999, 1e-7)
        pyref.adam_update(pb, grads, mb, vb, t, 1e-3, 0.9, 0.999, 1e-7)
    for a, b in zip(pa, pb):
        assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


def test_backend_env_override():
    code = "import kospred; print(kospred.KERNEL_BACKEND)"
    env = dict(os.environ, KOSPRED_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"
    env = dict(os.environ, KOSPRED_BACKEND="auto")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() in ("cython", "python")


def test_active_backend_is_exposed():
    assert _kernels.BACKEND in ("cython", "python")
