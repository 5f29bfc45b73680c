"""Pure-numpy reference implementation of the hot training kernels.

The compiled extension in ``_fast`` implements the same signatures; the
package selects one at import time. Every function assumes C-contiguous
float64 arrays, a stack of dense layers with ReLU on all but the last,
and a single linear output unit.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def forward(X, weights, biases):
    """Run the dense stack on a batch; returns the (n,) prediction vector."""
    a = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        a = z if i == last else np.maximum(z, 0.0)
    return np.ascontiguousarray(a[:, 0])


def mae_loss_grad(pred, target):
    """Mean absolute error and its gradient wrt the predictions."""
    n = pred.shape[0]
    resid = pred - target
    loss = float(np.abs(resid).mean())
    grad = np.sign(resid) / n
    return loss, grad


def forward_backward_mae(X, weights, biases, target):
    """Fused forward pass, MAE loss, and full backward pass.

    Returns (loss, weight_grads, bias_grads) with gradients ordered like
    the layer lists. The ReLU subgradient at exactly 0 is taken as 0.
    """
    last = len(weights) - 1
    pre_acts = []
    acts = [X]
    a = X
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        pre_acts.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)

    pred = a[:, 0]
    loss, dpred = mae_loss_grad(pred, target)

    weight_grads = [None] * len(weights)
    bias_grads = [None] * len(weights)
    delta = dpred[:, None]
    for i in range(last, -1, -1):
        weight_grads[i] = acts[i].T @ delta
        bias_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (pre_acts[i - 1] > 0.0)
    return loss, weight_grads, bias_grads


def adam_update(params, grads, first_moments, second_moments, t, lr, beta1, beta2, eps):
    """In-place Adam step with bias correction; ``t`` is the step just taken."""
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, first_moments, second_moments):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
