# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot training kernels.

Mirrors the signatures of ``pyref``; matrix products go through BLAS
dgemm, everything elementwise runs as tight C loops. All arrays must be
C-contiguous float64.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow, sqrt
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND_NAME = "cython"


cdef void _gemm(bint trans_a, bint trans_b,
                double[:, ::1] A, double[:, ::1] B, double[:, ::1] C) noexcept nogil:
    """C = opA(A) @ opB(B) for row-major buffers.

    Fortran dgemm works column-major; a row-major buffer read column-major
    is its transpose, so we compute C^T = opB(B)^T @ opA(A)^T by swapping
    the operands while keeping the transpose flags.
    """
    cdef char ta = 84 if trans_b else 78  # 'T' or 'N'
    cdef char tb = 84 if trans_a else 78
    cdef int m = C.shape[1]
    cdef int n = C.shape[0]
    cdef int k = A.shape[0] if trans_a else A.shape[1]
    cdef int lda = B.shape[1]
    cdef int ldb = A.shape[1]
    cdef int ldc = C.shape[1]
    cdef double alpha = 1.0
    cdef double beta = 0.0
    dgemm(&ta, &tb, &m, &n, &k, &alpha,
          &B[0, 0], &lda, &A[0, 0], &ldb, &beta, &C[0, 0], &ldc)


cdef void _add_bias_relu(double[:, ::1] Z, double[::1] b, bint apply_relu) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(Z.shape[0]):
        for j in range(Z.shape[1]):
            v = Z[i, j] + b[j]
            if apply_relu and v < 0.0:
                v = 0.0
            Z[i, j] = v


def forward(X, weights, biases):
    """Run the dense stack on a batch; returns the (n,) prediction vector."""
    cdef Py_ssize_t last = len(weights) - 1
    cdef Py_ssize_t i
    a = X
    for i in range(len(weights)):
        W = weights[i]
        z = np.empty((a.shape[0], W.shape[1]), dtype=np.float64)
        _gemm(False, False, a, W, z)
        _add_bias_relu(z, biases[i], i < last)
        a = z
    return np.ascontiguousarray(a[:, 0])


def mae_loss_grad(pred, target):
    """Mean absolute error and its gradient wrt the predictions."""
    cdef double[::1] p = pred
    cdef double[::1] y = target
    cdef Py_ssize_t n = p.shape[0]
    grad_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] g = grad_arr
    cdef double total = 0.0
    cdef double r, inv_n
    cdef Py_ssize_t i
    inv_n = 1.0 / n
    for i in range(n):
        r = p[i] - y[i]
        if r > 0.0:
            total += r
            g[i] = inv_n
        elif r < 0.0:
            total -= r
            g[i] = -inv_n
        else:
            g[i] = 0.0
    return total * inv_n, grad_arr


cdef void _colsum(double[:, ::1] A, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    for j in range(A.shape[1]):
        out[j] = 0.0
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            out[j] += A[i, j]


cdef void _relu_mask(double[:, ::1] delta, double[:, ::1] pre_act) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(delta.shape[0]):
        for j in range(delta.shape[1]):
            if pre_act[i, j] <= 0.0:
                delta[i, j] = 0.0


def forward_backward_mae(X, weights, biases, target):
    """Fused forward pass, MAE loss, and full backward pass.

    Returns (loss, weight_grads, bias_grads) with gradients ordered like
    the layer lists. The ReLU subgradient at exactly 0 is taken as 0.
    """
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t last = n_layers - 1
    cdef Py_ssize_t i

    pre_acts = []
    acts = [X]
    a = X
    for i in range(n_layers):
        W = weights[i]
        z = np.empty((a.shape[0], W.shape[1]), dtype=np.float64)
        _gemm(False, False, a, W, z)
        _add_bias_relu(z, biases[i], False)
        pre_acts.append(z)
        if i < last:
            a = np.maximum(z, 0.0)
        else:
            a = z
        acts.append(a)

    pred = np.ascontiguousarray(a[:, 0])
    loss, dpred = mae_loss_grad(pred, target)

    weight_grads = [None] * n_layers
    bias_grads = [None] * n_layers
    delta = dpred.reshape(-1, 1)
    for i in range(last, -1, -1):
        dW = np.empty_like(weights[i])
        _gemm(True, False, acts[i], delta, dW)
        db = np.empty(delta.shape[1], dtype=np.float64)
        _colsum(delta, db)
        weight_grads[i] = dW
        bias_grads[i] = db
        if i > 0:
            new_delta = np.empty((delta.shape[0], weights[i].shape[0]), dtype=np.float64)
            _gemm(False, True, delta, weights[i], new_delta)
            _relu_mask(new_delta, pre_acts[i - 1])
            delta = new_delta
    return loss, weight_grads, bias_grads


def adam_update(params, grads, first_moments, second_moments, t, lr, beta1, beta2, eps):
    """In-place Adam step with bias correction; ``t`` is the step just taken."""
    cdef double c1 = 1.0 - pow(beta1, t)
    cdef double c2 = 1.0 - pow(beta2, t)
    cdef double b1 = beta1
    cdef double b2 = beta2
    cdef double rate = lr
    cdef double epsilon = eps
    cdef double[::1] p, g, m, v
    cdef Py_ssize_t i, size
    for idx in range(len(params)):
        p = params[idx].ravel()
        g = grads[idx].ravel()
        m = first_moments[idx].ravel()
        v = second_moments[idx].ravel()
        size = p.shape[0]
        with nogil:
            for i in range(size):
                m[i] = b1 * m[i] + (1.0 - b1) * g[i]
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i]
                p[i] -= rate * (m[i] / c1) / (sqrt(v[i] / c2) + epsilon)
