# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled training kernels; drop-in twin of the pure-Python module.

Same packed-design conventions as ``matsym._kernels.pure``: features
[I1-3, I2-3, <I4-1>, <I5-1>], stress coefficients, measured stresses.
"""

from libc.math cimport exp, fabs, sqrt

import numpy as np

NAME = "compiled"

cdef int N_TERMS = 12
cdef int[12] TERM_COLUMN
cdef int[12] TERM_KIND
TERM_COLUMN[:] = [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 3, 3]
TERM_KIND[:] = [0, 1, 2, 3, 0, 1, 2, 3, 2, 3, 2, 3]


cdef inline void _term_row(const double* feat_row, const double* ws,
                           double* g, double* dg) noexcept nogil:
    """Per-term derivative g and d g / d w* at one sample."""
    cdef int j, kind
    cdef double x, e, a
    for j in range(N_TERMS):
        x = feat_row[TERM_COLUMN[j]]
        kind = TERM_KIND[j]
        if kind == 0:
            g[j] = ws[j]
            dg[j] = 1.0
        elif kind == 1:
            e = exp(ws[j] * x)
            g[j] = ws[j] * e
            dg[j] = e * (1.0 + ws[j] * x)
        elif kind == 2:
            g[j] = 2.0 * ws[j] * x
            dg[j] = 2.0 * x
        else:
            a = x * x
            e = exp(ws[j] * a)
            g[j] = 2.0 * ws[j] * x * e
            dg[j] = 2.0 * x * e * (1.0 + ws[j] * a)


cdef double _loss_grad_core(const double[:, ::1] feat, const double[:, ::1] coef,
                            const double[::1] y, const double[::1] mask,
                            const double[::1] w, const double[::1] ws,
                            double alpha, double* dw, double* dws,
                            bint want_grad) noexcept nogil:
    cdef int n = feat.shape[0]
    cdef int i, j
    cdef double g[12]
    cdef double dg[12]
    cdef double cg[12]
    cdef double p, r, loss, scale
    loss = 0.0
    if want_grad:
        for j in range(N_TERMS):
            dw[j] = 0.0
            dws[j] = 0.0
    for i in range(n):
        _term_row(&feat[i, 0], &ws[0], g, dg)
        p = 0.0
        for j in range(N_TERMS):
            cg[j] = coef[i, TERM_COLUMN[j]] * g[j]
            p += mask[j] * w[j] * cg[j]
        r = p - y[i]
        loss += r * r
        if want_grad:
            for j in range(N_TERMS):
                dw[j] += r * cg[j]
                dws[j] += r * coef[i, TERM_COLUMN[j]] * dg[j] * w[j]
    loss /= n
    scale = 2.0 / n
    for j in range(N_TERMS):
        loss += alpha * fabs(mask[j] * w[j])
        if want_grad:
            dw[j] = mask[j] * (scale * dw[j] + (alpha if mask[j] * w[j] > 0.0 else 0.0))
            dws[j] = mask[j] * scale * dws[j]
    return loss


def stress_batch(feat, coef, w, ws):
    """Model stresses (n,) for the packed design."""
    cdef double[:, ::1] feat_v = np.ascontiguousarray(feat, dtype=np.float64)
    cdef double[:, ::1] coef_v = np.ascontiguousarray(coef, dtype=np.float64)
    cdef double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] ws_v = np.ascontiguousarray(ws, dtype=np.float64)
    out = np.empty(feat_v.shape[0])
    cdef double[::1] out_v = out
    cdef int i, j
    cdef double g[12]
    cdef double dg[12]
    cdef double p
    with nogil:
        for i in range(feat_v.shape[0]):
            _term_row(&feat_v[i, 0], &ws_v[0], g, dg)
            p = 0.0
            for j in range(N_TERMS):
                p += w_v[j] * coef_v[i, TERM_COLUMN[j]] * g[j]
            out_v[i] = p
    return out


def loss_and_gradient(feat, coef, y, mask, w, ws, alpha):
    """Objective value and gradient; see the pure twin for the definition."""
    cdef double[:, ::1] feat_v = np.ascontiguousarray(feat, dtype=np.float64)
    cdef double[:, ::1] coef_v = np.ascontiguousarray(coef, dtype=np.float64)
    cdef double[::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] mask_v = np.ascontiguousarray(mask, dtype=np.float64)
    cdef double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] ws_v = np.ascontiguousarray(ws, dtype=np.float64)
    dw = np.zeros(N_TERMS)
    dws = np.zeros(N_TERMS)
    cdef double[::1] dw_v = dw
    cdef double[::1] dws_v = dws
    cdef double a = alpha
    cdef double loss
    with nogil:
        loss = _loss_grad_core(feat_v, coef_v, y_v, mask_v, w_v, ws_v,
                               a, &dw_v[0], &dws_v[0], 1)
    return loss, dw, dws


def train_adam(feat, coef, y, mask, w0, ws0, alpha, learning_rate, epochs,
               trace_stride, beta1=0.9, beta2=0.999, eps=1e-8):
    """Full-batch Adam with non-negative projection; see the pure twin."""
    cdef double[:, ::1] feat_v = np.ascontiguousarray(feat, dtype=np.float64)
    cdef double[:, ::1] coef_v = np.ascontiguousarray(coef, dtype=np.float64)
    cdef double[::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] mask_v = np.ascontiguousarray(mask, dtype=np.float64)

    w = np.ascontiguousarray(w0, dtype=np.float64).copy() * np.asarray(mask, dtype=np.float64)
    ws = np.ascontiguousarray(ws0, dtype=np.float64).copy() * np.asarray(mask, dtype=np.float64)
    cdef double[::1] w_v = w
    cdef double[::1] ws_v = ws

    cdef int n_epochs = int(epochs)
    cdef int stride = int(trace_stride)
    cdef double lr = learning_rate
    cdef double a = alpha
    cdef double b1 = beta1
    cdef double b2 = beta2
    cdef double epsilon = eps

    trace = np.empty(n_epochs // stride + 2)
    cdef double[::1] trace_v = trace
    cdef int n_trace = 0

    cdef double dw[12]
    cdef double dws[12]
    cdef double mw[12]
    cdef double vw[12]
    cdef double mws[12]
    cdef double vws[12]
    cdef int j, epoch
    cdef double b1t = 1.0
    cdef double b2t = 1.0
    cdef double loss, step, denom_scale
    cdef bint diverged = 0

    for j in range(N_TERMS):
        mw[j] = 0.0
        vw[j] = 0.0
        mws[j] = 0.0
        vws[j] = 0.0

    with nogil:
        for epoch in range(n_epochs):
            loss = _loss_grad_core(feat_v, coef_v, y_v, mask_v, w_v, ws_v,
                                   a, dw, dws, 1)
            if epoch % stride == 0:
                trace_v[n_trace] = loss
                n_trace += 1
            if loss != loss or loss > 1e300:
                diverged = 1
                break
            b1t *= b1
            b2t *= b2
            step = lr / (1.0 - b1t)
            denom_scale = sqrt(1.0 - b2t)
            for j in range(N_TERMS):
                mw[j] = b1 * mw[j] + (1.0 - b1) * dw[j]
                vw[j] = b2 * vw[j] + (1.0 - b2) * dw[j] * dw[j]
                mws[j] = b1 * mws[j] + (1.0 - b1) * dws[j]
                vws[j] = b2 * vws[j] + (1.0 - b2) * dws[j] * dws[j]
                w_v[j] = w_v[j] - step * mw[j] / (sqrt(vw[j]) / denom_scale + epsilon)
                ws_v[j] = ws_v[j] - step * mws[j] / (sqrt(vws[j]) / denom_scale + epsilon)
                if w_v[j] < 0.0:
                    w_v[j] = 0.0
                if ws_v[j] < 0.0:
                    ws_v[j] = 0.0
                w_v[j] *= mask_v[j]
                ws_v[j] *= mask_v[j]
        loss = _loss_grad_core(feat_v, coef_v, y_v, mask_v, w_v, ws_v,
                               a, dw, dws, 0)
        trace_v[n_trace] = loss
        n_trace += 1
    return w, ws, trace[:n_trace].copy()
