"""Pure-Python (numpy) training kernels; fallback for the compiled module.

All kernels operate on a packed design:

- ``feat`` (n, 4): term features [I1-3, I2-3, <I4-1>, <I5-1>] per sample,
- ``coef`` (n, 4): stress coefficients multiplying the energy gradient,
- ``y``    (n,):   measured stresses, kPa.

The twelve terms map onto the feature columns through TERM_COLUMN /
TERM_KIND; ``g`` below is the per-unit-outer-weight derivative of a term
with respect to its invariant, so the model stress at sample i is
``sum_j w_j * coef[i, col_j] * g_j(feat[i, col_j])``.
"""

import numpy as np

NAME = "python"

TERM_COLUMN = np.array([0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 3, 3])
TERM_KIND = np.array([0, 1, 2, 3, 0, 1, 2, 3, 2, 3, 2, 3])

_LIN_ID = TERM_KIND == 0
_LIN_EXP = TERM_KIND == 1
_QUAD_ID = TERM_KIND == 2
_QUAD_EXP = TERM_KIND == 3


def _term_tables(feat, ws):
    """Per-sample term derivatives g (n, 12) and d g / d w* (n, 12)."""
    x = feat[:, TERM_COLUMN]
    g = np.empty_like(x)
    dg = np.empty_like(x)

    m = _LIN_ID
    g[:, m] = ws[m]
    dg[:, m] = 1.0

    m = _LIN_EXP
    e = np.exp(ws[m] * x[:, m])
    g[:, m] = ws[m] * e
    dg[:, m] = e * (1.0 + ws[m] * x[:, m])

    m = _QUAD_ID
    g[:, m] = 2.0 * ws[m] * x[:, m]
    dg[:, m] = 2.0 * x[:, m]

    m = _QUAD_EXP
    x2 = x[:, m] * x[:, m]
    e = np.exp(ws[m] * x2)
    g[:, m] = 2.0 * ws[m] * x[:, m] * e
    dg[:, m] = 2.0 * x[:, m] * e * (1.0 + ws[m] * x2)
    return g, dg


def stress_batch(feat, coef, w, ws):
    """Model stresses (n,) for the packed design."""
    feat = np.asarray(feat, dtype=float)
    coef = np.asarray(coef, dtype=float)
    g, _ = _term_tables(feat, np.asarray(ws, dtype=float))
    return (coef[:, TERM_COLUMN] * g) @ np.asarray(w, dtype=float)


def loss_and_gradient(feat, coef, y, mask, w, ws, alpha):
    """Objective value and its gradient with respect to (w, w*).

    loss = mean squared stress error + alpha * sum|w| over unmasked
    terms; the L1 subgradient at w = 0 is taken as 0.
    """
    feat = np.asarray(feat, dtype=float)
    coef = np.asarray(coef, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = np.asarray(mask, dtype=float)
    w = np.asarray(w, dtype=float) * mask
    ws = np.asarray(ws, dtype=float)

    g, dg = _term_tables(feat, ws)
    cg = coef[:, TERM_COLUMN] * g
    r = cg @ w - y
    n = y.size
    loss = float(r @ r) / n + alpha * float(np.abs(w).sum())

    scale = 2.0 / n
    dw = scale * (r @ cg) + alpha * np.sign(w)
    dws = scale * w * (r @ (coef[:, TERM_COLUMN] * dg))
    return loss, dw * mask, dws * mask


def train_adam(
    feat,
    coef,
    y,
    mask,
    w0,
    ws0,
    alpha,
    learning_rate,
    epochs,
    trace_stride,
    beta1=0.9,
    beta2=0.999,
    eps=1e-8,
):
    """Full-batch Adam with projection onto the non-negative orthant.

    Deterministic: fixed evaluation order, no randomness.  Returns the
    final weights and the loss trace (pre-update loss every
    ``trace_stride`` epochs plus the final post-training loss).  Stops
    early if the loss turns non-finite.
    """
    mask = np.asarray(mask, dtype=float)
    w = np.asarray(w0, dtype=float).copy() * mask
    ws = np.asarray(ws0, dtype=float).copy() * mask

    mw = np.zeros_like(w)
    vw = np.zeros_like(w)
    mws = np.zeros_like(ws)
    vws = np.zeros_like(ws)
    b1t = 1.0
    b2t = 1.0
    trace = []

    for epoch in range(int(epochs)):
        loss, dw, dws = loss_and_gradient(feat, coef, y, mask, w, ws, alpha)
        if epoch % trace_stride == 0:
            trace.append(loss)
        if not np.isfinite(loss):
            break
        b1t *= beta1
        b2t *= beta2
        mw = beta1 * mw + (1.0 - beta1) * dw
        vw = beta2 * vw + (1.0 - beta2) * dw * dw
        mws = beta1 * mws + (1.0 - beta1) * dws
        vws = beta2 * vws + (1.0 - beta2) * dws * dws
        step = learning_rate / (1.0 - b1t)
        denom_scale = np.sqrt(1.0 - b2t)
        w = w - step * mw / (np.sqrt(vw) / denom_scale + eps)
        ws = ws - step * mws / (np.sqrt(vws) / denom_scale + eps)
        np.maximum(w, 0.0, out=w)
        np.maximum(ws, 0.0, out=ws)
        w *= mask
        ws *= mask

    final_loss, _, _ = loss_and_gradient(feat, coef, y, mask, w, ws, alpha)
    trace.append(final_loss)
    return w, ws, np.array(trace)
