"""Full-precision training: BPTT gradients, Adam, step learning-rate decay.

Training is deliberately bit-reproducible: batch size 1, fixed chronological
sample order, no shuffling, seeded init.  Internally the four gate tensors
are stacked into one (4*n_h, n_h+n_i) matrix so each step costs a single
matvec; the public surface still speaks LstmParams.
"""

from dataclasses import dataclass

import numpy as np

from .model import LstmParams, sigmoid


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 1
    lr: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.98
    adam_eps: float = 1e-9
    sched_step: int = 3
    sched_gamma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size != 1:
            raise ValueError("only batch_size=1 training is supported")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if not 0.0 < self.sched_gamma <= 1.0:
            raise ValueError("sched_gamma must be in (0, 1]")
        if self.sched_step < 1:
            raise ValueError("sched_step must be >= 1")


def lr_at_epoch(tc, epoch):
    """Effective learning rate in (0-based) epoch: lr * gamma^floor(e/step)."""
    return tc.lr * tc.sched_gamma ** (epoch // tc.sched_step)


def loss_mse(pred, target):
    pred = np.atleast_1d(np.asarray(pred, dtype=np.float64))
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("loss of empty vectors is undefined")
    return float(np.mean((pred - target) ** 2))


# ---------------------------------------------------------------------------
# Stacked parameter representation used by the optimizer
# ---------------------------------------------------------------------------

def _stack(params):
    w, b = params.gate_weights()
    n_h = params.hidden_size
    return [
        w.reshape(4 * n_h, -1).copy(),
        b.reshape(4 * n_h).copy(),
        params.dense_w.copy(),
        params.dense_b.copy(),
    ]


def _unstack(tensors, n_h):
    ws, bs, dense_w, dense_b = tensors
    w = ws.reshape(4, n_h, -1)
    b = bs.reshape(4, n_h)
    return LstmParams(
        w_f=w[0], w_i=w[1], w_g=w[2], w_o=w[3],
        b_f=b[0], b_i=b[1], b_g=b[2], b_o=b[3],
        dense_w=dense_w, dense_b=dense_b,
    )


def _forward_cached(ws, bs, dense_w, dense_b, n_h, window):
    """Forward pass over one window, keeping what backward needs."""
    h = np.zeros(n_h)
    c = np.zeros(n_h)
    steps = []
    for x_t in window:
        z = np.concatenate([h, x_t])
        pre = ws @ z + bs
        f = sigmoid(pre[:n_h])
        i = sigmoid(pre[n_h : 2 * n_h])
        g = np.tanh(pre[2 * n_h : 3 * n_h])
        o = sigmoid(pre[3 * n_h :])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        steps.append((z, f, i, g, o, c, tanh_c))
        h, c = h_new, c_new
    pred = dense_w @ h + dense_b
    return pred, h, steps


def _backward(ws, dense_w, n_h, steps, h_last, dpred):
    d_ws = np.zeros_like(ws)
    d_bs = np.zeros(4 * n_h)
    d_dense_w = np.outer(dpred, h_last)
    d_dense_b = dpred.copy()

    dh = dense_w.T @ dpred
    dc = np.zeros(n_h)
    for z, f, i, g, o, c_prev, tanh_c in reversed(steps):
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c**2)
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        dpre = np.concatenate([
            df * f * (1.0 - f),
            di * i * (1.0 - i),
            dg * (1.0 - g**2),
            do * o * (1.0 - o),
        ])
        d_ws += np.outer(dpre, z)
        d_bs += dpre
        dz = ws.T @ dpre
        dh = dz[:n_h]
        dc = dc * f
    return [d_ws, d_bs, d_dense_w, d_dense_b]


def _as_window(window, input_size):
    window = np.asarray(window, dtype=np.float64)
    if window.ndim == 1:
        window = window.reshape(-1, 1)
    if window.shape[1] != input_size:
        raise ValueError(f"window width {window.shape[1]} != input_size {input_size}")
    return window


def grad_bptt(params, config, window, target):
    """Exact analytic gradient of the MSE loss, shaped like LstmParams."""
    window = _as_window(window, config.input_size)
    if window.shape[0] != config.seq_len:
        raise ValueError(f"window length {window.shape[0]} != seq_len {config.seq_len}")
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    ws, bs, dense_w, dense_b = _stack(params)
    n_h = config.hidden_size
    pred, h_last, steps = _forward_cached(ws, bs, dense_w, dense_b, n_h, window)
    dpred = 2.0 * (pred - target) / config.out_features
    grads = _backward(ws, dense_w, n_h, steps, h_last, dpred)
    return _unstack(grads, n_h)


def train(params0, config, tc, dataset):
    """Adam training loop; returns (trained params, per-epoch mean loss)."""
    if len(dataset) == 0:
        raise ValueError("training dataset is empty")
    n_h = config.hidden_size
    tensors = _stack(params0)
    m = [np.zeros_like(t) for t in tensors]
    v = [np.zeros_like(t) for t in tensors]
    step = 0
    losses = []
    for epoch in range(tc.epochs):
        lr = lr_at_epoch(tc, epoch)
        epoch_losses = []
        for window, target in zip(dataset.windows, dataset.targets):
            window = _as_window(window, config.input_size)
            target = np.atleast_1d(np.asarray(target, dtype=np.float64))
            # overflow here is what the divergence guard exists to catch
            with np.errstate(over="ignore", invalid="ignore"):
                pred, h_last, steps = _forward_cached(*tensors[:4], n_h, window)
                loss = float(np.mean((pred - target) ** 2))
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss in epoch {epoch}")
            epoch_losses.append(loss)

            dpred = 2.0 * (pred - target) / config.out_features
            grads = _backward(tensors[0], tensors[2], n_h, steps, h_last, dpred)

            step += 1
            bc1 = 1.0 - tc.adam_beta1**step
            bc2 = 1.0 - tc.adam_beta2**step
            for k, grad in enumerate(grads):
                m[k] = tc.adam_beta1 * m[k] + (1.0 - tc.adam_beta1) * grad
                v[k] = tc.adam_beta2 * v[k] + (1.0 - tc.adam_beta2) * grad**2
                tensors[k] -= lr * (m[k] / bc1) / (np.sqrt(v[k] / bc2) + tc.adam_eps)
        losses.append(float(np.mean(epoch_losses)))
    return _unstack(tensors, n_h), losses


def evaluate_mse(params, config, dataset, forward_fn=None):
    """Mean MSE of the float model over a windowed dataset."""
    from .model import forward as model_forward

    fn = forward_fn or model_forward
    errors = []
    for window, target in zip(dataset.windows, dataset.targets):
        pred = fn(params, config, _as_window(window, config.input_size))
        t = np.atleast_1d(np.asarray(target, dtype=np.float64))
        if t.shape != np.shape(pred):
            t = np.full(np.shape(pred), t.item())
        errors.append(loss_mse(pred, t))
    return float(np.mean(errors))
