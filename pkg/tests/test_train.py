"""Training pipeline: gradients vs finite differences, Adam, scheduler."""

import numpy as np
import pytest

from qlstm.data import make_dataset, synth_series
from qlstm.model import ModelConfig, forward, init_params
from qlstm.train import (
    TrainConfig,
    TrainingDiverged,
    grad_bptt,
    loss_mse,
    lr_at_epoch,
    train,
)


def test_loss_mse_examples():
    assert loss_mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert loss_mse([2.0, 3.0], [1.0, 2.0]) == 1.0
    assert loss_mse([0.0, 2.0], [1.0, 1.0]) == 1.0


def test_loss_mse_errors():
    with pytest.raises(ValueError):
        loss_mse([], [])
    with pytest.raises(ValueError):
        loss_mse([1.0], [1.0, 2.0])


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------

def fd_gradient(params, config, window, target, eps=1e-6):
    """Central finite differences of the MSE loss for every parameter."""
    window = np.asarray(window, dtype=np.float64).reshape(config.seq_len, -1)
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))

    def loss_of(p):
        return loss_mse(forward(p, config, window), target)

    grads = {}
    for name, arr in params.tensors():
        grad = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + eps
            up = loss_of(params)
            arr[idx] = orig - eps
            down = loss_of(params)
            arr[idx] = orig
            grad[idx] = (up - down) / (2 * eps)
        grads[name] = grad
    return grads


def assert_grads_close(analytic, reference, rel_tol=1e-5):
    for name, ref in reference.items():
        got = getattr(analytic, name)
        scale = np.maximum(np.abs(ref), 1e-4)
        rel = np.abs(got - ref) / scale
        assert rel.max() <= rel_tol, f"{name}: max rel error {rel.max():.3e}"


def test_zero_error_gives_zero_gradient():
    config = ModelConfig(1, 3, 4, 1)
    params = init_params(config, seed=1)
    window = np.linspace(-1, 1, 4).reshape(4, 1)
    target = forward(params, config, window)  # pred == target
    grads = grad_bptt(params, config, window, target)
    for name, arr in grads.tensors():
        assert np.allclose(arr, 0.0, atol=1e-15), name


def test_dense_bias_gradient_closed_form():
    config = ModelConfig(1, 3, 2, 2)
    params = init_params(config, seed=2)
    window = np.array([[0.1], [0.9]])
    target = np.array([0.0, 1.0])
    pred = forward(params, config, window)
    grads = grad_bptt(params, config, window, target)
    assert np.allclose(grads.dense_b, 2.0 * (pred - target) / 2, rtol=1e-12)


def test_bptt_matches_finite_differences():
    config = ModelConfig(1, 3, 4, 1)
    params = init_params(config, seed=3)
    rng = np.random.default_rng(4)
    window = rng.uniform(0, 1, (4, 1))
    target = rng.uniform(0, 1, 1)
    analytic = grad_bptt(params, config, window, target)
    reference = fd_gradient(params, config, window, target)
    assert_grads_close(analytic, reference)


@pytest.mark.parametrize("n_h,seq,seed", [(1, 1, 10), (2, 2, 11), (3, 4, 12), (2, 4, 13)])
def test_bptt_matches_fd_across_shapes(n_h, seq, seed):
    config = ModelConfig(1, n_h, seq, 1)
    params = init_params(config, seed=seed)
    rng = np.random.default_rng(seed + 100)
    window = rng.uniform(-1, 1, (seq, 1))
    target = rng.uniform(-1, 1, 1)
    analytic = grad_bptt(params, config, window, target)
    reference = fd_gradient(params, config, window, target)
    assert_grads_close(analytic, reference)


def test_grad_shape_mismatch_rejected():
    config = ModelConfig(1, 3, 4, 1)
    params = init_params(config, seed=3)
    with pytest.raises(ValueError):
        grad_bptt(params, config, np.zeros((3, 1)), [0.0])


# ---------------------------------------------------------------------------
# Optimizer and scheduler
# ---------------------------------------------------------------------------

def tiny_dataset(seed=5, length=96, seq_len=6):
    return make_dataset(synth_series(length=length, seed=seed), seq_len=seq_len)


def test_zero_lr_keeps_params():
    config = ModelConfig(1, 4, 6, 1)
    params = init_params(config, seed=6)
    before = {name: arr.copy() for name, arr in params.tensors()}
    train_ds, _ = tiny_dataset()
    trained, _ = train(params, config, TrainConfig(epochs=2, lr=0.0), train_ds)
    for name, arr in trained.tensors():
        assert np.array_equal(arr, before[name]), name


def test_first_adam_step_is_signed_lr():
    # with bias correction, |first update| = lr * g / (|g| + eps') ~ lr * sign(g)
    config = ModelConfig(1, 2, 6, 1)
    params = init_params(config, seed=7)
    tc = TrainConfig(epochs=1, lr=0.01)
    train_ds, _ = tiny_dataset(length=96)
    one = type(train_ds)(train_ds.windows[:1], train_ds.targets[:1], train_ds.normalization)
    grads = grad_bptt(params, config, train_ds.windows[0].reshape(-1, 1), train_ds.targets[0])
    before = params.dense_b.copy()
    trained, _ = train(params, config, tc, one)
    delta = trained.dense_b - before
    g = grads.dense_b
    assert np.allclose(np.abs(delta), tc.lr, rtol=1e-6)
    assert np.all(np.sign(delta) == -np.sign(g))


def test_scheduler_halves_every_step_epochs():
    tc = TrainConfig(lr=0.01, sched_step=3, sched_gamma=0.5)
    expected = [0.01, 0.01, 0.01, 0.005, 0.005, 0.005, 0.0025]
    assert [lr_at_epoch(tc, e) for e in range(7)] == expected


def test_training_reduces_loss_and_is_deterministic():
    config = ModelConfig(1, 8, 6, 1)
    train_ds, _ = make_dataset(synth_series(length=320, seed=8), seq_len=6)
    tc = TrainConfig(epochs=8, lr=0.01, seed=8)
    p1, losses1 = train(init_params(config, seed=8), config, tc, train_ds)
    p2, losses2 = train(init_params(config, seed=8), config, tc, train_ds)
    assert losses1 == losses2
    for (name, a), (_, b) in zip(p1.tensors(), p2.tensors()):
        assert np.array_equal(a, b), name
    assert losses1[-1] < losses1[0]


def test_golden_loss_curve_sine_task():
    # pinned from a reference run of this exact seeded task; the >= 10x
    # first-to-final drop is the headline property
    train_ds, _ = make_dataset(synth_series(length=300, seed=1), seq_len=6)
    config = ModelConfig(1, 20, 6, 1)
    _, losses = train(
        init_params(config, seed=1), config, TrainConfig(epochs=30, lr=0.001, seed=1), train_ds
    )
    assert losses[0] / losses[-1] >= 10.0
    golden = {0: 0.03547648202671306, 2: 0.012976376254246523, 29: 0.0023432848131094597}
    for epoch, value in golden.items():
        assert np.isclose(losses[epoch], value, rtol=1e-9), epoch


def test_divergence_guard():
    config = ModelConfig(1, 2, 6, 1)
    params = init_params(config, seed=9)
    params.dense_b[:] = 1e300
    params.dense_w[:] = 1e300
    train_ds, _ = tiny_dataset()
    with pytest.raises(TrainingDiverged):
        train(params, config, TrainConfig(epochs=1, lr=1e280), train_ds)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(sched_gamma=0.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=2)
