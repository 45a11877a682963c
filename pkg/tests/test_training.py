import numpy as np
import pytest

from poissonmaps.cases import make_system
from poissonmaps.groundtruth import SamplerConfig, generate_dataset, pairs_to_arrays
from poissonmaps.network import Network, NetworkSpec, init_params
from poissonmaps.training import (
    NonFiniteLossError,
    TrainConfig,
    TrainReport,
    finite_difference_gradient,
    grad,
    gradient_check,
    loss,
    loss_and_grad,
    train,
    write_loss_log,
)


def _rng(seed=0):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def small_dataset(case, seed=3, n_traj=2, n_steps=4):
    sysx = make_system(case)
    pairs, _ = generate_dataset(
        sysx, SamplerConfig.train_protocol(case, seed=seed, n_traj=n_traj, n_steps=n_steps)
    )
    return pairs_to_arrays(pairs)


def test_loss_zero_on_identity_pairs(rng):
    model = Network(NetworkSpec("so2"))
    X = rng.uniform(-1, 1, (10, 3))
    assert loss(model, np.zeros(model.n_params), X, X) == 0.0


def test_loss_single_component_offset(rng):
    model = Network(NetworkSpec("so3"))
    X, Y, dt = small_dataset("so3")
    params = np.zeros(model.n_params)
    eps = 1e-3
    Y2 = X.copy()
    Y2[:, 4] += eps
    assert loss(model, params, X[:1], Y2[:1]) == pytest.approx(eps**2 / 15, rel=1e-12)


def test_loss_matches_recomputation_oracle(rng):
    model = Network(NetworkSpec("so2"))
    X, Y, dt = small_dataset("so2")
    params = _rng(1).uniform(-1, 1, model.n_params)
    value = loss(model, params, X, Y)
    total = 0.0
    for x, y in zip(X, Y):
        pred = model.forward(params, x)
        total += np.mean((pred - y) ** 2)
    assert value == pytest.approx(total / len(X), rel=1e-15)


def test_grad_zero_at_identity_minimum(rng):
    model = Network(NetworkSpec("so2"))
    X = rng.uniform(-1, 1, (10, 3))
    g = grad(model, np.zeros(model.n_params), X, X)
    assert np.allclose(g, 0.0, atol=1e-16)


@pytest.mark.parametrize("case", ("so2", "so3", "se3"))
def test_grad_matches_finite_differences(case):
    X, Y, dt = small_dataset(case)
    model = Network(NetworkSpec(case, dt=dt))
    for seed in range(3):
        params = _rng(seed).uniform(-0.5, 0.5, model.n_params)
        assert gradient_check(model, params, X, Y) <= 1e-6


def test_grad_additive_in_pair_weighting():
    X, Y, dt = small_dataset("so3", n_traj=2, n_steps=5)
    model = Network(NetworkSpec("so3", dt=dt))
    params = _rng(2).uniform(-0.3, 0.3, model.n_params)
    nA, nB = 3, 5
    gA = grad(model, params, X[:nA], Y[:nA])
    gB = grad(model, params, X[nA : nA + nB], Y[nA : nA + nB])
    gAB = grad(model, params, X[: nA + nB], Y[: nA + nB])
    combined = (nA * gA + nB * gB) / (nA + nB)
    assert np.max(np.abs(gAB - combined)) <= 1e-13 * max(1.0, np.max(np.abs(gAB)))


def test_train_identity_pairs_stays_zero(rng):
    model = Network(NetworkSpec("so2"))
    X = rng.uniform(-1, 1, (20, 3))
    params, report = train(
        model, X, X, TrainConfig(epochs=5, seed=0), params0=np.zeros(model.n_params)
    )
    assert np.array_equal(params, np.zeros(model.n_params))
    assert np.all(report.losses == 0.0)
    assert report.best_loss == 0.0


def test_train_reduces_loss_and_is_reproducible():
    X, Y, dt = small_dataset("so2", n_traj=4, n_steps=6)
    model = Network(NetworkSpec("so2", dt=dt))
    cfg = TrainConfig(epochs=50, seed=5)
    p1, r1 = train(model, X, Y, cfg)
    p2, r2 = train(model, X, Y, cfg)
    assert np.array_equal(p1, p2)
    assert np.array_equal(r1.losses, r2.losses)
    assert r1.best_loss <= r1.losses[0]
    assert len(r1.losses) == 50
    assert r1.best_loss == min(r1.best_loss, np.min(r1.losses))


def test_train_returns_best_parameters():
    X, Y, dt = small_dataset("so2")
    model = Network(NetworkSpec("so2", dt=dt))
    params, report = train(model, X, Y, TrainConfig(epochs=30, seed=1))
    final = loss(model, params, X, Y)
    assert final == pytest.approx(report.best_loss, rel=1e-12)
    assert final <= report.losses[0]


def test_train_gradient_check_flag():
    X, Y, dt = small_dataset("so2")
    model = Network(NetworkSpec("so2", dt=dt))
    _, report = train(model, X, Y, TrainConfig(epochs=2, seed=0, gradient_check=True))
    assert report.grad_check_residual is not None
    assert report.grad_check_residual <= 1e-5


def test_train_aborts_on_nonfinite():
    model = Network(NetworkSpec("so2"))
    X = np.array([[np.nan, 0.0, 0.0]])
    with pytest.raises(NonFiniteLossError) as err:
        train(model, X, X, TrainConfig(epochs=3, seed=0))
    assert err.value.epoch == 0


def test_lr_schedule_is_exponential():
    cfg = TrainConfig(epochs=100, lr_initial=1.0, lr_final=0.1)
    assert cfg.lr(0) == 1.0
    assert cfg.lr(100) == pytest.approx(0.1)
    assert cfg.lr(50) == pytest.approx(np.sqrt(0.1))
    with pytest.raises(ValueError):
        TrainConfig(lr_initial=0.1, lr_final=1.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)


def test_config_and_pair_validation(rng):
    model = Network(NetworkSpec("so2"))
    with pytest.raises(ValueError):
        loss(model, np.zeros(42), np.zeros((0, 3)), np.zeros((0, 3)))
    with pytest.raises(ValueError):
        loss(model, np.zeros(42), np.zeros((2, 4)), np.zeros((2, 4)))
    with pytest.raises(ValueError):
        train(model, rng.uniform(-1, 1, (4, 3)), rng.uniform(-1, 1, (4, 3)),
              TrainConfig(epochs=1), params0=np.zeros(7))


def test_loss_log_csv(tmp_path):
    report = TrainReport(
        losses=np.array([0.5, 0.25]),
        lrs=np.array([1.0, 0.5]),
        final_loss=0.25,
        best_loss=0.25,
        best_epoch=1,
        wall_time=0.1,
    )
    path = tmp_path / "loss.csv"
    write_loss_log(path, report)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "epoch,lr,loss"
    assert lines[1].startswith("0,1,0.5")
    assert len(lines) == 3
