"""Full-batch gradient training of the layer parameters.

Loss is the MSE over every component of the flattened output state, averaged
over all supervision pairs. Gradients come from the hand-derived layer VJPs
chained in reverse; the optimizer is Adam with an exponentially decaying
learning rate lr(e) = lr_initial * (lr_final/lr_initial)**(e/epochs). No
minibatching: the datasets are ~1000 pairs and full-batch keeps every run
bit-reproducible from (dataset, config, seed).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .network import Network, init_params


class NonFiniteLossError(RuntimeError):
    def __init__(self, epoch):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    epochs: int = 2000
    lr_initial: float = 1.0
    lr_final: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    init_range: tuple | None = None
    gradient_check: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0 < self.lr_final <= self.lr_initial):
            raise ValueError("need 0 < lr_final <= lr_initial")

    def lr(self, epoch):
        return self.lr_initial * (self.lr_final / self.lr_initial) ** (epoch / self.epochs)


@dataclass
class TrainReport:
    losses: np.ndarray
    lrs: np.ndarray
    final_loss: float
    best_loss: float
    best_epoch: int
    wall_time: float
    grad_check_residual: float | None = None


def _check_pairs(network: Network, X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or X.shape != Y.shape:
        raise ValueError("X and Y must be equal-shape (n_pairs, dim) arrays")
    if X.shape[1] != network.dim:
        raise ValueError(f"pairs have dimension {X.shape[1]}, network expects {network.dim}")
    if X.shape[0] == 0:
        raise ValueError("no pairs")
    return X, Y


def loss(network: Network, params, X, Y):
    """Mean over pairs of the mean squared component error of one forward step."""
    X, Y = _check_pairs(network, X, Y)
    pred = network.forward(params, X)
    return float(np.mean((pred - Y) ** 2))


def loss_and_grad(network: Network, params, X, Y):
    X, Y = _check_pairs(network, X, Y)
    pred, caches = network.forward_cached(params, X)
    resid = pred - Y
    value = float(np.mean(resid**2))
    seed = (2.0 / resid.size) * resid
    _, g = network.vjp(caches, seed)
    return value, g


def grad(network: Network, params, X, Y):
    """Exact gradient of :func:`loss` with respect to the flat parameter vector."""
    return loss_and_grad(network, params, X, Y)[1]


def finite_difference_gradient(network: Network, params, X, Y, step=1e-6):
    """Central-difference gradient, the independent oracle for :func:`grad`."""
    params = np.asarray(params, dtype=float)
    g = np.zeros_like(params)
    for k in range(len(params)):
        h = step * (1.0 + abs(params[k]))
        up = params.copy()
        dn = params.copy()
        up[k] += h
        dn[k] -= h
        g[k] = (loss(network, up, X, Y) - loss(network, dn, X, Y)) / (2.0 * h)
    return g


def gradient_check(network: Network, params, X, Y, step=1e-5, floor_scale=1e-5):
    """Worst component-wise relative disagreement between reverse-mode and central FD.

    The FD oracle carries its own roundoff of about eps*|loss|/step, so
    components far below the gradient's scale cannot be certified in
    relative terms by any step choice; they are held to the absolute bound
    1e-6 * floor instead, with floor = floor_scale * (1 + max|gf|). The
    default step sits near the central-difference optimum.
    """
    ga = grad(network, params, X, Y)
    gf = finite_difference_gradient(network, params, X, Y, step=step)
    floor = floor_scale * (1.0 + np.max(np.abs(gf)))
    scale = np.maximum(np.maximum(np.abs(ga), np.abs(gf)), floor)
    return float(np.max(np.abs(ga - gf) / scale))


def train(network: Network, X, Y, config: TrainConfig, params0=None):
    """Full-batch Adam; returns (best-loss parameters, report).

    The loss series holds the loss at the parameters entering each epoch;
    the best parameters seen anywhere (including after the last update) are
    returned, so the result is never worse than the initialization.
    """
    X, Y = _check_pairs(network, X, Y)
    if params0 is None:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))
        params = init_params(network.spec, rng, config.init_range)
    else:
        params = np.asarray(params0, dtype=float).copy()
        if params.shape != (network.n_params,):
            raise ValueError("params0 does not match the network")

    residual = None
    if config.gradient_check:
        residual = gradient_check(network, params, X, Y)

    t_start = time.perf_counter()
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    losses = np.empty(config.epochs)
    lrs = np.empty(config.epochs)
    best_loss = np.inf
    best_epoch = -1
    best_params = params.copy()
    for e in range(config.epochs):
        value, g = loss_and_grad(network, params, X, Y)
        if not np.isfinite(value):
            raise NonFiniteLossError(e)
        losses[e] = value
        lrs[e] = config.lr(e)
        if value < best_loss:
            best_loss = value
            best_epoch = e
            best_params = params.copy()
        m = config.beta1 * m + (1.0 - config.beta1) * g
        v = config.beta2 * v + (1.0 - config.beta2) * g * g
        t = e + 1
        mhat = m / (1.0 - config.beta1**t)
        vhat = v / (1.0 - config.beta2**t)
        params = params - lrs[e] * mhat / (np.sqrt(vhat) + config.epsilon)

    final_loss = loss(network, params, X, Y)
    if np.isfinite(final_loss) and final_loss < best_loss:
        best_loss = final_loss
        best_epoch = config.epochs
        best_params = params.copy()
    report = TrainReport(
        losses=losses,
        lrs=lrs,
        final_loss=best_loss,
        best_loss=best_loss,
        best_epoch=best_epoch,
        wall_time=time.perf_counter() - t_start,
        grad_check_residual=residual,
    )
    return best_params, report


def write_loss_log(path, report: TrainReport):
    """CSV training log: epoch, lr, loss."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "lr", "loss"])
        for e, (lr, value) in enumerate(zip(report.lrs, report.losses)):
            writer.writerow([e, f"{lr:.10g}", f"{value:.16g}"])
