"""Minibatch optimization of the regularized objective with Adam, lambda
annealing and early stopping."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import losses, network
from .data import Dataset, split

__all__ = [
    "TrainConfig",
    "TrainRecord",
    "AdamState",
    "TrainingDiverged",
    "anneal_lambda",
    "adam_step",
    "train",
    "LOSSES",
]

log = logging.getLogger("iad.training")

# Abort threshold for the Dirichlet strength of any single example.
_ALPHA0_CAP = 1e9


class TrainingDiverged(RuntimeError):
    """Loss became non-finite or concentrations blew up."""


@dataclass(frozen=True)
class TrainConfig:
    p_norm: float = 4.0
    lambda_max: float = 0.5
    t0: int = 10            # epochs before the regularizer ramp starts
    t_rate: int = 60        # ramp length in epochs
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 20
    seed: int = 0
    val_fraction: float = 0.1
    kl_beta: float = 10.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1 or self.patience < 1 or self.t_rate < 1:
            raise ValueError("batch_size, patience and t_rate must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")


@dataclass
class EpochRow:
    epoch: int
    train_loss: float
    val_loss: float
    val_acc: float
    lambda_t: float
    seconds: float


@dataclass
class TrainRecord:
    rows: list[EpochRow] = field(default_factory=list)
    best_epoch: int = -1

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_loss", "val_loss", "val_acc",
                             "lambda_t", "seconds"])
            for r in self.rows:
                writer.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss),
                                 repr(r.val_acc), repr(r.lambda_t), f"{r.seconds:.3f}"])


def anneal_lambda(cfg: TrainConfig, epoch: int) -> float:
    """lambda_t = lambda * min((t - T0)/T, 1) for t > T0, else 0."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    if epoch <= cfg.t0:
        return 0.0
    return cfg.lambda_max * min((epoch - cfg.t0) / cfg.t_rate, 1.0)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, arrays: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState,
              cfg: TrainConfig) -> None:
    """Standard Adam update with bias correction, in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("parameter/gradient/state shape mismatch")
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError("parameter/gradient shape mismatch")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** state.t)
        v_hat = v / (1.0 - b2 ** state.t)
        p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


# loss selector -> (value(alpha, c, cfg) -> (N,), grad(alpha, c, cfg) -> (N, K),
#                   regularized: bool)
LOSSES = {
    "iad": (
        lambda a, c, cfg: losses.iad_loss_batch(a, c, cfg.p_norm),
        lambda a, c, cfg: losses.iad_loss_grad_alpha_batch(a, c, cfg.p_norm),
        True,
    ),
    "edl": (
        lambda a, c, cfg: losses.edl_mse_loss_batch(a, c),
        lambda a, c, cfg: losses.edl_mse_grad_alpha_batch(a, c),
        False,
    ),
    "nll": (
        lambda a, c, cfg: losses.nll_marginal_loss_batch(a, c),
        lambda a, c, cfg: losses.nll_marginal_grad_alpha_batch(a, c),
        False,
    ),
    "bayes_ce": (
        lambda a, c, cfg: losses.bayes_ce_loss_batch(a, c),
        lambda a, c, cfg: losses.bayes_ce_grad_alpha_batch(a, c),
        False,
    ),
    "rkl": (
        lambda a, c, cfg: losses.rkl_prior_loss_batch(a, c, cfg.kl_beta),
        lambda a, c, cfg: losses.rkl_prior_grad_alpha_batch(a, c, cfg.kl_beta),
        False,
    ),
}


def _objective(alpha, c, cfg: TrainConfig, lam: float, loss: str):
    value_fn, grad_fn, regularized = LOSSES[loss]
    vals = value_fn(alpha, c, cfg)
    grads = grad_fn(alpha, c, cfg)
    if regularized and lam > 0.0:
        vals = vals + lam * losses.info_regularizer_batch(alpha, c)
        grads = grads + lam * losses.info_regularizer_grad_alpha_batch(alpha, c)
    return vals, grads


def _evaluate_split(net, ds: Dataset, cfg: TrainConfig, lam: float, loss: str):
    trace = network.forward(net, ds.features)
    c = ds.label_indices
    value_fn, _, regularized = LOSSES[loss]
    vals = value_fn(trace.alpha, c, cfg)
    if regularized and lam > 0.0:
        vals = vals + lam * losses.info_regularizer_batch(trace.alpha, c)
    acc = float(np.mean(np.argmax(trace.alpha, axis=1) == c))
    return float(np.mean(vals)), acc


def train(dataset: Dataset, arch: list[int], cfg: TrainConfig, loss: str = "iad",
          val: Dataset | None = None) -> tuple[network.NetworkParams, TrainRecord]:
    """Train on `dataset`, returning the parameters of the best-validation
    epoch. `arch` lists hidden layer widths; input/output sizes come from the
    data. Early stopping monitors the validation objective at the full
    regularizer weight so epochs are comparable across the annealing ramp."""
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; pick one of {sorted(LOSSES)}")
    if dataset.n == 0 or dataset.labels is None:
        raise ValueError("training needs a non-empty labeled dataset")
    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    rng_init = np.random.default_rng(seeds[0])
    rng_split = np.random.default_rng(seeds[1])
    rng_shuffle = np.random.default_rng(seeds[2])

    if val is None:
        train_ds, val_ds = split(dataset, [1.0 - cfg.val_fraction, cfg.val_fraction],
                                 rng_split)
    else:
        train_ds, val_ds = dataset, val

    sizes = [dataset.d] + list(arch) + [dataset.k]
    net = network.init(sizes, rng_init)
    params = net.weights + net.biases
    state = AdamState.zeros_like(params)

    monitor_lam = cfg.lambda_max if LOSSES[loss][2] else 0.0
    record = TrainRecord()
    best_val = np.inf
    best_params = net.copy()
    best_epoch = 0
    feats, labels = train_ds.features, train_ds.label_indices

    for epoch in range(1, cfg.max_epochs + 1):
        t_start = time.perf_counter()
        lam = anneal_lambda(cfg, epoch) if LOSSES[loss][2] else 0.0
        order = rng_shuffle.permutation(train_ds.n)
        epoch_loss = 0.0
        for start in range(0, train_ds.n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, cb = feats[idx], labels[idx]
            trace = network.forward(net, xb)
            if np.any(trace.alpha.sum(axis=1) > _ALPHA0_CAP):
                raise TrainingDiverged(f"alpha_0 exceeded {_ALPHA0_CAP:g} at epoch {epoch}")
            vals, dalpha = _objective(trace.alpha, cb, cfg, lam, loss)
            batch_loss = float(np.mean(vals))
            if not np.isfinite(batch_loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            grads = network.backward(net, trace, dalpha / idx.size)
            adam_step(params, grads.weights + grads.biases, state, cfg)
            epoch_loss += batch_loss * idx.size
        epoch_loss /= train_ds.n

        val_loss, val_acc = _evaluate_split(net, val_ds, cfg, monitor_lam, loss)
        if not np.isfinite(val_loss):
            raise TrainingDiverged(f"non-finite validation loss at epoch {epoch}")
        record.rows.append(EpochRow(epoch, epoch_loss, val_loss, val_acc, lam,
                                    time.perf_counter() - t_start))
        if val_loss < best_val:
            best_val = val_loss
            best_params = net.copy()
            best_epoch = epoch
        if epoch - best_epoch >= cfg.patience:
            log.info("early stop at epoch %d (best %d)", epoch, best_epoch)
            break

    record.best_epoch = best_epoch
    return best_params, record
