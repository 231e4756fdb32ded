"""Classification losses over Dirichlet outputs.

The max-norm-approximating loss F (an L_p relaxation of the expected max
prediction error), the information regularizer R, their analytic gradients
with respect to alpha, the total objective, and the baseline losses (negative
log-marginal likelihood, Bayes-risk cross-entropy, evidential mean-square,
reverse-KL prior target).

Public functions take a single DirichletParams; the `*_batch` variants operate
on an (N, K) alpha matrix and are what the training loop uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dirichlet import DirichletParams, kl_divergence
from .specfun import DomainError, digamma, log_gamma, tetragamma, trigamma

__all__ = [
    "LossConfig",
    "LossOverflowError",
    "iad_loss",
    "iad_loss_grad_alpha",
    "info_regularizer",
    "info_regularizer_grad_alpha",
    "total_loss",
    "nll_marginal_loss",
    "bayes_ce_loss",
    "edl_mse_loss",
    "rkl_prior_loss",
]

# Log values beyond this would overflow/underflow exp(); raising beats masking.
_LOG_CLIP = 700.0


class LossOverflowError(FloatingPointError):
    """A log-space intermediate exceeded the exp() clip threshold."""


@dataclass(frozen=True)
class LossConfig:
    """Knobs shared by the loss family.

    p_norm: order of the L_p relaxation (>= 1). lambda_max: regularizer
    weight ceiling (>= 0). kl_beta: target concentration of the reverse-KL
    baseline (> 0).
    """

    p_norm: float = 4.0
    lambda_max: float = 0.5
    kl_beta: float = 10.0

    def __post_init__(self):
        if self.p_norm < 1.0:
            raise ValueError("p_norm must be >= 1")
        if self.lambda_max < 0.0:
            raise ValueError("lambda_max must be >= 0")
        if self.kl_beta <= 0.0:
            raise ValueError("kl_beta must be > 0")


def _check_batch(alpha: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    alpha = np.atleast_2d(np.asarray(alpha, dtype=np.float64))
    c = np.atleast_1d(np.asarray(c, dtype=np.intp))
    if alpha.ndim != 2 or c.shape != (alpha.shape[0],):
        raise ValueError("alpha must be (N, K) and c must be (N,)")
    if np.any(c < 0) or np.any(c >= alpha.shape[1]):
        raise IndexError("correct_class out of range")
    return alpha, c


def _logsumexp(terms: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(terms, axis=axis, keepdims=True)
    return (m + np.log(np.sum(np.exp(terms - m), axis=axis, keepdims=True))).squeeze(axis)


def _off_class_pieces(alpha, c, p):
    """Shared pieces of F: alpha_0, off-class sum s, and log mu terms."""
    n, k = alpha.shape
    a0 = alpha.sum(axis=1)
    ac = np.take_along_axis(alpha, c[:, None], axis=1)[:, 0]
    s = a0 - ac
    log_mu_s = log_gamma(s + p) - log_gamma(s)
    log_mu_k = log_gamma(alpha + p) - log_gamma(alpha)  # (N, K)
    mask = np.ones((n, k), dtype=bool)
    mask[np.arange(n), c] = False
    return a0, s, log_mu_s, log_mu_k, mask


def iad_log_loss_batch(alpha, c, p_norm: float) -> np.ndarray:
    """log F_i for each row, computed entirely in log space."""
    alpha, c = _check_batch(alpha, c)
    p = float(p_norm)
    a0, s, log_mu_s, log_mu_k, mask = _off_class_pieces(alpha, c, p)
    terms = np.where(mask, log_mu_k, -np.inf)
    terms = np.concatenate([log_mu_s[:, None], terms], axis=1)
    lse = _logsumexp(terms, axis=1)
    log_f = (log_gamma(a0) - log_gamma(a0 + p) + lse) / p
    if np.any(np.abs(log_f) > _LOG_CLIP):
        raise LossOverflowError("log F exceeded the exp() clip threshold")
    return log_f


def iad_loss_batch(alpha, c, p_norm: float) -> np.ndarray:
    return np.exp(iad_log_loss_batch(alpha, c, p_norm))


def iad_loss_grad_alpha_batch(alpha, c, p_norm: float) -> np.ndarray:
    """Analytic gradient of F with respect to alpha, rowwise.

    d log F / d alpha_c = (1/p)(psi(a0) - psi(a0+p)); off-class components add
    the derivative of the log-sum through mu(s) and mu(alpha_j), with
    mu'(a) = mu(a) (psi(a+p) - psi(a)).
    """
    alpha, c = _check_batch(alpha, c)
    p = float(p_norm)
    a0, s, log_mu_s, log_mu_k, mask = _off_class_pieces(alpha, c, p)
    terms = np.where(mask, log_mu_k, -np.inf)
    terms = np.concatenate([log_mu_s[:, None], terms], axis=1)
    lse = _logsumexp(terms, axis=1)
    log_f = (log_gamma(a0) - log_gamma(a0 + p) + lse) / p
    f = np.exp(log_f)

    nu_s = digamma(s + p) - digamma(s)
    nu_k = digamma(alpha + p) - digamma(alpha)
    w_s = np.exp(log_mu_s - lse)
    w_k = np.exp(np.where(mask, log_mu_k, -np.inf) - lse[:, None])

    common = digamma(a0) - digamma(a0 + p)
    grad_log = (common[:, None] + w_s[:, None] * nu_s[:, None] + w_k * nu_k) / p
    n = alpha.shape[0]
    grad_log[np.arange(n), c] = common / p
    return f[:, None] * grad_log


def info_regularizer_batch(alpha, c) -> np.ndarray:
    """R_i = (1/2) sum_{j != c} (alpha_j - 1)^2 (psi'(alpha_j) - psi'(alpha~_0))."""
    alpha, c = _check_batch(alpha, c)
    n, k = alpha.shape
    mask = np.ones((n, k), dtype=bool)
    mask[np.arange(n), c] = False
    off = np.where(mask, alpha, 1.0)
    if np.any(off < 1.0):
        raise DomainError("info regularizer requires off-class alpha_j >= 1")
    # off has a one substituted at c, so sum(off) = 1 + sum_{j != c} alpha_j.
    a_t0 = off.sum(axis=1)
    d = off - 1.0
    return 0.5 * np.sum(d * d * (trigamma(off) - trigamma(a_t0)[:, None]), axis=1)


def info_regularizer_grad_alpha_batch(alpha, c) -> np.ndarray:
    """Analytic gradient of R with respect to alpha (component c is zero)."""
    alpha, c = _check_batch(alpha, c)
    n, k = alpha.shape
    mask = np.ones((n, k), dtype=bool)
    mask[np.arange(n), c] = False
    off = np.where(mask, alpha, 1.0)
    if np.any(off < 1.0):
        raise DomainError("info regularizer requires off-class alpha_j >= 1")
    a_t0 = off.sum(axis=1)
    d = off - 1.0
    tri = trigamma(off)
    tri0 = trigamma(a_t0)[:, None]
    tet = tetragamma(off)
    tet0 = tetragamma(a_t0)[:, None]
    sum_sq = np.sum(d * d, axis=1)[:, None]
    grad = (
        d * (tri - tri0)
        + 0.5 * d * d * (tet - tet0)
        - 0.5 * tet0 * (sum_sq - d * d)
    )
    grad[~mask] = 0.0
    return grad


def total_loss_batch(alpha, c, lambda_t: float, p_norm: float) -> float:
    """Mean over the batch of F_i + lambda_t R_i."""
    alpha, c = _check_batch(alpha, c)
    if alpha.shape[0] == 0:
        raise ValueError("empty batch")
    if lambda_t < 0.0:
        raise ValueError("lambda_t must be >= 0")
    f = iad_loss_batch(alpha, c, p_norm)
    if lambda_t > 0.0:
        f = f + lambda_t * info_regularizer_batch(alpha, c)
    return float(np.mean(f))


# ---------------------------------------------------------------------------
# per-example API


def _single(fn, d: DirichletParams, c: int, *args):
    if not 0 <= c < d.k:
        raise IndexError("correct_class out of range")
    return fn(d.alpha[None, :], np.array([c]), *args)


def iad_loss(d: DirichletParams, correct_class: int, p_norm: float) -> float:
    """Closed-form L_p upper bound on the expected max-norm prediction error."""
    return float(_single(iad_loss_batch, d, correct_class, p_norm)[0])


def iad_loss_grad_alpha(d: DirichletParams, correct_class: int, p_norm: float) -> np.ndarray:
    return _single(iad_loss_grad_alpha_batch, d, correct_class, p_norm)[0]


def info_regularizer(d: DirichletParams, correct_class: int) -> float:
    return float(_single(info_regularizer_batch, d, correct_class)[0])


def info_regularizer_grad_alpha(d: DirichletParams, correct_class: int) -> np.ndarray:
    return _single(info_regularizer_grad_alpha_batch, d, correct_class)[0]


def total_loss(batch, lambda_t: float, p_norm: float) -> float:
    """Mean of F_i + lambda_t R_i over a list of (DirichletParams, class) pairs."""
    if not batch:
        raise ValueError("empty batch")
    alpha = np.stack([d.alpha for d, _ in batch])
    c = np.array([ci for _, ci in batch])
    return total_loss_batch(alpha, c, lambda_t, p_norm)


# ---------------------------------------------------------------------------
# baseline losses


def nll_marginal_loss_batch(alpha, c) -> np.ndarray:
    alpha, c = _check_batch(alpha, c)
    a0 = alpha.sum(axis=1)
    ac = np.take_along_axis(alpha, c[:, None], axis=1)[:, 0]
    return -np.log(ac / a0)


def nll_marginal_grad_alpha_batch(alpha, c) -> np.ndarray:
    alpha, c = _check_batch(alpha, c)
    a0 = alpha.sum(axis=1)
    ac = np.take_along_axis(alpha, c[:, None], axis=1)[:, 0]
    grad = np.broadcast_to((1.0 / a0)[:, None], alpha.shape).copy()
    grad[np.arange(alpha.shape[0]), c] -= 1.0 / ac
    return grad


def bayes_ce_loss_batch(alpha, c) -> np.ndarray:
    alpha, c = _check_batch(alpha, c)
    a0 = alpha.sum(axis=1)
    ac = np.take_along_axis(alpha, c[:, None], axis=1)[:, 0]
    return digamma(a0) - digamma(ac)


def bayes_ce_grad_alpha_batch(alpha, c) -> np.ndarray:
    alpha, c = _check_batch(alpha, c)
    a0 = alpha.sum(axis=1)
    ac = np.take_along_axis(alpha, c[:, None], axis=1)[:, 0]
    grad = np.broadcast_to(trigamma(a0)[:, None], alpha.shape).copy()
    grad[np.arange(alpha.shape[0]), c] -= trigamma(ac)
    return grad


def edl_mse_loss_batch(alpha, c) -> np.ndarray:
    """Evidential mean-square loss: squared bias plus marginal Beta variances."""
    alpha, c = _check_batch(alpha, c)
    a0 = alpha.sum(axis=1)[:, None]
    m = alpha / a0
    y = np.zeros_like(alpha)
    y[np.arange(alpha.shape[0]), c] = 1.0
    var = m * (1.0 - m) / (a0 + 1.0)
    return np.sum((y - m) ** 2 + var, axis=1)


def edl_mse_grad_alpha_batch(alpha, c) -> np.ndarray:
    alpha, c = _check_batch(alpha, c)
    n = alpha.shape[0]
    a0 = alpha.sum(axis=1)[:, None]
    m = alpha / a0
    y = np.zeros_like(alpha)
    y[np.arange(n), c] = 1.0
    # dL/dm_k folded with dm_k/dalpha_j = (delta_kj - m_k)/a0, plus the
    # explicit 1/(a0+1) dependence of the variance term.
    inner = -2.0 * (y - m) + (1.0 - 2.0 * m) / (a0 + 1.0)  # (N, K) = dL/dm_k
    var_sum = np.sum(m * (1.0 - m), axis=1)[:, None]
    grad = (inner - np.sum(inner * m, axis=1)[:, None]) / a0 - var_sum / (a0 + 1.0) ** 2
    return grad


def rkl_prior_loss_batch(alpha, c, beta: float) -> np.ndarray:
    alpha, c = _check_batch(alpha, c)
    if beta <= 0.0:
        raise ValueError("beta must be > 0")
    n, k = alpha.shape
    target = np.ones((n, k))
    target[np.arange(n), c] = beta + 1.0
    a0 = alpha.sum(axis=1)
    diff = alpha - target
    log_b_a = np.sum(log_gamma(alpha), axis=1) - log_gamma(a0)
    log_b_t = np.sum(log_gamma(target), axis=1) - log_gamma(target.sum(axis=1))
    return (
        log_b_t - log_b_a
        + np.sum(diff * (digamma(alpha) - digamma(a0)[:, None]), axis=1)
    )


def rkl_prior_grad_alpha_batch(alpha, c, beta: float) -> np.ndarray:
    alpha, c = _check_batch(alpha, c)
    n, k = alpha.shape
    target = np.ones((n, k))
    target[np.arange(n), c] = beta + 1.0
    a0 = alpha.sum(axis=1)
    diff = alpha - target
    return diff * trigamma(alpha) - trigamma(a0)[:, None] * diff.sum(axis=1)[:, None]


def nll_marginal_loss(d: DirichletParams, correct_class: int) -> float:
    """Negative log-marginal likelihood -ln(alpha_c / alpha_0)."""
    return float(_single(nll_marginal_loss_batch, d, correct_class)[0])


def bayes_ce_loss(d: DirichletParams, correct_class: int) -> float:
    """Bayes risk of the cross-entropy loss: psi(alpha_0) - psi(alpha_c)."""
    return float(_single(bayes_ce_loss_batch, d, correct_class)[0])


def edl_mse_loss(d: DirichletParams, correct_class: int) -> float:
    return float(_single(edl_mse_loss_batch, d, correct_class)[0])


def rkl_prior_loss(d: DirichletParams, correct_class: int, beta: float) -> float:
    """Forward KL from the model Dirichlet to the one-hot prior target."""
    if not 0 <= correct_class < d.k:
        raise IndexError("correct_class out of range")
    target = np.ones(d.k)
    target[correct_class] = beta + 1.0
    return kl_divergence(d, DirichletParams(target))
