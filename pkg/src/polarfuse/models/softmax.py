"""L2-regularized multinomial logistic regression, trained by full-batch descent.

Shared by the TF-IDF linear classifier and the feature-fusion meta-classifier.

The objective is the mean cross-entropy plus ``lam / (2 n) * ||W||^2``. That
is the summed cross-entropy plus ``lam / 2 * ||W||^2`` divided through by the
sample count ``n``, so the minimizer is unchanged while the gradient scale no
longer grows with the dataset. Biases are not penalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from polarfuse.errors import ConfigurationError, DegenerateDataError

MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class SoftmaxHyperparams:
    lam: float = 1.0
    lr: float = 0.1
    max_iters: int = 500
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ConfigurationError(f"lambda must be finite and >= 0, got {self.lam}")
        if not (self.lr > 0 and np.isfinite(self.lr)):
            raise ConfigurationError(f"lr must be finite and > 0, got {self.lr}")
        if self.max_iters < 0:
            raise ConfigurationError(f"max_iters must be >= 0, got {self.max_iters}")
        if not self.tol >= 0:
            raise ConfigurationError(f"tol must be >= 0, got {self.tol}")

    def as_dict(self) -> dict:
        return {"lam": self.lam, "lr": self.lr, "max_iters": self.max_iters, "tol": self.tol, "seed": self.seed}


@dataclass
class SoftmaxFit:
    coef: np.ndarray  # (n_classes, n_features)
    bias: np.ndarray  # (n_classes,)
    loss_history: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def log_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(scores: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(np.atleast_2d(scores)))


def objective(
    coef: np.ndarray, bias: np.ndarray, X, Y: np.ndarray, lam: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and its gradients with respect to ``coef`` and ``bias``.

    ``Y`` is the one-hot target matrix of shape ``(n, n_classes)``.
    """
    n = Y.shape[0]
    scores = np.asarray(X @ coef.T) + bias
    logp = log_softmax(scores)
    loss = -float(np.sum(Y * logp)) / n + lam / (2 * n) * float(np.sum(coef * coef))
    resid = (np.exp(logp) - Y) / n
    grad_coef = np.asarray((X.T @ resid).T) + (lam / n) * coef
    grad_bias = resid.sum(axis=0)
    return loss, grad_coef, grad_bias


def one_hot(y: np.ndarray, n_classes: int) -> np.ndarray:
    Y = np.zeros((len(y), n_classes))
    Y[np.arange(len(y)), y] = 1.0
    return Y


def fit_softmax(X, y: np.ndarray, n_classes: int, params: SoftmaxHyperparams = SoftmaxHyperparams()) -> SoftmaxFit:
    """Fit from zero-initialized parameters.

    Each iteration first tries the configured step; if the loss would rise,
    the step is halved until it does not, so the recorded loss sequence is
    non-increasing. Training stops once the gradient's max-norm drops below
    ``tol`` or ``max_iters`` is reached. No randomness is involved; ``seed``
    is accepted so the call signature is uniform with other trainers.
    """
    y = np.asarray(y, dtype=int)
    if X.shape[0] != len(y):
        raise ConfigurationError(f"{X.shape[0]} feature rows but {len(y)} labels")
    if X.shape[0] == 0:
        raise DegenerateDataError("cannot train on an empty dataset")
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("training labels contain a single class; need at least two")
    if not sp.issparse(X):
        X = np.asarray(X, dtype=float)
        if not np.all(np.isfinite(X)):
            raise DegenerateDataError("training features contain non-finite values")

    Y = one_hot(y, n_classes)
    coef = np.zeros((n_classes, X.shape[1]))
    bias = np.zeros(n_classes)
    loss, g_coef, g_bias = objective(coef, bias, X, Y, params.lam)
    fit = SoftmaxFit(coef, bias, [loss])

    for it in range(params.max_iters):
        gnorm = max(np.abs(g_coef).max(initial=0.0), np.abs(g_bias).max(initial=0.0))
        if gnorm < params.tol:
            fit.converged = True
            break
        step = params.lr
        for _ in range(MAX_BACKTRACKS):
            cand_coef = coef - step * g_coef
            cand_bias = bias - step * g_bias
            cand = objective(cand_coef, cand_bias, X, Y, params.lam)
            if cand[0] <= loss:
                break
            step *= 0.5
        else:
            # no descent step representable; we are at the optimum up to rounding
            fit.converged = True
            break
        coef, bias = cand_coef, cand_bias
        loss, g_coef, g_bias = cand
        fit.loss_history.append(loss)
        fit.iterations = it + 1

    fit.coef, fit.bias = coef, bias
    return fit


def decision_scores(coef: np.ndarray, bias: np.ndarray, X) -> np.ndarray:
    return np.asarray(X @ coef.T) + bias
