"""Logistic loss, local and augmented objectives, and the gated quality score.

The local objective of agent i is

    f_i(theta) = mean_n L(y_n theta.x_n) + (lambda_hat / N) * 0.5 ||theta||^2

and each round's primal subproblem minimizes the augmented form

    f_i(theta) + (2 dual + b1).theta
        + eta * sum_j || 0.5 (theta_self_prev + theta_j_prev) - theta ||^2

where b1 is the objective-perturbation noise (zero in the non-private run).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset


def logistic_loss(z):
    """log(1 + exp(-z)), overflow-safe; accepts scalars or arrays."""
    return np.logaddexp(0.0, -np.asarray(z, dtype=float))


def logistic_loss_deriv(z):
    """Derivative of logistic_loss: -1/(1+exp(z)), always in (-1, 0)."""
    z = np.asarray(z, dtype=float)
    # sigma(z) - 1 computed without overflow on either sign of z.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = -np.exp(-z[pos]) / (1.0 + np.exp(-z[pos]))
    out[~pos] = -1.0 / (1.0 + np.exp(z[~pos]))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LocalObjectiveParams:
    """Parameters of f_i.  dataset=None is a test surrogate with zero loss term."""

    dataset: Dataset | None
    lambda_hat: float
    num_agents: int


@dataclass(frozen=True)
class AugmentedParams:
    """Round-local terms of the primal subproblem."""

    dual: np.ndarray
    self_prev: np.ndarray
    neighbor_prev: list = field(default_factory=list)
    eta: float = 0.5
    noise_b1: np.ndarray | None = None


def _margins(theta: np.ndarray, data: Dataset) -> np.ndarray:
    if theta.shape[0] != data.dimension:
        raise ValueError(f"theta has dimension {theta.shape[0]}, data has {data.dimension}")
    return data.labels * (data.features @ theta)


def local_objective(theta: np.ndarray, p: LocalObjectiveParams) -> float:
    reg = (p.lambda_hat / p.num_agents) * 0.5 * float(theta @ theta)
    if p.dataset is None:
        return reg
    return float(np.mean(logistic_loss(_margins(theta, p.dataset)))) + reg


def local_gradient(theta: np.ndarray, p: LocalObjectiveParams) -> np.ndarray:
    reg = (p.lambda_hat / p.num_agents) * theta
    if p.dataset is None:
        return reg
    d = p.dataset
    w = logistic_loss_deriv(_margins(theta, d)) * d.labels
    return (d.features.T @ w) / d.n_samples + reg


def augmented_objective(theta: np.ndarray, p: LocalObjectiveParams, a: AugmentedParams) -> float:
    b1 = a.noise_b1 if a.noise_b1 is not None else 0.0
    value = local_objective(theta, p) + float((2.0 * a.dual + b1) @ theta)
    for theta_j in a.neighbor_prev:
        diff = 0.5 * (a.self_prev + theta_j) - theta
        value += a.eta * float(diff @ diff)
    return value


def augmented_gradient(theta: np.ndarray, p: LocalObjectiveParams, a: AugmentedParams) -> np.ndarray:
    b1 = a.noise_b1 if a.noise_b1 is not None else 0.0
    grad = local_gradient(theta, p) + 2.0 * a.dual + b1
    for theta_j in a.neighbor_prev:
        grad += 2.0 * a.eta * (theta - 0.5 * (a.self_prev + theta_j))
    return grad


def clipped_quality(
    theta_prev: np.ndarray,
    theta_hat: np.ndarray,
    p: LocalObjectiveParams,
    c_loss: float,
) -> float:
    """f_i(theta_prev) - f_i(theta_hat) with per-sample losses capped at c_loss.

    Capping bounds the score's sensitivity to any single sample swap by
    2 * c_loss.  The regularizer enters uncapped (it is data-independent).
    """
    if c_loss <= 0:
        raise ValueError("c_loss must be positive")

    def clipped_f(theta):
        reg = (p.lambda_hat / p.num_agents) * 0.5 * float(theta @ theta)
        if p.dataset is None:
            return reg
        losses = np.minimum(logistic_loss(_margins(theta, p.dataset)), c_loss)
        return float(np.mean(losses)) + reg

    return clipped_f(theta_prev) - clipped_f(theta_hat)
