"""Run metrics: per-round training loss, test error rate, consensus residual."""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .model import logistic_loss


def average_loss(theta_per_agent, train_per_agent) -> float:
    """(1/N) sum_i mean_n L(y theta_i . x); no regularizer term."""
    losses = [
        float(np.mean(logistic_loss(d.labels * (d.features @ theta))))
        for theta, d in zip(theta_per_agent, train_per_agent, strict=True)
    ]
    return float(np.mean(losses))


def error_rate(theta_per_agent, test: Dataset) -> float:
    """Misclassification rate of sign(theta_i . x), averaged over agents.

    sign(0) predicts +1.
    """
    if test.n_samples == 0:
        raise ValueError("empty test set")
    rates = []
    for theta in theta_per_agent:
        predictions = np.where(test.features @ theta >= 0, 1, -1)
        rates.append(float(np.mean(predictions != test.labels)))
    return float(np.mean(rates))


def consensus_residual(theta_per_agent) -> float:
    """max_i || theta_i - mean(theta) ||_2."""
    thetas = np.asarray(theta_per_agent)
    center = thetas.mean(axis=0)
    return float(np.max(np.linalg.norm(thetas - center, axis=1)))
