"""Numpy implementations of the per-batch reduction kernels.

Shapes follow one convention throughout: ``x`` is ``(m, n, d)`` with m
batches of n samples in dimension d, ``y`` is ``(m, n)``, ``w`` is ``(d,)``
and ``p`` is an ``(m,)`` probability vector over batches.  ``kappa`` may be
``inf``, in which case the clipped quantities coincide with the unclipped
squared-loss ones.

A compiled twin of this module lives in ``_kernels.pyx``; both are exposed
through :mod:`batchreg.backend`.
"""

import numpy as np

__all__ = [
    "abs_residual_means",
    "clipped_loss_means",
    "clipped_grad_means",
    "weighted_loss_grad",
]


def _residuals(x, y, w):
    m, n, d = x.shape
    return x.reshape(m * n, d) @ w - y.reshape(m * n)


def _sample_losses(r, kappa):
    if np.isinf(kappa):
        return 0.5 * r * r
    a = np.abs(r)
    return np.where(a <= kappa, 0.5 * r * r, kappa * a - 0.5 * kappa * kappa)


def abs_residual_means(x, y, w):
    """Per-batch mean absolute residual, shape ``(m,)``."""
    m, n, _ = x.shape
    r = _residuals(x, y, w)
    return np.abs(r).reshape(m, n).mean(axis=1)


def clipped_loss_means(x, y, w, kappa):
    """Per-batch mean clipped loss, shape ``(m,)``."""
    m, n, _ = x.shape
    r = _residuals(x, y, w)
    return _sample_losses(r, kappa).reshape(m, n).mean(axis=1)


def clipped_grad_means(x, y, w, kappa):
    """Per-batch mean clipped gradient, shape ``(m, d)``."""
    m, n, d = x.shape
    r = _residuals(x, y, w)
    c = r if np.isinf(kappa) else np.clip(r, -kappa, kappa)
    g = x.reshape(m * n, d) * c[:, None]
    return g.reshape(m, n, d).mean(axis=1)


def weighted_loss_grad(x, y, p, w, kappa):
    """Weighted mean clipped loss and its gradient in one pass.

    Returns ``(loss, grad)`` where loss is the p-weighted mean over batches
    of the per-batch mean clipped loss and grad is its gradient w.r.t. w.
    """
    m, n, d = x.shape
    r = _residuals(x, y, w)
    loss = float(_sample_losses(r, kappa).reshape(m, n).mean(axis=1) @ p)
    c = r if np.isinf(kappa) else np.clip(r, -kappa, kappa)
    q = np.repeat(p / n, n)
    grad = x.reshape(m * n, d).T @ (c * q)
    return loss, grad
