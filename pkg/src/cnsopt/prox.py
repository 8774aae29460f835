"""Proximal operators for the supported regularizers."""

import numpy as np


def prox_l1(v, threshold):
    """Entrywise soft-thresholding: sign(v) * max(|v| - threshold, 0)."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    v = np.asarray(v, dtype=float)
    if threshold == 0:
        return v.copy()
    return np.where(np.abs(v) > threshold, v - threshold * np.sign(v), 0.0)


def prox_regularizer(v, eta, reg, lam_extra=0.0):
    """Prox of eta * (nu1 ||x||_1 + ((nu2 + lam_extra)/2) ||x||_2^2) at v.

    Soft-threshold then shrink; exact because the quadratic weights add. The
    stage ridge term lands here (as lam_extra) rather than in the gradient so
    the update stays in closed form. Reduces to prox_l1 when both quadratic
    weights vanish.
    """
    if eta <= 0:
        raise ValueError(f"step size must be positive, got {eta}")
    if lam_extra < 0:
        raise ValueError(f"lam_extra must be nonnegative, got {lam_extra}")
    out = prox_l1(v, eta * reg.nu1)
    quad = reg.nu2 + lam_extra
    if quad:
        out /= 1.0 + eta * quad
    return out
