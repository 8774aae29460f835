"""Composite objective P(x) = average loss + regularizer, and its smoothed form."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import smoothing
from .datasets import CLASSIFICATION, REGRESSION, SparseDataset
from .smoothing import ABSOLUTE, HINGE

L1 = "l1"
ELASTIC_NET = "elastic-net"


@dataclass(frozen=True)
class Regularizer:
    """l1 or elastic-net penalty nu1 ||x||_1 + (nu2 / 2) ||x||_2^2.

    The kind is derived from nu2 so the "nu2 > 0 iff elastic-net" invariant
    holds by construction.
    """

    nu1: float = 0.0
    nu2: float = 0.0

    def __post_init__(self):
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValueError("regularization weights must be nonnegative")

    @property
    def kind(self):
        return ELASTIC_NET if self.nu2 > 0 else L1

    @property
    def strong_convexity(self):
        return self.nu2

    def value(self, x):
        v = self.nu1 * float(np.sum(np.abs(x)))
        if self.nu2:
            v += 0.5 * self.nu2 * float(x @ x)
        return v


@dataclass(frozen=True)
class CompositeProblem:
    """Nonsmooth risk: (1/n) sum of hinge or absolute losses, plus a regularizer.

    The strong-convexity modulus mu comes from the regularizer only; the two
    supported losses contribute none.
    """

    data: SparseDataset
    loss: str
    reg: Regularizer

    def __post_init__(self):
        if self.loss not in (HINGE, ABSOLUTE):
            raise ValueError(f"unknown loss {self.loss!r}")
        expected = CLASSIFICATION if self.loss == HINGE else REGRESSION
        if self.data.task != expected:
            raise ValueError(f"{self.loss} loss requires a {expected} dataset")

    @property
    def n(self):
        return self.data.n

    @property
    def d(self):
        return self.data.d

    @property
    def mu(self):
        return self.reg.nu2

    @cached_property
    def max_row_sq_norm(self):
        return smoothing.max_row_sq_norm(self.data.features)


@dataclass(frozen=True)
class SmoothedProblem:
    """A stage's surrogate: smoothed losses at level gamma plus (lam/2)||x||^2.

    lam = 0 corresponds to the plain smoothed objective; lam > 0 is the
    ridge-augmented stage objective used by the general-convex driver.
    """

    base: CompositeProblem
    gamma: float
    lam: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")


def objective_original(problem, x):
    """Exact nonsmooth objective: mean hinge/absolute loss plus regularizer."""
    m = smoothing.margins(problem, x)
    losses = smoothing.exact_loss_values(m, problem.loss)
    return float(losses.mean()) + problem.reg.value(x)


def objective_smoothed(sp, x):
    """Stage objective: mean smoothed loss + regularizer + (lam/2)||x||^2."""
    m = smoothing.margins(sp.base, x)
    vals = smoothing.smoothed_loss_values(m, sp.base.loss, sp.gamma)
    out = float(vals.mean()) + sp.base.reg.value(x)
    if sp.lam:
        out += 0.5 * sp.lam * float(x @ x)
    return out
