"""Solver configuration and per-iteration history records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CONVERGED = "converged"
MAX_ITER = "max_iter"
BREAKDOWN = "breakdown"
RUNNING = "running"

STORE_MODES = ("norms", "window", "full")


class MissingVectorError(KeyError):
    """A checker asked for a vector the history did not store."""


@dataclass(frozen=True)
class SolverConfig:
    """Stopping and breakdown settings shared by every solver.

    ``store`` controls how many iterate vectors are kept: ``"norms"`` keeps
    none, ``"window"`` keeps those with index ``k <= store_window``, and
    ``"full"`` keeps all of them.
    """

    tol: float = 1e-12
    max_iter: int = 1000
    breakdown_eps: float = 1e-50
    store: str = "norms"
    store_window: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.breakdown_eps > 0:
            raise ValueError(f"breakdown_eps must be positive, got {self.breakdown_eps}")
        if self.store not in STORE_MODES:
            raise ValueError(f"store must be one of {STORE_MODES}, got {self.store!r}")
        if self.store_window < 0:
            raise ValueError("store_window must be nonnegative")

    def keeps(self, k):
        if self.store == "full":
            return True
        return self.store == "window" and k <= self.store_window


@dataclass
class SolverHistory:
    """Everything a run produced, indexed by iteration ``k``.

    ``residual_norms[k]`` is the 2-norm of the residual the method reports:
    ``r_k`` for plain methods, the smoothed ``s_k`` for the transformation
    runs, whose underlying Bi-CG norms go to ``primary_norms``.
    ``alpha[k]`` and ``beta[k]`` are the coefficients of the step from ``k``
    to ``k + 1``; ``eta[k]`` is the smoothing weight that produced ``s_k``
    (``nan`` at ``k = 0``).
    """

    method: str
    config: SolverConfig
    r0_norm: float
    residual_norms: list[float] = field(default_factory=list)
    primary_norms: list[float] = field(default_factory=list)
    alpha: list[float] = field(default_factory=list)
    beta: list[float] = field(default_factory=list)
    eta: list[float] = field(default_factory=list)
    extra: dict[str, list[float]] = field(default_factory=dict)
    vectors: dict[str, list] = field(default_factory=dict)
    status: str = RUNNING
    breakdown: str | None = None
    x: np.ndarray | None = None
    true_residual_norm: float = math.nan

    @property
    def iterations(self):
        return len(self.residual_norms) - 1

    @property
    def relative_residuals(self):
        return np.asarray(self.residual_norms) / (self.r0_norm if self.r0_norm > 0 else 1.0)

    @property
    def converged(self):
        return self.status == CONVERGED

    def record(self, k, **vecs):
        if not self.config.keeps(k):
            return
        for name, v in vecs.items():
            slot = self.vectors.setdefault(name, [])
            if len(slot) <= k:
                slot.extend([None] * (k + 1 - len(slot)))
            slot[k] = np.array(v, copy=True)

    def has(self, name, k):
        slot = self.vectors.get(name)
        return slot is not None and k < len(slot) and slot[k] is not None

    def vector(self, name, k):
        if not self.has(name, k):
            raise MissingVectorError(f"{self.method}: vector {name!r} at k={k} was not stored")
        return self.vectors[name][k]

    def stored_range(self, name):
        """Indices ``k`` with ``name`` stored, in increasing order."""
        slot = self.vectors.get(name, [])
        return [k for k, v in enumerate(slot) if v is not None]

    def finish(self, status, breakdown=None):
        self.status = status
        self.breakdown = breakdown

    def summary(self):
        fields = {
            "solver": self.method,
            "status": self.status,
            "iterations": self.iterations,
            "relres": f"{self.relative_residuals[-1]:.6e}",
            "true_relres": f"{self.true_residual_norm / (self.r0_norm or 1.0):.6e}",
        }
        if self.breakdown:
            fields["breakdown"] = self.breakdown.replace(" ", "")
        return " ".join(f"{k}={v}" for k, v in fields.items())


@dataclass(frozen=True)
class SmoothedState:
    """Vectors needed to evaluate the smoothing weight ``eta_k`` (``k >= 1``).

    ``s_prev``/``st_prev`` are ``s_{k-1}`` and its shadow, ``u``/``ut`` are
    ``u_k = r_k - s_{k-1}`` and its shadow, and ``atpt_prev`` is
    ``A^T pt_{k-1}``.
    """

    k: int
    s_prev: np.ndarray
    st_prev: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    atpt_prev: np.ndarray
    eta: float = math.nan

    @classmethod
    def from_history(cls, history: SolverHistory, k: int):
        if k < 1:
            raise ValueError("eta_k is defined for k >= 1")
        return cls(
            k=k,
            s_prev=history.vector("s", k - 1),
            st_prev=history.vector("st", k - 1),
            u=history.vector("u", k),
            ut=history.vector("ut", k),
            atpt_prev=history.vector("Atpt", k - 1),
            eta=history.eta[k] if k < len(history.eta) else math.nan,
        )
