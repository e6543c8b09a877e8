"""Numerical checks of the bi-orthogonality structure of recorded runs.

Every check is a pure function of a :class:`SolverHistory` recorded with
vector storage on. An exact-arithmetic zero ``(a, b) = 0`` is measured as
``|(a, b)| / max(|a| |b|, eps_mach |r0|^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .history import MissingVectorError, SmoothedState, SolverHistory
from .linalg import dot, norm
from .solvers import compute_eta_variants

EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class BiorthoReport:
    check_name: str
    window: tuple[int, int]
    tolerance: float
    max_normalized_violation: float
    offending_pair: tuple[int, int] | None
    n_pairs: int

    @property
    def passed(self):
        return self.max_normalized_violation <= self.tolerance

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} {self.check_name:<28} pairs={self.n_pairs:<4d} "
            f"max={self.max_normalized_violation:.3e} at={self.offending_pair} tol={self.tolerance:.1e}"
        )

    def key_values(self):
        pair = "none" if self.offending_pair is None else f"{self.offending_pair[0]},{self.offending_pair[1]}"
        return (
            f"check={self.check_name.replace(' ', '')} window={self.window[0]},{self.window[1]} "
            f"violation={self.max_normalized_violation:.17g} pair={pair} "
            f"tol={self.tolerance:.17g} pass={str(self.passed).lower()}"
        )


@dataclass(frozen=True)
class SequenceComparison:
    deviations: list[float]
    max_deviation: float
    first_exceeding: int | None
    compared: int
    vector_deviations: list[float] = field(default_factory=list)


def _floor(history):
    return EPS * history.r0_norm**2


def _normalized(a, b, floor):
    return abs(dot(a, b)) / max(norm(a) * norm(b), floor)


def _indices(history, name):
    ks = history.stored_range(name)
    if not ks:
        raise MissingVectorError(f"{history.method}: vector {name!r} not stored; rerun with store='window' or 'full'")
    return set(ks)


def _pair_report(name, history, window, tol, pairs, left, right):
    floor = _floor(history)
    worst, where, count = 0.0, None, 0
    for i, j in pairs:
        v = _normalized(left(i), right(j), floor)
        count += 1
        if v > worst or where is None:
            worst, where = v, (i, j)
    return BiorthoReport(name, window, tol, worst, where, count)


def _stored_getter(history, name):
    return lambda k: history.vector(name, k)


def _atpt_getter(history, A, name="pt"):
    def get(k):
        if history.has("Atpt", k) and name == "pt":
            return history.vector("Atpt", k)
        if A is None:
            raise MissingVectorError(f"{history.method}: A^T {name}_{k} not stored and no operator given")
        return A.apply_transpose(history.vector(name, k))

    return get


def _lower_pairs(window, left_ks, right_ks, shift=0):
    """Pairs ``(k, j)`` with ``j < k <= window`` whose vectors (index + shift) exist."""
    return [
        (k, j)
        for k in range(1, window + 1)
        for j in range(k)
        if k + shift in left_ks and j + shift in right_ks
    ]


def check_proposition1(history: SolverHistory, window=15, tol=1e-8, reverse=False) -> list[BiorthoReport]:
    """Six families ``(r_k, .)`` and ``(A p_k, .)`` against ``rt_j, pt_j, st_j`` for ``j < k``.

    With ``reverse=True`` the roles swap: ``(rt_k, .)`` and ``(A^T pt_k, .)``
    against ``r_j, p_j, s_j``.
    """
    if reverse:
        lefts, rights = (("rt", "rt"), ("Atpt", "Atpt")), ("r", "p", "s")
    else:
        lefts, rights = (("r", "r"), ("Ap", "Ap")), ("rt", "pt", "st")
    reports = []
    for label, lname in lefts:
        lks = _indices(history, lname)
        for rname in rights:
            rks = _indices(history, rname)
            pairs = _lower_pairs(window, lks, rks)
            reports.append(
                _pair_report(
                    f"({label}_k, {rname}_j)",
                    history,
                    (window, window - 1),
                    tol,
                    pairs,
                    _stored_getter(history, lname),
                    _stored_getter(history, rname),
                )
            )
    return reports


def check_theorem1(history: SolverHistory, A=None, window=15, tol=1e-8) -> tuple[BiorthoReport, BiorthoReport]:
    """``(s_k, A^T pt_j) = 0`` and ``(u_{k+1}, ut_{j+1}) = 0`` for ``j < k <= window``.

    The diagonal ``j = k`` is excluded; those products are generically nonzero.
    """
    s_ks = _indices(history, "s")
    pt_ks = _indices(history, "pt")
    first = _pair_report(
        "(s_k, A^T pt_j)",
        history,
        (window, window - 1),
        tol,
        _lower_pairs(window, s_ks, pt_ks),
        _stored_getter(history, "s"),
        _atpt_getter(history, A),
    )
    u_ks = _indices(history, "u")
    ut_ks = _indices(history, "ut")
    second = _pair_report(
        "(u_{k+1}, ut_{j+1})",
        history,
        (window, window - 1),
        tol,
        _lower_pairs(window, u_ks, ut_ks, shift=1),
        lambda k: history.vector("u", k + 1),
        lambda j: history.vector("ut", j + 1),
    )
    return first, second


def check_corollary(history: SolverHistory, A, window=15, tol=1e-8) -> tuple[BiorthoReport, BiorthoReport]:
    """``(s_i, A^T st_j) = 0`` and ``(u_i, ut_j) = 0`` for ``i != j`` up to ``window``."""
    s_ks = _indices(history, "s")
    st_ks = _indices(history, "st")
    pairs = [(i, j) for i in range(window + 1) for j in range(window + 1) if i != j and i in s_ks and j in st_ks]
    first = _pair_report(
        "(s_i, A^T st_j)",
        history,
        (window, window),
        tol,
        pairs,
        _stored_getter(history, "s"),
        _atpt_getter(history, A, "st"),
    )
    u_ks = _indices(history, "u")
    ut_ks = _indices(history, "ut")
    pairs = [(i, j) for i in range(1, window + 1) for j in range(1, window + 1) if i != j and i in u_ks and j in ut_ks]
    second = _pair_report(
        "(u_i, ut_j)",
        history,
        (window, window),
        tol,
        pairs,
        _stored_getter(history, "u"),
        _stored_getter(history, "ut"),
    )
    return first, second


def lemma1_defects(history: SolverHistory) -> list[tuple[int, float, float]]:
    """Per ``k >= 1``: relative defects of the ``u`` and ``ut`` recursions."""
    out = []
    for k in sorted(_indices(history, "u")):
        if k < 1 or not history.has("u", k + 1) or not history.has("Ap", k):
            continue
        alpha, eta = history.alpha[k], history.eta[k]
        u_next = history.vector("u", k + 1)
        d = u_next - ((1.0 - eta) * history.vector("u", k) - alpha * history.vector("Ap", k))
        du = norm(d) / max(norm(u_next), EPS * history.r0_norm)
        dut = math.nan
        if history.has("ut", k + 1):
            ut_next = history.vector("ut", k + 1)
            dt = ut_next - ((1.0 - eta) * history.vector("ut", k) - alpha * history.vector("Atpt", k))
            dut = norm(dt) / max(norm(ut_next), EPS * history.r0_norm)
        out.append((k, du, dut))
    return out


def check_lemma1(history: SolverHistory) -> float:
    """Largest relative defect of ``u_{k+1} = (1 - eta_k) u_k - alpha_k A p_k`` (and shadow)."""
    defects = lemma1_defects(history)
    return max((max(du, 0.0 if math.isnan(dut) else dut) for _, du, dut in defects), default=0.0)


def lemma2_values(history: SolverHistory) -> list[tuple[int, float]]:
    floor = _floor(history)
    return [
        (k, _normalized(history.vector("s", k), history.vector("ut", k), floor))
        for k in sorted(_indices(history, "ut"))
        if k >= 1 and history.has("s", k)
    ]


def check_lemma2(history: SolverHistory) -> float:
    """Largest normalized ``|(s_k, ut_k)|`` over ``k >= 1``."""
    return max((v for _, v in lemma2_values(history)), default=0.0)


def eta_spreads(history: SolverHistory) -> list[tuple[int, float]]:
    out = []
    for k in sorted(_indices(history, "u")):
        if k < 1:
            continue
        variants = compute_eta_variants(SmoothedState.from_history(history, k))
        out.append((k, variants.max_relative_spread()))
    return out


def check_eta_variants(history: SolverHistory) -> float:
    """Largest relative disagreement among the three forms of ``eta_k``."""
    return max((v for _, v in eta_spreads(history) if not math.isnan(v)), default=0.0)


def compare_residual_sequences(
    h1: SolverHistory,
    h2: SolverHistory,
    rel_tol=1e-6,
    stop_at=1e-10,
    vector: tuple[str, str] | None = None,
) -> SequenceComparison:
    """Per-iteration relative deviation of relative residual norms.

    Indices from the first ``k`` at which both histories are below
    ``stop_at`` onward are not compared. With ``vector=(name1, name2)`` the
    stored vectors are compared too, as ``|v1 - v2| / |v1|``.
    """
    a, b = h1.relative_residuals, h2.relative_residuals
    tiny = np.finfo(np.float64).tiny
    devs, vdevs = [], []
    for k in range(min(len(a), len(b))):
        if a[k] < stop_at and b[k] < stop_at:
            break
        devs.append(abs(a[k] - b[k]) / max(a[k], tiny))
        if vector is not None and h1.has(vector[0], k) and h2.has(vector[1], k):
            v1, v2 = h1.vector(vector[0], k), h2.vector(vector[1], k)
            vdevs.append(norm(v1 - v2) / max(norm(v1), tiny))
    first = next((k for k, d in enumerate(devs) if d > rel_tol), None)
    return SequenceComparison(devs, max(devs, default=0.0), first, len(devs), vdevs)


def render_reports(reports) -> str:
    return "\n".join(r.line() for r in reports) + "\n"


def report_key_values(reports) -> str:
    return "\n".join(r.key_values() for r in reports) + "\n"


def full_report(history: SolverHistory, A, window=15, tol=1e-8) -> list[BiorthoReport]:
    """All pairwise checks on a ``transform_original`` run, in a fixed order."""
    reports = list(check_proposition1(history, window, tol))
    reports += check_proposition1(history, window, tol, reverse=True)
    reports += check_theorem1(history, A, window, tol)
    reports += check_corollary(history, A, window, tol)
    return reports
