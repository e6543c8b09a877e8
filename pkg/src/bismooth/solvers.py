"""CG, CR, Bi-CG, Bi-CR and the Bi-CG -> Bi-CR residual transformations.

Every ``run_*`` function takes an operator, right-hand side ``b``, initial
guess ``x0`` (and for two-sided methods an initial shadow residual ``rt0``,
defaulting to ``r0``) and returns a :class:`~bismooth.history.SolverHistory`.

Stored vector names: ``x r rt p pt Ap Atpt q s st u ut y``, where ``t``
marks a shadow quantity (``rt`` is r-tilde, ``Atpt`` is ``A^T pt``).

A denominator ``d`` formed from vectors ``a`` and ``b`` is treated as a
breakdown when ``|d| <= breakdown_eps * |a| |b|``; the run stops and the
history names the offending inner product.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .history import (
    BREAKDOWN,
    CONVERGED,
    MAX_ITER,
    SmoothedState,
    SolverConfig,
    SolverHistory,
)
from .linalg import (
    DimensionError,
    LinearOperator,
    PairedVector,
    as_vector,
    block_apply,
    dot,
    norm,
    quasi_inner_product,
)


def _is_breakdown(value, scale, eps):
    return not abs(value) > eps * scale


def _setup(A, b, x0, rt0=None, two_sided=False):
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"operator must be square, got {A.shape}")
    b = as_vector(b, "b")
    if b.shape[0] != n:
        raise DimensionError(f"b has length {b.shape[0]}, operator is {n}x{n}")
    x = np.zeros(n) if x0 is None else as_vector(x0, "x0")
    if x.shape[0] != n:
        raise DimensionError(f"x0 has length {x.shape[0]}, operator is {n}x{n}")
    r = b - A.apply(x)
    if not two_sided:
        return b, x, r
    rt = r.copy() if rt0 is None else as_vector(rt0, "rt0")
    if rt.shape[0] != n:
        raise DimensionError(f"rt0 has length {rt.shape[0]}, operator is {n}x{n}")
    return b, x, r, rt


def _finish(hist, A, b, x, status, breakdown=None):
    hist.x = x
    hist.true_residual_norm = norm(b - A.apply(x))
    hist.finish(status, breakdown)
    return hist


def _converged(value, r0_norm, tol):
    return value < tol * r0_norm


def run_cg(A: LinearOperator, b, x0=None, cfg: SolverConfig | None = None) -> SolverHistory:
    """Hestenes-Stiefel conjugate gradients for symmetric (positive definite) A."""
    cfg = cfg or SolverConfig()
    b, x, r = _setup(A, b, x0)
    p = r.copy()
    rr = dot(r, r)
    hist = SolverHistory("cg", cfg, math.sqrt(rr), [math.sqrt(rr)])
    hist.record(0, x=x, r=r)
    if hist.r0_norm == 0:
        return _finish(hist, A, b, x, CONVERGED)
    for k in range(cfg.max_iter):
        Ap = A.apply(p)
        pAp = dot(p, Ap)
        if _is_breakdown(pAp, norm(p) * norm(Ap), cfg.breakdown_eps):
            return _finish(hist, A, b, x, BREAKDOWN, "(p_k, A p_k)")
        alpha = rr / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rr_new = dot(r, r)
        hist.alpha.append(alpha)
        hist.residual_norms.append(math.sqrt(rr_new))
        hist.record(k, p=p, Ap=Ap)
        hist.record(k + 1, x=x, r=r)
        if _converged(hist.residual_norms[-1], hist.r0_norm, cfg.tol):
            return _finish(hist, A, b, x, CONVERGED)
        beta = rr_new / rr
        hist.beta.append(beta)
        p = r + beta * p
        rr = rr_new
    return _finish(hist, A, b, x, MAX_ITER)


def run_cr(A: LinearOperator, b, x0=None, cfg: SolverConfig | None = None) -> SolverHistory:
    """Conjugate residuals for symmetric, possibly indefinite, A."""
    cfg = cfg or SolverConfig()
    b, x, r = _setup(A, b, x0)
    p = r.copy()
    Ar = A.apply(r)
    Ap = Ar.copy()
    rAr = dot(r, Ar)
    r0_norm = norm(r)
    hist = SolverHistory("cr", cfg, r0_norm, [r0_norm])
    hist.record(0, x=x, r=r)
    if r0_norm == 0:
        return _finish(hist, A, b, x, CONVERGED)
    for k in range(cfg.max_iter):
        if _is_breakdown(rAr, norm(r) * norm(Ar), cfg.breakdown_eps):
            return _finish(hist, A, b, x, BREAKDOWN, "(r_k, A r_k)")
        ApAp = dot(Ap, Ap)
        if ApAp == 0:
            return _finish(hist, A, b, x, BREAKDOWN, "(A p_k, A p_k)")
        alpha = rAr / ApAp
        x = x + alpha * p
        r = r - alpha * Ap
        hist.alpha.append(alpha)
        hist.residual_norms.append(norm(r))
        hist.record(k, p=p, Ap=Ap)
        hist.record(k + 1, x=x, r=r)
        if _converged(hist.residual_norms[-1], r0_norm, cfg.tol):
            return _finish(hist, A, b, x, CONVERGED)
        Ar = A.apply(r)
        rAr_new = dot(r, Ar)
        beta = rAr_new / rAr
        hist.beta.append(beta)
        p = r + beta * p
        Ap = Ar + beta * Ap
        rAr = rAr_new
    return _finish(hist, A, b, x, MAX_ITER)


def run_bicg(A: LinearOperator, b, x0=None, rt0=None, cfg: SolverConfig | None = None) -> SolverHistory:
    """Fletcher's biconjugate gradient method."""
    cfg = cfg or SolverConfig()
    b, x, r, rt = _setup(A, b, x0, rt0, two_sided=True)
    p, pt = r.copy(), rt.copy()
    rho = dot(rt, r)
    r0_norm = norm(r)
    hist = SolverHistory("bicg", cfg, r0_norm, [r0_norm])
    hist.record(0, x=x, r=r, rt=rt)
    if r0_norm == 0:
        return _finish(hist, A, b, x, CONVERGED)
    for k in range(cfg.max_iter):
        if _is_breakdown(rho, norm(rt) * norm(r), cfg.breakdown_eps):
            return _finish(hist, A, b, x, BREAKDOWN, "(rt_k, r_k)")
        Ap = A.apply(p)
        Atpt = A.apply_transpose(pt)
        sigma = dot(pt, Ap)
        if _is_breakdown(sigma, norm(pt) * norm(Ap), cfg.breakdown_eps):
            return _finish(hist, A, b, x, BREAKDOWN, "(pt_k, A p_k)")
        alpha = rho / sigma
        x = x + alpha * p
        r = r - alpha * Ap
        rt = rt - alpha * Atpt
        hist.alpha.append(alpha)
        hist.residual_norms.append(norm(r))
        hist.record(k, p=p, pt=pt, Ap=Ap, Atpt=Atpt)
        hist.record(k + 1, x=x, r=r, rt=rt)
        if _converged(hist.residual_norms[-1], r0_norm, cfg.tol):
            return _finish(hist, A, b, x, CONVERGED)
        rho_new = dot(rt, r)
        beta = rho_new / rho
        hist.beta.append(beta)
        p = r + beta * p
        pt = rt + beta * pt
        rho = rho_new
    return _finish(hist, A, b, x, MAX_ITER)


def run_bicr(A: LinearOperator, b, x0=None, rt0=None, cfg: SolverConfig | None = None) -> SolverHistory:
    """Biconjugate residual method; ``q_k = A p_k`` is kept by recursion."""
    cfg = cfg or SolverConfig()
    b, x, r, rt = _setup(A, b, x0, rt0, two_sided=True)
    p, pt = r.copy(), rt.copy()
    Ar = A.apply(r)
    q = Ar.copy()
    rho = dot(rt, Ar)
    r0_norm = norm(r)
    hist = SolverHistory("bicr", cfg, r0_norm, [r0_norm])
    hist.record(0, x=x, r=r, rt=rt)
    if r0_norm == 0:
        return _finish(hist, A, b, x, CONVERGED)
    for k in range(cfg.max_iter):
        if _is_breakdown(rho, norm(rt) * norm(Ar), cfg.breakdown_eps):
            return _finish(hist, A, b, x, BREAKDOWN, "(rt_k, A r_k)")
        Atpt = A.apply_transpose(pt)
        sigma = dot(Atpt, q)
        if _is_breakdown(sigma, norm(Atpt) * norm(q), cfg.breakdown_eps):
            return _finish(hist, A, b, x, BREAKDOWN, "(A^T pt_k, q_k)")
        alpha = rho / sigma
        x = x + alpha * p
        r = r - alpha * q
        rt = rt - alpha * Atpt
        hist.alpha.append(alpha)
        hist.residual_norms.append(norm(r))
        hist.record(k, p=p, pt=pt, q=q, Atpt=Atpt)
        hist.record(k + 1, x=x, r=r, rt=rt)
        if _converged(hist.residual_norms[-1], r0_norm, cfg.tol):
            return _finish(hist, A, b, x, CONVERGED)
        Ar = A.apply(r)
        rho_new = dot(rt, Ar)
        beta = rho_new / rho
        hist.beta.append(beta)
        p = r + beta * p
        pt = rt + beta * pt
        q = Ar + beta * q
        rho = rho_new
    return _finish(hist, A, b, x, MAX_ITER)


def run_transform_original(A: LinearOperator, b, x0=None, rt0=None, cfg: SolverConfig | None = None) -> SolverHistory:
    """Bi-CG with the two-sided smoothing that turns its residuals into Bi-CR ones.

    Carries the shadow smoothed residual ``st`` and both auxiliary vectors
    ``u = r - s`` and ``ut = rt - st``. The shadow approximation is never
    formed. ``residual_norms`` holds ``|s_k|`` and convergence is judged on it.
    """
    cfg = cfg or SolverConfig()
    b, x, r, rt = _setup(A, b, x0, rt0, two_sided=True)
    p, pt = r.copy(), rt.copy()
    y, s, st = x.copy(), r.copy(), rt.copy()
    rho = dot(rt, r)
    r0_norm = norm(r)
    hist = SolverHistory("transform_original", cfg, r0_norm, [r0_norm], [r0_norm])
    hist.eta.append(math.nan)
    hist.record(0, x=x, r=r, rt=rt, y=y, s=s, st=st)
    if r0_norm == 0:
        return _finish(hist, A, b, y, CONVERGED)
    for k in range(cfg.max_iter):
        if _is_breakdown(rho, norm(rt) * norm(r), cfg.breakdown_eps):
            return _finish(hist, A, b, y, BREAKDOWN, "(rt_k, r_k)")
        Ap = A.apply(p)
        Atpt = A.apply_transpose(pt)
        sigma = dot(pt, Ap)
        if _is_breakdown(sigma, norm(pt) * norm(Ap), cfg.breakdown_eps):
            return _finish(hist, A, b, y, BREAKDOWN, "(pt_k, A p_k)")
        alpha = rho / sigma
        x = x + alpha * p
        r = r - alpha * Ap
        rt = rt - alpha * Atpt
        u = r - s
        ut = rt - st
        uu = dot(ut, u)
        if _is_breakdown(uu, norm(ut) * norm(u), cfg.breakdown_eps):
            hist.record(k, p=p, pt=pt, Ap=Ap, Atpt=Atpt)
            return _finish(hist, A, b, y, BREAKDOWN, "(ut_{k+1}, u_{k+1})")
        eta = -(dot(st, u) + dot(s, ut)) / (2.0 * uu)
        y = y + eta * (x - y)
        s = s + eta * u
        st = st + eta * ut
        hist.alpha.append(alpha)
        hist.eta.append(eta)
        hist.residual_norms.append(norm(s))
        hist.primary_norms.append(norm(r))
        hist.record(k, p=p, pt=pt, Ap=Ap, Atpt=Atpt)
        hist.record(k + 1, x=x, r=r, rt=rt, u=u, ut=ut, y=y, s=s, st=st)
        if _converged(hist.residual_norms[-1], r0_norm, cfg.tol):
            return _finish(hist, A, b, y, CONVERGED)
        rho_new = dot(rt, r)
        beta = rho_new / rho
        hist.beta.append(beta)
        p = r + beta * p
        pt = rt + beta * pt
        rho = rho_new
    return _finish(hist, A, b, y, MAX_ITER)


def run_transform_concise(A: LinearOperator, b, x0=None, rt0=None, cfg: SolverConfig | None = None) -> SolverHistory:
    """Bi-CG plus one-sided smoothing whose weight uses ``A^T pt_k``.

    No shadow smoothed vectors are kept; the ``A^T pt_k`` product already
    needed for the shadow residual update is reused for ``eta``, so the cost
    per iteration is two operator applications, same as Bi-CG.
    """
    cfg = cfg or SolverConfig()
    b, x, r, rt = _setup(A, b, x0, rt0, two_sided=True)
    p, pt = r.copy(), rt.copy()
    y, s = x.copy(), r.copy()
    rho = dot(rt, r)
    r0_norm = norm(r)
    hist = SolverHistory("transform_concise", cfg, r0_norm, [r0_norm], [r0_norm])
    hist.eta.append(math.nan)
    hist.record(0, x=x, r=r, rt=rt, y=y, s=s)
    if r0_norm == 0:
        return _finish(hist, A, b, y, CONVERGED)
    for k in range(cfg.max_iter):
        if _is_breakdown(rho, norm(rt) * norm(r), cfg.breakdown_eps):
            return _finish(hist, A, b, y, BREAKDOWN, "(rt_k, r_k)")
        Ap = A.apply(p)
        Atpt = A.apply_transpose(pt)
        sigma = dot(pt, Ap)
        if _is_breakdown(sigma, norm(pt) * norm(Ap), cfg.breakdown_eps):
            return _finish(hist, A, b, y, BREAKDOWN, "(pt_k, A p_k)")
        alpha = rho / sigma
        x = x + alpha * p
        r = r - alpha * Ap
        rt = rt - alpha * Atpt
        u = r - s
        den = dot(u, Atpt)
        if _is_breakdown(den, norm(u) * norm(Atpt), cfg.breakdown_eps):
            hist.record(k, p=p, pt=pt, Ap=Ap, Atpt=Atpt)
            return _finish(hist, A, b, y, BREAKDOWN, "(r_{k+1} - s_k, A^T pt_k)")
        eta = -dot(s, Atpt) / den
        y = y + eta * (x - y)
        s = s + eta * u
        hist.alpha.append(alpha)
        hist.eta.append(eta)
        hist.residual_norms.append(norm(s))
        hist.primary_norms.append(norm(r))
        hist.record(k, p=p, pt=pt, Ap=Ap, Atpt=Atpt)
        hist.record(k + 1, x=x, r=r, rt=rt, u=u, y=y, s=s)
        if _converged(hist.residual_norms[-1], r0_norm, cfg.tol):
            return _finish(hist, A, b, y, CONVERGED)
        rho_new = dot(rt, r)
        beta = rho_new / rho
        hist.beta.append(beta)
        p = r + beta * p
        pt = rt + beta * pt
        rho = rho_new
    return _finish(hist, A, b, y, MAX_ITER)


def run_extended_cg(A: LinearOperator, b, x0=None, rt0=None, cfg: SolverConfig | None = None) -> SolverHistory:
    """CG on the 2n system diag(A, A^T) xh = bh in the quasi-inner product.

    The bottom half starts from ``x~_0 = 0`` with right-hand side ``rt0``,
    so its initial residual is the shadow residual. Every inner product is
    the quasi-inner product; no standard inner product enters the recursion.
    """
    cfg = cfg or SolverConfig()
    b, x, r, rt = _setup(A, b, x0, rt0, two_sided=True)
    xh = PairedVector(x, np.zeros_like(x))
    rh = PairedVector(r, rt)
    ph = rh
    rho = quasi_inner_product(rh, rh)
    r0_norm = norm(r)
    hist = SolverHistory("extended_cg", cfg, r0_norm, [r0_norm])
    hist.record(0, x=x, r=r, rt=rt)
    if r0_norm == 0:
        return _finish(hist, A, b, x, CONVERGED)
    for k in range(cfg.max_iter):
        if _is_breakdown(rho, 2.0 * norm(rh.top) * norm(rh.bottom), cfg.breakdown_eps):
            return _finish(hist, A, b, xh.top, BREAKDOWN, "<rh_k, rh_k>")
        Aph = block_apply(A, ph)
        sigma = quasi_inner_product(ph, Aph)
        scale = norm(ph.top) * norm(Aph.bottom) + norm(ph.bottom) * norm(Aph.top)
        if _is_breakdown(sigma, scale, cfg.breakdown_eps):
            return _finish(hist, A, b, xh.top, BREAKDOWN, "<ph_k, Ah ph_k>")
        alpha = rho / sigma
        xh = xh + alpha * ph
        rh = rh - alpha * Aph
        hist.alpha.append(alpha)
        hist.residual_norms.append(norm(rh.top))
        hist.record(k, p=ph.top, pt=ph.bottom, Ap=Aph.top, Atpt=Aph.bottom)
        hist.record(k + 1, x=xh.top, r=rh.top, rt=rh.bottom)
        if _converged(hist.residual_norms[-1], r0_norm, cfg.tol):
            return _finish(hist, A, b, xh.top, CONVERGED)
        rho_new = quasi_inner_product(rh, rh)
        beta = rho_new / rho
        hist.beta.append(beta)
        ph = rh + beta * ph
        rho = rho_new
    return _finish(hist, A, b, xh.top, MAX_ITER)


def mrs_step(y_prev, s_prev, x_k, r_k):
    """One minimal-residual-smoothing step; returns ``(y_k, s_k, eta_k)``.

    ``eta_k`` makes ``s_k`` orthogonal to ``r_k - s_prev``, which minimizes
    ``|s_k|`` along that line. If ``r_k == s_prev`` there is nothing to
    smooth and ``(y_prev, s_prev, 0.0)`` is returned.
    """
    d = r_k - s_prev
    dd = dot(d, d)
    if dd == 0:
        return y_prev.copy(), s_prev.copy(), 0.0
    eta = -dot(s_prev, d) / dd
    return y_prev + eta * (x_k - y_prev), s_prev + eta * d, eta


def qmrs_step(s_prev, r_k, tau_prev_sq):
    """One quasi-minimal-residual-smoothing step; returns ``(s_k, eta_k, tau_k^2)``.

    ``1/tau_k^2 = 1/tau_{k-1}^2 + 1/rho_k^2`` with ``rho_k = |r_k|`` and
    ``eta_k = tau_k^2 / rho_k^2``. An exactly zero ``r_k`` is the solution;
    the limit ``eta_k = 1``, ``tau_k^2 = 0`` is returned instead of dividing.
    """
    if not tau_prev_sq > 0:
        raise ValueError(f"tau_prev_sq must be positive, got {tau_prev_sq}")
    rho_sq = dot(r_k, r_k)
    if rho_sq == 0:
        return r_k.copy(), 1.0, 0.0
    total = tau_prev_sq + rho_sq
    # both forms are bounded by their leading factor after rounding
    tau_sq = min(tau_prev_sq * (rho_sq / total), rho_sq * (tau_prev_sq / total))
    eta = tau_sq / rho_sq
    return s_prev + eta * (r_k - s_prev), eta, tau_sq


def _smoothing_source(history):
    ks = history.stored_range("r")
    if ks != list(range(history.iterations + 1)):
        raise ValueError(f"{history.method}: smoothing needs r_k stored for every k (use store='full')")
    return ks


def apply_mrs(history: SolverHistory) -> SolverHistory:
    """Run MRS over a recorded history (needs every ``x_k`` and ``r_k``).

    When shadow residuals are present the shadow sequence is smoothed with
    the same weights, so ``st``, ``u`` and ``ut`` are available for
    comparison with the two-sided transformation.
    """
    ks = _smoothing_source(history)
    shadow = history.stored_range("rt") == ks
    cfg = SolverConfig(history.config.tol, history.config.max_iter, history.config.breakdown_eps, "full")
    out = SolverHistory(f"mrs[{history.method}]", cfg, history.r0_norm, [history.r0_norm])
    out.eta.append(math.nan)
    y, s = history.vector("x", 0), history.vector("r", 0)
    st = history.vector("rt", 0) if shadow else None
    out.record(0, y=y, s=s, **({"st": st} if shadow else {}))
    for k in ks[1:]:
        r = history.vector("r", k)
        u = r - s
        y, s, eta = mrs_step(y, s, history.vector("x", k), r)
        out.eta.append(eta)
        out.residual_norms.append(norm(s))
        out.record(k, y=y, s=s, u=u)
        if shadow:
            ut = history.vector("rt", k) - st
            st = st + eta * ut
            out.record(k, st=st, ut=ut)
    out.x = y
    out.finish(history.status, history.breakdown)
    return out


def apply_qmrs(history: SolverHistory) -> SolverHistory:
    """Run QMRS over a recorded history; ``extra['tau_sq']`` holds ``tau_k^2``."""
    ks = _smoothing_source(history)
    cfg = SolverConfig(history.config.tol, history.config.max_iter, history.config.breakdown_eps, "full")
    out = SolverHistory(f"qmrs[{history.method}]", cfg, history.r0_norm, [history.r0_norm])
    s = history.vector("r", 0)
    tau_sq = dot(s, s)
    out.eta.append(math.nan)
    out.extra["tau_sq"] = [tau_sq]
    out.record(0, s=s)
    for k in ks[1:]:
        if tau_sq == 0:
            break
        s, eta, tau_sq = qmrs_step(s, history.vector("r", k), tau_sq)
        out.eta.append(eta)
        out.extra["tau_sq"].append(tau_sq)
        out.residual_norms.append(norm(s))
        out.record(k, s=s)
    out.finish(history.status, history.breakdown)
    return out


class EtaVariants(NamedTuple):
    """Three algebraically equal forms of ``eta_k``; ``nan`` where flagged."""

    definition: float
    rewritten: float
    alternative: float
    flagged: tuple[str, ...] = ()

    def max_relative_spread(self):
        vals = [v for v in self[:3] if not math.isnan(v)]
        if len(vals) < 2:
            return math.nan
        ref = max(abs(v) for v in vals)
        return (max(vals) - min(vals)) / ref if ref > 0 else 0.0


def compute_eta_variants(state: SmoothedState, eps: float = 0.0) -> EtaVariants:
    """Evaluate ``eta_k`` by its defining two-sided formula and two rewritings.

    * definition: ``-[(st_{k-1}, u_k) + (s_{k-1}, ut_k)] / (2 (ut_k, u_k))``
    * rewritten:  ``(s_{k-1}, st_{k-1}) / (u_k, ut_k)``
    * alternative: ``-(s_{k-1}, A^T pt_{k-1}) / (u_k, A^T pt_{k-1})``

    A variant whose denominator is within ``eps`` (relative to the norms
    involved) of zero comes back as ``nan`` and is named in ``flagged``.
    """
    s, st, u, ut, w = state.s_prev, state.st_prev, state.u, state.ut, state.atpt_prev
    def vanishes(d, scale):
        return d == 0 or (eps > 0 and abs(d) <= eps * scale)

    flagged = []
    uu = dot(ut, u)
    if vanishes(uu, norm(u) * norm(ut)):
        flagged += ["definition", "rewritten"]
        eta_def = eta_rew = math.nan
    else:
        eta_def = -(dot(st, u) + dot(s, ut)) / (2.0 * uu)
        eta_rew = dot(s, st) / dot(u, ut)
    uw = dot(u, w)
    if vanishes(uw, norm(u) * norm(w)):
        flagged.append("alternative")
        eta_alt = math.nan
    else:
        eta_alt = -dot(s, w) / uw
    return EtaVariants(eta_def, eta_rew, eta_alt, tuple(flagged))
