"""Experiment configuration and the runner behind ``bismooth solve``."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import verify
from .history import SolverConfig
from .io import emit_history_csv, read_matrix_market, read_vector
from .linalg import spd_random, toeplitz_test_matrix
from .solvers import (
    run_bicg,
    run_bicr,
    run_cg,
    run_cr,
    run_extended_cg,
    run_transform_concise,
    run_transform_original,
)

log = logging.getLogger(__name__)

SOLVERS = {
    "bicg": run_bicg,
    "bicr": run_bicr,
    "cg": run_cg,
    "cr": run_cr,
    "transform-orig": run_transform_original,
    "transform-concise": run_transform_concise,
    "extended-cg": run_extended_cg,
}
ONE_SIDED = {"cg", "cr"}

LEMMA1_TOL = 1e-12
LEMMA2_TOL = 1e-10
ETA_TOL = 1e-10


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    matrix: str = "builtin:toeplitz:200"
    rhs: str = "ones-solution"
    x0: str = "zero"
    shadow: str = "equal-r0"
    solvers: tuple[str, ...] = ("bicr", "transform-orig", "transform-concise")
    tol: float = 1e-12
    max_iter: int = 1000
    breakdown_eps: float = SolverConfig.breakdown_eps
    history: str = "norms"
    verify: bool = False
    verify_window: int = 15
    verify_tol: float = 1e-8
    out_dir: str = "out"

    def validate(self):
        if not 0 < self.tol < 1:
            raise ConfigError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.solvers:
            raise ConfigError("at least one solver must be selected")
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ConfigError(f"unknown solver(s) {unknown}; choose from {sorted(SOLVERS)}")
        if self.history not in ("norms", "window", "full"):
            raise ConfigError(f"history must be norms|window|full, got {self.history!r}")
        if self.verify_window < 1 or not self.verify_tol > 0:
            raise ConfigError("verify window must be >= 1 and tol > 0")
        if not self.breakdown_eps > 0:
            raise ConfigError("breakdown_eps must be positive")
        return self

    def solver_config(self, store=None):
        return SolverConfig(
            tol=self.tol,
            max_iter=self.max_iter,
            breakdown_eps=self.breakdown_eps,
            store=store or self.history,
            store_window=self.verify_window + 2,
        )


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def parse_solvers(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def parse_verify(text):
    """``off`` or ``window=15,tol=1e-8`` (either key optional)."""
    text = text.strip()
    if text.lower() in ("off", "no", "false", "0"):
        return {"verify": False}
    out = {"verify": True}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if part.lower() in ("on", "yes", "true", "1"):
            continue
        key, _, value = part.partition("=")
        key = key.strip()
        try:
            if key == "window":
                out["verify_window"] = int(value)
            elif key == "tol":
                out["verify_tol"] = float(value)
            else:
                raise ConfigError(f"unknown verify option {key!r}")
        except ValueError:
            raise ConfigError(f"bad verify option {part!r}") from None
    return out


def coerce(key, value):
    """Convert a raw string setting to the field's type."""
    if key == "solvers":
        return {"solvers": parse_solvers(value)}
    if key == "verify":
        return parse_verify(value)
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return {key: int(value)}
        if kind == "float":
            return {key: float(value)}
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    return {key: value.strip()}


def load_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    settings = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip().replace("-", "_")
        settings.update(coerce(key, value))
    return settings


def build_matrix(source):
    kind, _, rest = source.partition(":")
    try:
        if kind == "builtin":
            name, _, args = rest.partition(":")
            parts = args.split(":") if args else []
            if name == "toeplitz" and len(parts) == 1:
                return toeplitz_test_matrix(int(parts[0]))
            if name == "spd" and len(parts) == 2:
                return spd_random(int(parts[0]), int(parts[1]))
            raise ConfigError(f"unknown builtin matrix {source!r}; use builtin:toeplitz:N or builtin:spd:N:SEED")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad matrix source {source!r}: {exc}") from None
    path = Path(rest if kind == "file" else source)
    if not path.is_file():
        raise ConfigError(f"matrix file not found: {path}")
    A = read_matrix_market(path)
    if A.shape[0] != A.shape[1]:
        raise ConfigError(f"matrix {path} is {A.shape[0]}x{A.shape[1]}, must be square")
    return A


def _vector_rule(rule, n, what):
    kind, _, rest = rule.partition(":")
    if kind == "explicit":
        v = np.array([float(t) for t in rest.split(",") if t.strip()])
    elif kind == "file":
        if not Path(rest).is_file():
            raise ConfigError(f"{what} file not found: {rest}")
        v = read_vector(rest)
    else:
        return None
    if v.shape[0] != n:
        raise ConfigError(f"{what} has length {v.shape[0]}, matrix is {n}x{n}")
    return v


def build_system(cfg: ExperimentConfig):
    """Return ``(A, b, x0, rt0)`` for the configured experiment."""
    A = build_matrix(cfg.matrix)
    n = A.shape[0]
    if cfg.rhs == "ones-solution":
        b = A.apply(np.ones(n))
    else:
        b = _vector_rule(cfg.rhs, n, "rhs")
        if b is None:
            raise ConfigError(f"rhs must be ones-solution, file:PATH or explicit:v1,v2,...; got {cfg.rhs!r}")
    if cfg.x0 == "zero":
        x0 = np.zeros(n)
    else:
        x0 = _vector_rule(cfg.x0, n, "x0")
        if x0 is None:
            raise ConfigError(f"x0 must be zero or explicit:v1,v2,...; got {cfg.x0!r}")
    if cfg.shadow == "equal-b":
        rt0 = b.copy()
    elif cfg.shadow == "equal-r0":
        rt0 = b - A.apply(x0)
    else:
        rt0 = _vector_rule(cfg.shadow, n, "shadow")
        if rt0 is None:
            raise ConfigError(f"shadow must be equal-b, equal-r0 or explicit:...; got {cfg.shadow!r}")
    return A, b, x0, rt0


def run_solver(name, A, b, x0, rt0, solver_cfg):
    fn = SOLVERS[name]
    if name in ONE_SIDED:
        return fn(A, b, x0, solver_cfg)
    return fn(A, b, x0, rt0, solver_cfg)


def verification_reports(A, b, x0, rt0, cfg: ExperimentConfig):
    """Run the original transformation with vectors and evaluate every check."""
    h = run_transform_original(A, b, x0, rt0, cfg.solver_config(store="full"))
    reports = verify.full_report(h, A, cfg.verify_window, cfg.verify_tol)
    scalars = [
        ("lemma1_recursion_defect", verify.check_lemma1(h), LEMMA1_TOL),
        ("lemma2_s_ut", verify.check_lemma2(h), LEMMA2_TOL),
        ("eta_variant_spread", verify.check_eta_variants(h), ETA_TOL),
    ]
    return h, reports, scalars


def render_verification(reports, scalars, fmt="text"):
    if fmt == "text":
        lines = [r.line() for r in reports]
        lines += [
            f"{'PASS' if v <= tol else 'FAIL'} {name:<28} max={v:.3e} tol={tol:.1e}" for name, v, tol in scalars
        ]
    else:
        lines = [r.key_values() for r in reports]
        lines += [
            f"check={name} violation={v:.17g} tol={tol:.17g} pass={str(v <= tol).lower()}"
            for name, v, tol in scalars
        ]
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig, stdout=None) -> int:
    """Run every selected solver, write CSVs, summary and optional report.

    Solver breakdown is a result, not a failure: it shows up in the summary
    and the exit status stays 0. Configuration and IO problems raise
    :class:`ConfigError` (or ``OSError``) for the caller to turn into a
    nonzero exit.
    """
    cfg.validate()
    A, b, x0, rt0 = build_system(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    solver_cfg = cfg.solver_config()
    for name in cfg.solvers:
        h = run_solver(name, A, b, x0, rt0, solver_cfg)
        emit_history_csv(h, out / f"{name}.csv")
        line = h.summary().replace(f"solver={h.method}", f"solver={name}", 1)
        summary.append(line)
        log.info(line)
    if cfg.verify:
        _, reports, scalars = verification_reports(A, b, x0, rt0, cfg)
        (out / "verification.txt").write_text(render_verification(reports, scalars), encoding="utf-8")
        (out / "verification.kv").write_text(render_verification(reports, scalars, "kv"), encoding="utf-8")
        ok = all(r.passed for r in reports) and all(v <= tol for _, v, tol in scalars)
        summary.append(f"verification={'pass' if ok else 'fail'} checks={len(reports) + len(scalars)}")
    text = "\n".join(summary) + "\n"
    (out / "summary.txt").write_text(text, encoding="utf-8")
    if stdout is not None:
        stdout.write(text)
    return 0
