"""Sweep configuration: one JSON document, validated up front."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .circle_map import PsiSpec
from .errors import ConfigError

METHODS = ("monte_carlo", "quadrature")
EPS_KINDS = ("constant", "power", "schedule", "threshold")


@dataclass(frozen=True)
class EpsRule:
    """eps(L): constant v, power c L^(beta - 1), schedule L^(-1/2), or
    threshold max(factor * b_2(L)/2, floor/L)."""

    kind: str = "constant"
    value: float = 0.5
    c: float = 1.0
    beta: float = 0.5
    factor: float = 1.01
    floor: float = 0.0

    def __call__(self, L: float, psi: PsiSpec) -> float:
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "power":
            return float(self.c * L ** (self.beta - 1.0))
        if self.kind == "schedule":
            return float(L**-0.5)
        if self.kind == "threshold":
            from .atlas import ergodicity_thresholds

            return float(max(self.factor * ergodicity_thresholds(psi, L)[1], self.floor / L))
        raise ValueError(f"unknown eps rule {self.kind!r}")

    @classmethod
    def from_dict(cls, d) -> "EpsRule":
        if isinstance(d, (int, float)):
            return cls("constant", value=float(d))
        return cls(**d)


@dataclass(frozen=True)
class EstimatorSettings:
    methods: tuple = METHODS
    n_steps: int = 1_000_000
    burn_in: int = 10_000
    n_replicas: int = 16
    n_cells: int = 2048
    quad_order: int = 8
    tol: float = 1e-10
    max_iter: int = 100_000
    cover_arc_length: float = 1e-3
    cover_max_steps: int = 100
    cover: bool = False
    jensen: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorSettings":
        d = dict(d)
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        return cls(**d)


@dataclass(frozen=True)
class ASampling:
    """a-values per L: a uniform grid of ``count`` points, an explicit list,
    or ``count`` draws from the scheduled window A_L."""

    kind: str = "grid"
    count: int = 64
    values: tuple = ()

    def __len__(self):
        return len(self.values) if self.kind == "list" else self.count

    @classmethod
    def from_raw(cls, raw) -> "ASampling":
        if isinstance(raw, int) and not isinstance(raw, bool):
            return cls("grid", count=raw)
        if isinstance(raw, (list, tuple)):
            return cls("list", count=len(raw), values=tuple(float(x) for x in raw))
        if isinstance(raw, dict):
            return cls(raw.get("kind", "grid"), int(raw.get("count", 0)), tuple(raw.get("values", ())))
        raise ValueError(f"cannot parse a_grid {raw!r}")

    def to_raw(self):
        if self.kind == "list":
            return list(self.values)
        if self.kind == "grid":
            return self.count
        return {"kind": self.kind, "count": self.count}


@dataclass(frozen=True)
class SweepConfig:
    psi: PsiSpec = field(default_factory=PsiSpec.default)
    a_grid: ASampling = field(default_factory=ASampling)
    L_grid: tuple = (10.0,)
    eps_rule: EpsRule = field(default_factory=EpsRule)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    # explicit (a, L, eps) triples; when given they replace the a x L product
    cells: tuple = ()
    master_seed: int = 0
    output_dir: str = "out"
    workers: int = 1
    density_profiles: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError([f"unknown config key(s): {sorted(unknown)}"])
        kw = {}
        try:
            if "psi" in d:
                kw["psi"] = PsiSpec.from_dict(d["psi"])
            if "a_grid" in d:
                kw["a_grid"] = ASampling.from_raw(d["a_grid"])
            if "L_grid" in d:
                kw["L_grid"] = tuple(float(x) for x in d["L_grid"])
            if "eps_rule" in d:
                kw["eps_rule"] = EpsRule.from_dict(d["eps_rule"])
            if "estimator" in d:
                kw["estimator"] = EstimatorSettings.from_dict(d["estimator"])
            if "cells" in d:
                kw["cells"] = tuple((float(c["a"]), float(c["L"]), float(c["eps"])) for c in d["cells"])
            for k in ("master_seed", "workers"):
                if k in d:
                    kw[k] = int(d[k])
            if "output_dir" in d:
                kw["output_dir"] = str(d["output_dir"])
            if "density_profiles" in d:
                kw["density_profiles"] = bool(d["density_profiles"])
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError([f"malformed config: {exc}"]) from exc
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "psi": self.psi.to_dict(),
            "a_grid": self.a_grid.to_raw(),
            "L_grid": list(self.L_grid),
            "eps_rule": asdict(self.eps_rule),
            "estimator": {**asdict(self.estimator), "methods": list(self.estimator.methods)},
            "cells": [{"a": a, "L": L, "eps": e} for a, L, e in self.cells],
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "workers": self.workers,
            "density_profiles": self.density_profiles,
        }

    def with_overrides(self, **kw) -> "SweepConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def override(self, assignments) -> "SweepConfig":
        """Apply ``KEY=VALUE`` strings to top-level scalar fields."""
        kw = {}
        for item in assignments or ():
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
            if key in ("master_seed", "workers"):
                kw[key] = int(val)
            elif key == "output_dir":
                kw[key] = val
            elif key == "density_profiles":
                kw[key] = val.lower() in ("1", "true", "yes")
            else:
                raise ConfigError([f"--set supports top-level scalars only, not {key!r}"])
        return replace(self, **kw)

    def eps_for(self, L: float) -> float:
        return self.eps_rule(L, self.psi)


@dataclass(frozen=True)
class Validation:
    errors: tuple
    warnings: tuple

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_config(cfg: SweepConfig) -> Validation:
    from .atlas import SCHEDULE_L_RANGE, ergodicity_thresholds

    errors, warnings = [], []
    est = cfg.estimator
    if cfg.workers < 1:
        errors.append("workers must be >= 1")
    bad = set(est.methods) - set(METHODS)
    if bad or not est.methods:
        errors.append(f"methods must be a nonempty subset of {METHODS}")
    if est.n_steps < 10 * est.burn_in:
        errors.append("n_steps must be >= 10 * burn_in")
    if est.n_replicas < 1:
        errors.append("n_replicas must be >= 1")
    if est.n_cells < 2:
        errors.append("n_cells must be >= 2")
    if est.quad_order < 1:
        errors.append("quad_order must be >= 1")
    if not est.tol > 0:
        errors.append("tol must be positive")
    if cfg.eps_rule.kind not in EPS_KINDS:
        errors.append(f"eps_rule kind must be one of {EPS_KINDS}")

    triples = list(cfg.cells)
    if not triples:
        if cfg.a_grid.kind not in ("grid", "list", "atlas"):
            errors.append(f"unknown a_grid kind {cfg.a_grid.kind!r}")
        if len(cfg.a_grid) < 1:
            errors.append("a_grid is empty")
        if not cfg.L_grid:
            errors.append("L_grid is empty")
        if cfg.a_grid.kind == "atlas":
            lo, hi = SCHEDULE_L_RANGE
            for L in cfg.L_grid:
                if not lo <= L <= hi:
                    errors.append(f"atlas sampling needs L in [{lo:g}, {hi:g}], got {L:g}")
        if cfg.eps_rule.kind not in EPS_KINDS:
            return Validation(tuple(errors), tuple(warnings))
        for L in cfg.L_grid:
            if not L > 0:
                errors.append(f"L must be positive, got {L}")
                continue
            try:
                eps = cfg.eps_for(L)
            except (ValueError, ArithmeticError) as exc:
                errors.append(f"eps_rule failed at L={L:g}: {exc}")
                continue
            triples.append((0.0, L, eps))
    for _, L, eps in triples:
        if not L > 0:
            errors.append(f"L must be positive, got {L}")
            continue
        if not (0.0 < eps <= 0.5) or math.isnan(eps):
            errors.append(f"eps = {eps!r} at L={L:g} is outside (0, 1/2]")
            continue
        thr = ergodicity_thresholds(cfg.psi, L)[1]
        if eps <= thr:
            warnings.append(f"eps = {eps:.4g} at L={L:g} is below b_2/2 = {thr:.4g}: "
                            "the stationary measure may not be unique")
        if "quadrature" in est.methods and eps < 0.5 and eps * est.n_cells < 4:
            warnings.append(f"eps*n_cells = {eps * est.n_cells:.3g} < 4 at L={L:g}: quadrature cells will fail")
    return Validation(tuple(errors), tuple(warnings))
