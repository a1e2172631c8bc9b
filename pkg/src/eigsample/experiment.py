"""Seeded multi-trial experiments with query, error and runtime accounting.

A run produces CSV text: one row per trial and then a summary row.  Trial
``t`` uses seed ``derive_seed(base_seed, t)``, so the same config always
produces the same bytes.  The runtime column stays empty unless timing is
requested, because wall-clock time would break that guarantee.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import check_assumption, embedding_sample_size
from .eigvec import top_eigenvector
from .errors import ConfigError, DegenerateSampleError
from .generators import KINDS, generate
from .hadamard import sketch_spectrum
from .matrix import EstimatorConfig, SymmetricMatrixOracle, derive_seed, exact_spectrum, load_matrix, spectrum_error
from .rownorm import estimate_spectrum_rownorm
from .uniform import draw_uniform, estimate_spectrum_uniform

METHODS = ("uniform", "rownorm", "sketch", "eigvec", "check")
MODES = ("exact_norms", "jl_norms")
REFERENCE_CAP = 4096

COLUMNS = (
    "experiment_id", "method", "kind", "n", "epsilon", "s_effective", "trial", "seed",
    "entry_queries", "rownorm_queries", "max_abs_error", "normalized_error", "success", "runtime_ms",
)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "sign_symmetric"
    n: int = 256
    params: dict = field(default_factory=dict)
    matrix_seed: int = 0
    matrix_path: Optional[str] = None
    backend: str = "implicit"
    method: str = "uniform"
    epsilon: float = 0.25
    delta: float = 0.5
    trials: int = 1
    base_seed: int = 0
    s: Optional[int] = None
    c_sample: float = 40.0
    c_log: float = 1.0
    c_col: float = 10.0
    c_flat: float = 8.0
    c_rownorm: float = 0.01
    level: float = 0.25
    mode: str = "jl_norms"
    reference_cap: int = REFERENCE_CAP
    workers: int = 1
    timing: bool = False
    experiment_id: Optional[str] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.matrix_path is None and self.kind not in KINDS:
            raise ConfigError(f"unknown matrix kind {self.kind!r}", field="kind")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}", field="method")
        if self.mode not in MODES:
            raise ConfigError(f"unknown norm mode {self.mode!r}", field="mode")
        if self.backend not in ("implicit", "dense"):
            raise ConfigError(f"unknown backend {self.backend!r}", field="backend")
        if int(self.n) < 1:
            raise ConfigError("n must be positive", field="n")
        if int(self.trials) < 0:
            raise ConfigError("trials must be non-negative", field="trials")
        if int(self.workers) < 1:
            raise ConfigError("workers must be positive", field="workers")
        if not 0.0 < self.level:
            raise ConfigError("level must be positive", field="level")
        if self.c_col <= 0 or self.c_flat <= 0:
            raise ConfigError("constants must be positive", field="c_col" if self.c_col <= 0 else "c_flat")
        self.estimator_config()

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            epsilon=self.epsilon, delta=self.delta, s_override=self.s, c_sample=self.c_sample,
            c_log=self.c_log, seed=int(self.base_seed) % 2**64, c_rownorm=self.c_rownorm,
        )

    @property
    def label(self) -> str:
        return self.experiment_id or f"{self.method}-{self.kind}-{self.n}"

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        """Build from string values (config file or CLI); unknown keys are rejected."""
        known = {f.name: f for f in fields(cls)}
        kwargs, params = {}, {}
        for key, raw in values.items():
            if key.startswith("param."):
                params[key[6:]] = _parse_scalar(raw)
                continue
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}", field=key)
            kwargs[key] = _coerce(key, raw)
        if params:
            kwargs["params"] = {**kwargs.get("params", {}), **params}
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_mapping(parse_config_text(Path(path).read_text()))


_INT_KEYS = {"n", "matrix_seed", "trials", "base_seed", "s", "reference_cap", "workers"}
_FLOAT_KEYS = {"epsilon", "delta", "c_sample", "c_log", "c_col", "c_flat", "c_rownorm", "level"}


def _parse_scalar(raw):
    if not isinstance(raw, str):
        return raw
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    return raw


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    try:
        if key in _INT_KEYS:
            return None if raw.lower() in ("", "none") else int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {key}={raw!r}", field=key) from None
    if key == "timing":
        return raw.lower() in ("1", "true", "yes", "on")
    if key == "params":
        return dict(_parse_pair(p) for p in raw.split(",") if p.strip())
    return raw


def _parse_pair(text: str):
    if "=" not in text:
        raise ConfigError(f"expected key=value, got {text!r}", field="params")
    k, v = text.split("=", 1)
    return k.strip(), _parse_scalar(v.strip())


def parse_config_text(text: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value", field=f"line {lineno}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# --- trials -----------------------------------------------------------------


def build_oracle(cfg: ExperimentConfig) -> SymmetricMatrixOracle:
    if cfg.matrix_path is not None:
        return load_matrix(cfg.matrix_path)
    return generate(cfg.kind, cfg.n, cfg.params, cfg.matrix_seed, cfg.backend)


def _reference(cfg: ExperimentConfig):
    """Exact spectrum when affordable, else None."""
    oracle = build_oracle(cfg)
    if oracle.n > cfg.reference_cap:
        return None
    return exact_spectrum(oracle).values


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def run_trial(cfg: ExperimentConfig, t: int, ref) -> dict:
    seed = derive_seed(cfg.base_seed, t)
    rng = np.random.default_rng(seed)
    oracle = build_oracle(cfg)
    ecfg = replace(cfg.estimator_config(), seed=seed)
    n = oracle.n
    eps = cfg.epsilon
    start = time.perf_counter()
    s_eff = err = norm_err = success = None

    if cfg.method in ("uniform", "rownorm", "sketch"):
        if cfg.method == "uniform":
            est = estimate_spectrum_uniform(oracle, ecfg, rng)
            scale = float(n)
        elif cfg.method == "rownorm":
            est = estimate_spectrum_rownorm(oracle, ecfg.rownorm_sample_size(n), eps, cfg.c_log, rng)
            scale = oracle.frobenius_norm()
        else:
            est = sketch_spectrum(oracle, eps, ecfg, rng, cfg.mode)
            scale = oracle.frobenius_norm()
        s_eff = est.sample_size
        if ref is not None:
            err = spectrum_error(est.values, ref)
            norm_err = err / scale if scale > 0 else 0.0
            success = norm_err <= eps
    elif cfg.method == "eigvec":
        lam1 = float(ref[0]) if ref is not None else oracle.top_eigenvalue
        try:
            res = top_eigenvector(oracle, eps, cfg.c_col, rng)
            s_eff = len(res.sample)
            if lam1 is not None:
                err = lam1 - res.rq
                norm_err = err / n
                success = norm_err <= eps
        except DegenerateSampleError:
            s_eff, success = 0, False
    else:
        a = oracle.materialize()
        s = cfg.s if cfg.s is not None else embedding_sample_size(eps, cfg.delta)
        draw = draw_uniform(n, s, rng)
        report = check_assumption(draw, a, cfg.level * n)
        s_eff = len(draw)
        err = max(report.distortions, default=0.0)
        norm_err = report.measured_constants["worst_ratio"]
        success = report.passed

    elapsed = (time.perf_counter() - start) * 1e3 if cfg.timing else None
    entry_q, row_q = oracle.ledger.snapshot()
    return {
        "experiment_id": cfg.label, "method": cfg.method, "kind": cfg.kind if cfg.matrix_path is None else Path(cfg.matrix_path).name,
        "n": n, "epsilon": eps, "s_effective": s_eff, "trial": t, "seed": seed,
        "entry_queries": entry_q, "rownorm_queries": row_q, "max_abs_error": err,
        "normalized_error": norm_err, "success": success, "runtime_ms": elapsed,
    }


def _run_trial_star(args):
    return run_trial(*args)


def _median(rows, key):
    vals = [float(r[key]) for r in rows if r[key] is not None]
    return float(np.median(vals)) if vals else None


def summarize(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    judged = [r["success"] for r in rows if r["success"] is not None]
    return {
        "experiment_id": cfg.label, "method": cfg.method, "kind": rows[0]["kind"], "n": rows[0]["n"],
        "epsilon": cfg.epsilon, "s_effective": _median(rows, "s_effective"), "trial": "summary", "seed": None,
        "entry_queries": _median(rows, "entry_queries"), "rownorm_queries": _median(rows, "rownorm_queries"),
        "max_abs_error": _median(rows, "max_abs_error"), "normalized_error": _median(rows, "normalized_error"),
        "success": (sum(bool(j) for j in judged) / len(judged)) if judged else None,
        "runtime_ms": _median(rows, "runtime_ms"),
    }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    summary: Optional[dict]

    @property
    def success_fraction(self) -> Optional[float]:
        return None if self.summary is None else self.summary["success"]

    def csv_lines(self, header: bool = True) -> list[str]:
        lines = [",".join(COLUMNS)] if header else []
        body = self.rows + ([self.summary] if self.summary else [])
        for r in body:
            lines.append(",".join(r[c] if isinstance(r[c], str) else _fmt(r[c]) for c in COLUMNS))
        return lines

    def to_csv(self) -> str:
        return "\n".join(self.csv_lines()) + "\n"


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run all trials; rows come back ordered by trial index."""
    if cfg.trials == 0:
        result = ExperimentResult(cfg, [], None)
    else:
        ref = _reference(cfg) if cfg.method != "check" else None
        jobs = [(cfg, t, ref) for t in range(cfg.trials)]
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                rows = list(pool.map(_run_trial_star, jobs))
        else:
            rows = [run_trial(*job) for job in jobs]
        result = ExperimentResult(cfg, rows, summarize(cfg, rows))
    if cfg.out:
        write_csv(cfg.out, result.to_csv())
    return result


def run_sweep(cfg: ExperimentConfig, eps_list, s_list=None) -> list[ExperimentResult]:
    """One experiment per ``(epsilon, s)`` pair, in list order."""
    s_values = list(s_list) if s_list else [cfg.s]
    results = []
    for eps in eps_list:
        for s in s_values:
            sub = replace(cfg, epsilon=float(eps), s=s, out=None, experiment_id=f"{cfg.label}-eps{eps}-s{s}")
            results.append(run_experiment(sub))
    if cfg.out:
        write_csv(cfg.out, sweep_csv(results))
    return results


def sweep_csv(results: list[ExperimentResult]) -> str:
    lines = [",".join(COLUMNS)]
    for r in results:
        lines.extend(r.csv_lines(header=False))
    return "\n".join(lines) + "\n"


def write_csv(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
