"""Experiment pipelines behind the CLI.

Each runner consumes a validated :class:`ExperimentConfig`, produces row
records, and can serialize them as CSV with fixed column orders and floats
printed to 6 significant digits. Identical configs produce byte-identical
CSV output; nothing time- or host-dependent is ever written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import map_indexed
from .config import ExperimentConfig
from .diagnostics import delocalization_scan, rigidity_scan, trace_identity_check
from .ensembles import (
    SigmaModel,
    build_sigma,
    draw_sample,
    load_matrix_file,
)
from .errors import ConfigError
from .onatski import (
    NullTable,
    build_null_table,
    critical_value,
    load_or_build_null_table,
    run_test,
    size_power_experiment,
)
from .spectral import edge_params, normalize_top_eigenvalue
from .tw import embedded_tw_table

__all__ = [
    "QuantileRow",
    "run_quantile_table",
    "run_size_power",
    "run_edge_params",
    "run_onatski_null",
    "run_test_file",
    "run_diagnostics",
    "rows_to_csv",
    "QUANTILE_COLUMNS",
    "SIZE_POWER_COLUMNS",
]

QUANTILE_COLUMNS = ("case", "M", "N", "tw_quantile", "nominal", "empirical", "two_se")
SIZE_POWER_COLUMNS = ("setting", "alternative", "tau", "M", "N",
                      "rejection_rate", "two_se")
EDGE_COLUMNS = ("sigma_model", "M", "N", "d_n", "c", "lambda_r", "sigma", "margin")

# Paper-style short labels for the four simulated (Sigma, X) pairs plus the
# heavy-tail complex case.
_CASE_LABELS = {
    ("dr_spiked_diag", "discrete_u_real"): "R1",
    ("dr_rotated", "discrete_u_real"): "R2",
    ("dc_diag", "discrete_u_complex"): "C1",
    ("dc_rotated", "discrete_u_complex"): "C2",
    ("dc_rotated", "pareto_complex"): "CP",
}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def rows_to_csv(columns: tuple[str, ...], rows: list[dict],
                comments: list[str] | None = None) -> str:
    lines = [f"# {c}" for c in (comments or [])]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def case_label(sigma_kind: str, entry_dist: str) -> str:
    return _CASE_LABELS.get((sigma_kind, entry_dist), f"{sigma_kind}:{entry_dist}")


@dataclass(frozen=True)
class QuantileRow:
    """One cell of the quantile-accuracy table."""

    case: str
    m: int
    n: int
    tw_quantile: float
    nominal_p: float
    empirical_p: float
    two_se: float

    def as_dict(self) -> dict:
        return {"case": self.case, "M": self.m, "N": self.n,
                "tw_quantile": self.tw_quantile, "nominal": self.nominal_p,
                "empirical": self.empirical_p, "two_se": self.two_se}


def run_quantile_table(config: ExperimentConfig, threads: int = 1) -> list[QuantileRow]:
    """Empirical CDF of the normalized top eigenvalue at the embedded
    Tracy-Widom quantiles, one row per (shape, quantile).

    Each (shape, replicate) uses an independent derived seed; cells do not
    share draws.
    """
    if config.experiment != "quantile_table":
        raise ConfigError("config is not a quantile_table experiment")
    assert config.sigma_model is not None and config.entry_dist is not None
    beta = config.effective_beta
    ref = embedded_tw_table(beta)
    label = case_label(config.sigma_model.kind, config.entry_dist)
    reps = config.replications
    rows: list[QuantileRow] = []
    for si, (m, n) in enumerate(config.shapes):
        d_n = n / m
        built = build_sigma(config.sigma_model, m, d_n)
        ep = edge_params(built.spectrum, d_n)

        def one(i: int, _built=built, _m=m, _n=n, _ep=ep, _si=si) -> float:
            lam1 = draw_sample(_built, config.entry_dist, _m, _n, 1,
                               (config.seed, _si, i)).top_eigenvalues[0]
            return normalize_top_eigenvalue(float(lam1), _ep, _n)

        stats = np.array(map_indexed(one, reps, threads))
        for x, p in ref.points:
            rows.append(QuantileRow(
                case=label, m=m, n=n, tw_quantile=x, nominal_p=p,
                empirical_p=float(np.mean(stats <= x)),
                two_se=2.0 * math.sqrt(p * (1.0 - p) / reps),
            ))
    return rows


def quantile_rows_csv(config: ExperimentConfig, rows: list[QuantileRow]) -> str:
    comments = [
        f"covedge quantile_table seed={config.seed} replications={config.replications}",
        f"sigma_model={config.sigma_model.kind} entry_dist={config.entry_dist} "
        f"beta={config.effective_beta}",
        "independent draws per (shape, replicate); cells share nothing",
    ]
    return rows_to_csv(QUANTILE_COLUMNS, [r.as_dict() for r in rows], comments)


def _resolve_null_table(config: ExperimentConfig, threads: int = 1) -> NullTable:
    spec = config.null_table
    beta = int(spec.get("beta", 1))
    dim = int(spec.get("dim", 400))
    reps = int(spec.get("reps", 5000))
    seed = int(spec.get("seed", config.seed))
    path = spec.get("path")
    if path:
        return load_or_build_null_table(path, beta, dim, reps, seed, threads=threads)
    return build_null_table(beta, dim, reps, seed, threads=threads)


def run_size_power(config: ExperimentConfig, threads: int = 1
                   ) -> tuple[list[dict], NullTable]:
    """Rejection-rate rows for one (setting, alternative-or-null) cell."""
    if config.experiment != "size_power":
        raise ConfigError("config is not a size_power experiment")
    assert config.setting is not None
    table = _resolve_null_table(config, threads)
    rows = size_power_experiment(
        config.setting, config.alt, list(config.shapes), config.replications,
        config.seed, null_table=table, level=config.level, threads=threads)
    return rows, table


def size_power_csv(config: ExperimentConfig, rows: list[dict],
                   table: NullTable) -> str:
    comments = [
        f"covedge size_power seed={config.seed} replications={config.replications} "
        f"level={_fmt(config.level)}",
        f"null table: beta={table.beta} dim={table.meta[0]} reps={table.meta[1]} "
        f"seed={table.meta[2]}",
    ]
    if any(row["N"] < row["M"] for row in rows):
        comments.append(
            "note: real-case cells with N < M lie outside the proven TW1 regime")
    return rows_to_csv(SIZE_POWER_COLUMNS, rows, comments)


def run_edge_params(config: ExperimentConfig) -> list[dict]:
    """Edge parameters (c, lambda_r, sigma, margin) per configured shape."""
    if config.experiment != "edge_params":
        raise ConfigError("config is not an edge_params experiment")
    assert config.sigma_model is not None
    rows = []
    for m, n in config.shapes:
        d_n = n / m
        built = build_sigma(config.sigma_model, m, d_n)
        ep = edge_params(built.spectrum, d_n)
        rows.append({
            "sigma_model": config.sigma_model.kind,
            "M": m, "N": n, "d_n": d_n,
            "c": ep.c, "lambda_r": ep.lambda_r, "sigma": ep.sigma,
            "margin": ep.regularity_margin,
            "_spectrum": built.spectrum,  # carried for the report figure
            "_edge": ep,
        })
    return rows


def edge_params_csv(config: ExperimentConfig, rows: list[dict]) -> str:
    comments = [f"covedge edge_params sigma_model={config.sigma_model.kind}"]
    public = [{k: v for k, v in row.items() if not k.startswith("_")} for row in rows]
    return rows_to_csv(EDGE_COLUMNS, public, comments)


def run_onatski_null(config: ExperimentConfig, threads: int = 1
                     ) -> tuple[NullTable, list[dict]]:
    """Build (or refresh) a null table and summarize its critical values."""
    if config.experiment != "onatski_null":
        raise ConfigError("config is not an onatski_null experiment")
    assert config.dim is not None
    beta = config.effective_beta
    path = config.null_table.get("path")
    if path:
        table = load_or_build_null_table(path, beta, config.dim,
                                         config.replications, config.seed,
                                         threads=threads)
    else:
        table = build_null_table(beta, config.dim, config.replications,
                                 config.seed, threads=threads)
    rows = [{"beta": beta, "dim": config.dim, "reps": config.replications,
             "seed": config.seed, "level": level,
             "critical_value": critical_value(table, level)}
            for level in (0.10, 0.05, 0.025, 0.01)]
    return table, rows


NULL_COLUMNS = ("beta", "dim", "reps", "seed", "level", "critical_value")


def run_test_file(config: ExperimentConfig, threads: int = 1) -> tuple[dict, NullTable]:
    """Ingest a matrix file and run the gap-ratio test against the null."""
    if config.experiment != "test_run":
        raise ConfigError("config is not a test_run experiment")
    assert config.matrix_file is not None
    data = load_matrix_file(config.matrix_file)
    table = _resolve_null_table(config, threads)
    result = run_test(data, table, config.level)
    row = {
        "matrix_file": config.matrix_file,
        "M": data.shape[0], "N": data.shape[1],
        "statistic": result.statistic,
        "critical_value": result.critical_value,
        "level": result.level,
        "reject": result.reject,
        "null_beta": table.beta, "null_dim": table.meta[0],
        "null_reps": table.meta[1], "null_seed": table.meta[2],
    }
    return row, table


TEST_COLUMNS = ("matrix_file", "M", "N", "statistic", "critical_value",
                "level", "reject", "null_beta", "null_dim", "null_reps",
                "null_seed")


def run_diagnostics(config: ExperimentConfig, threads: int = 1) -> dict:
    """Rigidity scan over the configured size ladder, the trace identity on a
    few seeded draws, and a delocalization scan at the largest feasible size."""
    if config.experiment != "diagnostics":
        raise ConfigError("config is not a diagnostics experiment")
    model = config.sigma_model or SigmaModel("identity")
    dist = config.entry_dist or "gauss_real"
    sizes = [n for _, n in config.shapes]
    d_n = config.shapes[0][1] / config.shapes[0][0]
    fit = rigidity_scan(model, dist, sizes, reps=config.replications,
                        seed=config.seed, d_n=d_n, threads=threads)
    trace_rows = []
    for i, (m, n) in enumerate(((50, 30), (120, 40), (60, 90))):
        z = complex(1.0 + 0.5 * i, 1.0)
        trace_rows.append({
            "m": m, "n": n, "z": z,
            "residual": trace_identity_check(m, n, z, (config.seed, i)),
        })
    deloc_m = min(200, max(50, min(fit.sizes)))
    deloc = delocalization_scan(model, dist, deloc_m, reps=50,
                                seed=config.seed, d_n=d_n)
    return {"rigidity": fit, "trace": trace_rows, "delocalization": deloc,
            "delocalization_m": deloc_m}


DIAG_COLUMNS = ("record", "key", "value")


def diagnostics_csv(config: ExperimentConfig, result: dict) -> str:
    fit = result["rigidity"]
    rows = []
    for n, spread, mean, lam_r in zip(fit.sizes, fit.spreads, fit.mean_top,
                                      fit.lambda_rs):
        rows.append({"record": "rigidity_spread", "key": f"N={n}", "value": spread})
        rows.append({"record": "rigidity_mean_top", "key": f"N={n}", "value": mean})
        rows.append({"record": "rigidity_lambda_r", "key": f"N={n}", "value": lam_r})
    rows.append({"record": "rigidity_slope", "key": "", "value": fit.slope})
    rows.append({"record": "rigidity_r2", "key": "", "value": fit.r2})
    for tr in result["trace"]:
        rows.append({"record": "trace_identity_residual",
                     "key": f"m={tr['m']} n={tr['n']} z={tr['z']}",
                     "value": tr["residual"]})
    deloc = result["delocalization"]
    rows.append({"record": "delocalization_max",
                 "key": f"m={result['delocalization_m']}",
                 "value": deloc.max_statistic})
    rows.append({"record": "delocalization_bound",
                 "key": f"m={result['delocalization_m']}",
                 "value": deloc.bound})
    rows.append({"record": "delocalization_passed",
                 "key": "bound_applies" if deloc.bound_applies else "informational",
                 "value": deloc.passed})
    comments = [f"covedge diagnostics seed={config.seed} "
                f"replications={config.replications}"]
    return rows_to_csv(DIAG_COLUMNS, rows, comments)
