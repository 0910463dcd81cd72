"""Gap-ratio hypothesis testing.

The pivotal statistic is ``(l1 - l2) / (l2 - l3)`` built from the top three
sample-covariance eigenvalues. Its null distribution depends on no population
parameters, so a single table simulated from a Gaussian ensemble calibrates
both testing problems:

* signal detection in correlated noise (additive rank-k perturbation), and
* one-sided identity of a separable covariance (multiplicative temporal
  factor).

Alternative generators follow the simulation study's two settings: setting I
pairs the single-spike diagonal population with strength ``rho_a = tau /
sqrt(d_n)`` (or ``rho_b = tau * sqrt(d_n)`` for the separable families);
setting II uses the half-ones/half-twos population and doubles the strength.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from ._parallel import map_indexed
from .ensembles import (
    BuiltSigma,
    SampleDraw,
    Seed,
    SigmaModel,
    _as_built,
    _entries_rng,
    build_sigma,
    draw_goe_top3,
    factor_top_eigs,
)
from .errors import ConfigError, DegenerateSpectrum, InvalidModel

__all__ = [
    "NullTable",
    "AlternativeSpec",
    "TestResult",
    "onatski_statistic",
    "build_null_table",
    "critical_value",
    "generate_alt_sample",
    "run_test",
    "size_power_experiment",
    "save_null_table",
    "load_null_table",
    "load_or_build_null_table",
    "ALT_FAMILIES",
    "SETTINGS",
]

ALT_FAMILIES = ("H1_a", "H1_b_spike_e1", "H1_b_rank1_ones")
SETTINGS = ("I", "II")

# Per-setting population model and entry law used by the size/power study.
_SETTING_SIGMA = {"I": "dr_spiked_diag", "II": "dc_diag"}
_SETTING_DIST = "discrete_u_real"


def onatski_statistic(l1: float, l2: float, l3: float) -> float:
    """(l1 - l2) / (l2 - l3) for descending eigenvalues.

    Conventions for ties: all three equal raises
    :class:`DegenerateSpectrum`; l2 == l3 < l1 returns +inf (the test will
    reject); l1 == l2 > l3 returns 0.
    """
    if not (l1 >= l2 >= l3):
        raise ValueError(f"eigenvalues must be descending, got {(l1, l2, l3)}")
    if l1 == l3:
        raise DegenerateSpectrum("top three eigenvalues coincide")
    if l2 == l3:
        return math.inf
    return (l1 - l2) / (l2 - l3)


@dataclass(frozen=True)
class NullTable:
    """Sorted simulated null ratios plus build provenance."""

    beta: int
    sorted_ratios: np.ndarray
    meta: tuple[int, int, int]  # (ensemble dim, replicate count, seed)

    def __post_init__(self) -> None:
        r = np.asarray(self.sorted_ratios, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise ValueError("null table needs a 1-d ratio array")
        if np.any(np.diff(r) < 0):
            raise ValueError("ratios must be sorted ascending")
        if r[0] < 0:
            raise ValueError("gap ratios cannot be negative")
        object.__setattr__(self, "sorted_ratios", r)


def build_null_table(beta: int, dim: int, reps: int, seed: int,
                     threads: int = 1) -> NullTable:
    """Simulate the null gap-ratio table from a Gaussian ensemble.

    Replicate i uses the derived seed (seed, i), so the table is identical
    regardless of scheduling.
    """
    if dim < 50:
        raise ValueError("dim must be >= 50")
    if reps < 500:
        raise ValueError("reps must be >= 500")

    def one(i: int) -> float:
        l1, l2, l3 = draw_goe_top3(dim, (seed, i), beta=beta)
        return onatski_statistic(l1, l2, l3)

    ratios = np.array(map_indexed(one, reps, threads))
    ratios.sort()
    return NullTable(beta=beta, sorted_ratios=ratios, meta=(dim, reps, seed))


def critical_value(table: NullTable, level: float) -> float:
    """Empirical (1 - level)-quantile with type-7 (linear) interpolation."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    return float(np.quantile(table.sorted_ratios, 1.0 - level, method="linear"))


@dataclass(frozen=True)
class AlternativeSpec:
    """One alternative hypothesis of the size/power study.

    The effective strength depends on the dimensional ratio: for the additive
    signal family ``rho = f * tau / sqrt(d_n)`` and for the separable
    families ``rho = f * tau * sqrt(d_n)``, where f is 1 under setting I and
    2 under setting II.
    """

    family: str
    tau: float
    setting: str = "I"

    def __post_init__(self) -> None:
        if self.family not in ALT_FAMILIES:
            raise InvalidModel(f"unknown alternative family {self.family!r}")
        if self.setting not in SETTINGS:
            raise InvalidModel(f"unknown setting {self.setting!r}")
        if self.tau < 0:
            raise InvalidModel("tau must be nonnegative")

    def rho(self, d_n: float) -> float:
        factor = 1.0 if self.setting == "I" else 2.0
        if self.family == "H1_a":
            return factor * self.tau / math.sqrt(d_n)
        return factor * self.tau * math.sqrt(d_n)


def generate_alt_sample(alt: AlternativeSpec, sigma: BuiltSigma | np.ndarray,
                        dist: str, m: int, n: int, seed: Seed,
                        k: int = 3) -> SampleDraw:
    """Draw top-k sample covariance eigenvalues under an alternative.

    With tau = 0 every family reduces bit-for-bit to the null draw at the
    same seed. The separable square roots are applied as closed-form rank-1
    updates, never dense matrix square roots.
    """
    built = _as_built(sigma, m)
    rng = np.random.default_rng(seed)
    x = _entries_rng(dist, m, n, rng)
    if built.sqrt_diag is not None:
        b = built.sqrt_diag[:, None] * x
    else:
        b = built.sqrt_matrix @ x
    rho = alt.rho(n / m)
    if alt.family == "H1_a":
        # additive signal along e1: columns y_i = e1 s_i + Sigma^{1/2} z_i
        s = rng.standard_normal(n)
        b[0, :] = b[0, :] + math.sqrt(rho / n) * s
    elif alt.family == "H1_b_spike_e1":
        # temporal factor T = I + rho e1 e1'; sqrt scales one column
        b[:, 0] = b[:, 0] * math.sqrt(1.0 + rho)
    else:  # H1_b_rank1_ones: T = I + rho (1/N) 1 1'
        gamma = math.sqrt(1.0 + rho) - 1.0
        b = b + gamma * np.multiply.outer(b.sum(axis=1), np.full(n, 1.0 / n))
    vals, _ = factor_top_eigs(b, k, False)
    return SampleDraw(top_eigenvalues=vals, top_eigenvector=None,
                      m_dim=m, n_dim=n, seed=seed)


@dataclass(frozen=True)
class TestResult:
    """Outcome of one gap-ratio test."""

    statistic: float
    critical_value: float
    level: float
    reject: bool
    null_meta: tuple

    def __post_init__(self) -> None:
        if self.reject != (self.statistic > self.critical_value):
            raise ValueError("reject flag inconsistent with statistic")


def run_test(data: np.ndarray, table: NullTable, level: float = 0.05) -> TestResult:
    """Test an ingested M-by-N data matrix against the simulated null.

    The statistic is computed from the top three eigenvalues of the sample
    covariance ``(1/N) Y Y*``; it is invariant under rescaling the data.
    """
    y = np.asarray(data, dtype=float)
    if y.ndim != 2 or min(y.shape) < 3:
        raise ValueError("data must be an M-by-N matrix with M, N >= 3")
    n = y.shape[1]
    vals, _ = factor_top_eigs(y / math.sqrt(n), 3, False)
    stat = onatski_statistic(vals[0], vals[1], vals[2])
    cv = critical_value(table, level)
    return TestResult(statistic=stat, critical_value=cv, level=level,
                      reject=bool(stat > cv),
                      null_meta=(table.beta,) + table.meta)


def size_power_experiment(setting: str, alt: AlternativeSpec | None,
                          shapes: list[tuple[int, int]], reps: int, seed: int,
                          *, null_table: NullTable | None = None,
                          level: float = 0.05, beta: int = 1,
                          threads: int = 1) -> list[dict]:
    """Rejection-rate table for one (setting, alternative-or-null) cell.

    Returns one row dict per shape with keys setting, alternative, tau, M, N,
    rejection_rate, two_se (twice the binomial standard error). Replicates
    use derived seeds (seed, shape index, replicate index), so aggregation is
    order independent.
    """
    if setting not in SETTINGS:
        raise InvalidModel(f"unknown setting {setting!r}")
    if reps < 100:
        raise ValueError("reps must be >= 100")
    if alt is not None and alt.setting != setting:
        raise InvalidModel("alternative's setting disagrees with the experiment setting")
    table = null_table if null_table is not None else build_null_table(
        beta, 400, 5000, seed, threads=threads)
    cv = critical_value(table, level)
    model = SigmaModel(_SETTING_SIGMA[setting])
    rows = []
    for si, (m, n) in enumerate(shapes):
        d_n = n / m
        built = build_sigma(model, m, d_n)

        def one(i: int, _m=m, _n=n, _built=built, _si=si) -> float:
            s = (seed, _si, i)
            if alt is None:
                draw_vals = _null_top3(_built, _m, _n, s)
            else:
                draw_vals = generate_alt_sample(alt, _built, _SETTING_DIST,
                                                _m, _n, s).top_eigenvalues
            return onatski_statistic(draw_vals[0], draw_vals[1], draw_vals[2])

        stats = np.array(map_indexed(one, reps, threads))
        rate = float(np.mean(stats > cv))
        rows.append({
            "setting": setting,
            "alternative": "null" if alt is None else alt.family,
            "tau": 0.0 if alt is None else alt.tau,
            "M": m,
            "N": n,
            "rejection_rate": rate,
            "two_se": 2.0 * math.sqrt(rate * (1.0 - rate) / reps),
        })
    return rows


def _null_top3(built: BuiltSigma, m: int, n: int, seed: Seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = _entries_rng(_SETTING_DIST, m, n, rng)
    if built.sqrt_diag is not None:
        b = built.sqrt_diag[:, None] * x
    else:
        b = built.sqrt_matrix @ x
    vals, _ = factor_top_eigs(b, 3, False)
    return vals


# ---------------------------------------------------------------------------
# Null-table persistence: JSON header line, then one ratio per line
# ---------------------------------------------------------------------------

def save_null_table(path: str, table: NullTable) -> None:
    header = {"beta": table.beta, "dim": table.meta[0], "reps": table.meta[1],
              "seed": table.meta[2]}
    with open(path, "w", encoding="ascii") as fh:
        fh.write(json.dumps(header) + "\n")
        for r in table.sorted_ratios:
            fh.write(f"{r!r}\n")


def load_null_table(path: str) -> NullTable:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty null-table file")
    try:
        header = json.loads(lines[0])
        ratios = np.array([float(x) for x in lines[1:] if x.strip()])
        return NullTable(beta=int(header["beta"]), sorted_ratios=ratios,
                         meta=(int(header["dim"]), int(header["reps"]),
                               int(header["seed"])))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed null-table file: {exc}") from exc


def load_or_build_null_table(path: str, beta: int, dim: int, reps: int,
                             seed: int, threads: int = 1) -> NullTable:
    """Load a cached table, regenerating on any parameter mismatch."""
    if os.path.exists(path):
        try:
            table = load_null_table(path)
            if table.beta == beta and table.meta == (dim, reps, seed):
                return table
        except ConfigError:
            pass
    table = build_null_table(beta, dim, reps, seed, threads=threads)
    save_null_table(path, table)
    return table
