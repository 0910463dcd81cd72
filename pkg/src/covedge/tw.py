"""Tracy-Widom reference distributions.

Two sources: the nine-point quantile tables embedded from the published
simulation study, and Monte-Carlo CDFs built from Gaussian-ensemble edge
samples rescaled as ``dim^{1/6} (lambda_1 - 2 sqrt(dim))``. No analytic
evaluation is attempted; everything downstream compares at tabulated points.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .ensembles import Seed, draw_goe_top3
from .errors import ConfigError

__all__ = [
    "TwReference",
    "TW1_TABLE",
    "TW2_TABLE",
    "embedded_tw_table",
    "mc_tw_reference",
    "tw_cdf",
    "save_tw_reference",
    "load_tw_reference",
    "load_or_build_mc_reference",
]

TW1_TABLE: tuple[tuple[float, float], ...] = (
    (-3.90, 0.01),
    (-3.18, 0.05),
    (-2.78, 0.10),
    (-1.91, 0.30),
    (-1.27, 0.50),
    (-0.59, 0.70),
    (0.45, 0.90),
    (0.98, 0.95),
    (2.02, 0.99),
)

TW2_TABLE: tuple[tuple[float, float], ...] = (
    (-3.73, 0.01),
    (-3.20, 0.05),
    (-2.90, 0.10),
    (-2.27, 0.30),
    (-1.81, 0.50),
    (-1.33, 0.70),
    (-0.60, 0.90),
    (-0.23, 0.95),
    (0.48, 0.99),
)


@dataclass(frozen=True)
class TwReference:
    """Quantile/CDF table for a Tracy-Widom law.

    ``points`` is strictly increasing in both coordinates; ``mc_meta`` is
    (ensemble dim, replicate count, seed) when the source is Monte Carlo.
    """

    beta: int
    points: tuple[tuple[float, float], ...]
    source: str
    mc_meta: tuple[int, int, int] | None = None

    def __post_init__(self) -> None:
        if self.beta not in (1, 2):
            raise ValueError("beta must be 1 or 2")
        if self.source not in ("embedded_table", "monte_carlo"):
            raise ValueError(f"unknown source {self.source!r}")
        xs = [x for x, _ in self.points]
        ps = [p for _, p in self.points]
        if len(xs) < 2:
            raise ValueError("reference needs at least two points")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("quantiles must be strictly increasing")
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError("probabilities must be strictly increasing")
        if ps[0] <= 0.0 or ps[-1] >= 1.0:
            raise ValueError("probabilities must lie strictly inside (0, 1)")


def embedded_tw_table(beta: int) -> TwReference:
    """The published nine-point quantile table for TW_beta."""
    if beta == 1:
        return TwReference(beta=1, points=TW1_TABLE, source="embedded_table")
    if beta == 2:
        return TwReference(beta=2, points=TW2_TABLE, source="embedded_table")
    raise ValueError("beta must be 1 or 2")


def edge_statistic(lambda1: float, dim: int) -> float:
    """Standard Gaussian-ensemble edge rescaling ``dim^{1/6}(l1 - 2 sqrt dim)``."""
    return dim ** (1.0 / 6.0) * (lambda1 - 2.0 * math.sqrt(dim))


def mc_tw_reference(beta: int, dim: int, reps: int, seed: int,
                    grid_size: int = 99) -> TwReference:
    """Empirical TW_beta CDF from rescaled G(O/U)E top eigenvalues.

    The output is the set of empirical quantiles on the fixed probability
    grid k/(grid_size+1), k = 1..grid_size.
    """
    if dim < 50:
        raise ValueError("dim must be >= 50")
    if reps < 100:
        raise ValueError("reps must be >= 100")
    samples = np.empty(reps)
    for i in range(reps):
        top = draw_goe_top3(dim, (seed, i), beta=beta)
        samples[i] = edge_statistic(top[0], dim)
    p_grid = np.arange(1, grid_size + 1) / (grid_size + 1)
    xs = np.quantile(samples, p_grid, method="linear")
    points = tuple((float(x), float(p)) for x, p in zip(xs, p_grid))
    return TwReference(beta=beta, points=points, source="monte_carlo",
                       mc_meta=(dim, reps, seed))


def tw_cdf(ref: TwReference, x: float) -> float:
    """CDF value at x: linear interpolation between tabulated points, with
    bounded monotone exponential tails fitted to the two extreme points."""
    xs = np.array([q for q, _ in ref.points])
    ps = np.array([p for _, p in ref.points])
    if x <= xs[0]:
        rate = (math.log(ps[1]) - math.log(ps[0])) / (xs[1] - xs[0])
        return float(ps[0] * math.exp(rate * (x - xs[0])))
    if x >= xs[-1]:
        q_last = 1.0 - ps[-1]
        q_prev = 1.0 - ps[-2]
        rate = (math.log(q_prev) - math.log(q_last)) / (xs[-1] - xs[-2])
        return float(1.0 - q_last * math.exp(-rate * (x - xs[-1])))
    return float(np.interp(x, xs, ps))


# ---------------------------------------------------------------------------
# Cache file: JSON header line, then one "x p" pair per line
# ---------------------------------------------------------------------------

def save_tw_reference(path: str, ref: TwReference) -> None:
    header = {"beta": ref.beta, "source": ref.source, "mc_meta": ref.mc_meta,
              "grid_size": len(ref.points)}
    with open(path, "w", encoding="ascii") as fh:
        fh.write(json.dumps(header) + "\n")
        for x, p in ref.points:
            fh.write(f"{x!r} {p!r}\n")


def load_tw_reference(path: str) -> TwReference:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty reference file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: bad header line") from exc
    points = []
    for line in lines[1:]:
        if not line.strip():
            continue
        x, p = line.split()
        points.append((float(x), float(p)))
    meta = header.get("mc_meta")
    return TwReference(beta=int(header["beta"]), points=tuple(points),
                       source=str(header["source"]),
                       mc_meta=tuple(meta) if meta else None)


def load_or_build_mc_reference(path: str, beta: int, dim: int, reps: int,
                               seed: int, grid_size: int = 99) -> TwReference:
    """Load a cached Monte-Carlo reference, regenerating on any mismatch of
    (beta, dim, reps, seed, grid size)."""
    want_meta = (dim, reps, seed)
    if os.path.exists(path):
        try:
            ref = load_tw_reference(path)
            if (ref.beta == beta and ref.mc_meta == want_meta
                    and len(ref.points) == grid_size):
                return ref
        except (ConfigError, ValueError, KeyError):
            pass
    ref = mc_tw_reference(beta, dim, reps, seed, grid_size)
    save_tw_reference(path, ref)
    return ref
