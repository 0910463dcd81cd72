"""Deterministic numerics for the limiting spectral law of sample covariance
matrices with a general population.

Everything here is a pure function of a finite atomic population spectrum H
(eigenvalue distribution of the population covariance) and the dimensional
ratio ``d_n = N/M``:

* ``solve_c``       -- the companion parameter c, the unique root of
                       ``sum_k w_k (t_k c / (1 - t_k c))^2 = d_n`` on
                       ``[0, 1/lambda_max)``;
* ``compute_lambda_r`` / ``compute_sigma`` -- the rightmost support edge and
                       the cube-root scale entering the Tracy-Widom
                       normalization ``n^{2/3} (lambda_1 - lambda_r) / sigma``;
* ``solve_m0``      -- the self-consistent Stieltjes transform
                       ``m = 1 / (-z + d_n^{-1} sum_k w_k t_k/(t_k m + 1))``
                       via damped Newton with a homotopy in Im z;
* ``density_rho0``  -- the spectral density recovered from Im m0 with a small
                       Richardson extrapolation in the smoothing parameter.

All solvers are safe to call concurrently: no global state, no caches shared
between calls.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import EdgeConditionViolated, NonConvergence

__all__ = [
    "PopulationSpectrum",
    "EdgeParams",
    "StieltjesValue",
    "solve_c",
    "compute_lambda_r",
    "compute_sigma",
    "edge_params",
    "subcritical_check",
    "solve_m0",
    "solve_m0_grid",
    "density_rho0",
    "companion_transform",
    "companion_inverse",
    "normalize_top_eigenvalue",
]

# Margin below which the edge normalization is refused outright, regardless of
# the user-selected threshold. The default threshold itself is a convention:
# the regularity condition is an asymptotic gap, so finite-size use needs an
# explicit cushion.
DEFAULT_MARGIN_THRESHOLD = 0.05
HARD_MARGIN_FLOOR = 1e-3

_WEIGHT_SUM_TOL = 1e-12


def _normalize_atoms(pairs: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    merged: dict[float, float] = {}
    for value, weight in pairs:
        v = float(value)
        w = float(weight)
        if not v > 0.0:
            raise ValueError(f"population eigenvalue must be positive, got {v}")
        if not 0.0 < w <= 1.0:
            raise ValueError(f"atom weight must lie in (0, 1], got {w}")
        merged[v] = merged.get(v, 0.0) + w
    if not merged:
        raise ValueError("population spectrum needs at least one atom")
    total = math.fsum(merged.values())
    if abs(total - 1.0) > _WEIGHT_SUM_TOL:
        raise ValueError(f"atom weights must sum to 1, got {total!r}")
    return tuple(sorted(merged.items(), key=lambda kv: -kv[0]))


@dataclass(frozen=True)
class PopulationSpectrum:
    """Atoms-and-weights representation of the population eigenvalue
    distribution.

    ``atoms`` holds ``(eigenvalue, weight)`` pairs, sorted by descending
    eigenvalue; repeated eigenvalues are merged on construction. ``m_dim``
    records the matrix dimension the spectrum came from (0 for an abstract
    limit).
    """

    atoms: tuple[tuple[float, float], ...]
    m_dim: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", _normalize_atoms(self.atoms))
        if self.m_dim < 0:
            raise ValueError("m_dim must be nonnegative")

    @classmethod
    def identity(cls, m_dim: int = 0) -> "PopulationSpectrum":
        return cls(((1.0, 1.0),), m_dim)

    @classmethod
    def spiked(cls, spike: float, m: int) -> "PopulationSpectrum":
        """Single spike at ``spike`` with weight 1/m, remaining mass at 1."""
        if m < 2:
            raise ValueError("spiked spectrum needs m >= 2")
        return cls(((float(spike), 1.0 / m), (1.0, (m - 1) / m)), m)

    @classmethod
    def from_eigenvalues(cls, values: Sequence[float], m_dim: int | None = None) -> "PopulationSpectrum":
        vals = [float(v) for v in values]
        m = len(vals)
        counts: dict[float, int] = {}
        for v in vals:
            counts[v] = counts.get(v, 0) + 1
        atoms = tuple((v, k / m) for v, k in counts.items())
        return cls(atoms, m if m_dim is None else m_dim)

    def lambda_max(self) -> float:
        return self.atoms[0][0]

    def scale(self, alpha: float) -> "PopulationSpectrum":
        """Spectrum of ``alpha * Sigma``."""
        if alpha <= 0:
            raise ValueError("scale factor must be positive")
        return PopulationSpectrum(tuple((v * alpha, w) for v, w in self.atoms), self.m_dim)

    @cached_property
    def _values(self) -> np.ndarray:
        return np.array([v for v, _ in self.atoms])

    @cached_property
    def _weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])


@dataclass(frozen=True)
class EdgeParams:
    """The deterministic edge triple plus the regularity margin.

    ``lambda_r > 1/c > lambda_max`` holds for every instance produced by
    :func:`edge_params`; ``regularity_margin = 1 - lambda_max * c``.
    """

    c: float
    lambda_r: float
    sigma: float
    d_n: float
    regularity_margin: float


@dataclass(frozen=True)
class StieltjesValue:
    """One converged evaluation of the self-consistent transform."""

    z: complex
    m0: complex
    residual: float


def _ratio_powers(h: PopulationSpectrum, c: float) -> tuple[float, float, float]:
    """First three moments of t*c/(1 - t*c) under H."""
    t = h._values
    w = h._weights
    r = t * c / (1.0 - t * c)
    return (
        float(np.dot(w, r)),
        float(np.dot(w, r * r)),
        float(np.dot(w, r * r * r)),
    )


def solve_c(h: PopulationSpectrum, d_n: float, *, residual_tol: float = 1e-12,
            max_newton: int = 60) -> float:
    """Solve the defining equation of the companion parameter c.

    Bracketed bisection on ``[0, (1 - 1e-9)/lambda_max]`` down to width 1e-8,
    then a safeguarded Newton polish. The left side is strictly increasing in
    c on the bracket, so bisection cannot miss the root.

    Raises :class:`NonConvergence` if the residual cannot be brought below
    1e-10 (pathological spectrum input).
    """
    if d_n <= 0:
        raise ValueError("d_n must be positive")
    t = h._values
    w = h._weights

    def phi(c: float) -> float:
        r = t * c / (1.0 - t * c)
        return float(np.dot(w, r * r)) - d_n

    def dphi(c: float) -> float:
        return float(np.dot(w, 2.0 * t * t * c / (1.0 - t * c) ** 3))

    lo = 0.0
    hi = (1.0 - 1e-9) / h.lambda_max()
    if not phi(hi) > 0.0:
        raise NonConvergence(
            "no sign change on the bracket; d_n is too large for this spectrum")
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if phi(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    for _ in range(max_newton):
        f = phi(c)
        if abs(f) <= residual_tol:
            return c
        if f < 0.0:
            lo = c
        else:
            hi = c
        step = f / dphi(c)
        c_next = c - step
        if not lo < c_next < hi:
            c_next = 0.5 * (lo + hi)
        if c_next == c:
            break
        c = c_next
    if abs(phi(c)) > 1e-10:
        raise NonConvergence(f"companion-parameter residual stuck at {phi(c):.3e}")
    return c


def compute_lambda_r(c: float, h: PopulationSpectrum, d_n: float) -> float:
    """Rightmost support edge of the limiting density for the root c."""
    g1, _, _ = _ratio_powers(h, c)
    return (1.0 + g1 / d_n) / c


def compute_sigma(c: float, h: PopulationSpectrum, d_n: float) -> float:
    """Cube-root fluctuation scale of the largest eigenvalue at the edge."""
    _, _, g3 = _ratio_powers(h, c)
    return ((1.0 + g3 / d_n) / c**3) ** (1.0 / 3.0)


def edge_params(h: PopulationSpectrum, d_n: float,
                margin_threshold: float = DEFAULT_MARGIN_THRESHOLD) -> EdgeParams:
    """Solve for c and bundle (c, lambda_r, sigma) with the regularity margin.

    Raises :class:`EdgeConditionViolated` when ``1 - lambda_max*c`` falls
    below ``max(margin_threshold, 1e-3)``; the 1e-3 floor is hard. When the
    caller lowers the threshold, margins below 0.05 still emit a warning.
    """
    c = solve_c(h, d_n)
    margin = 1.0 - h.lambda_max() * c
    floor = max(margin_threshold, HARD_MARGIN_FLOOR)
    if margin < floor:
        raise EdgeConditionViolated(
            f"regularity margin {margin:.4g} is below {floor:.4g}; "
            "the top population eigenvalue is too close to 1/c")
    if margin < DEFAULT_MARGIN_THRESHOLD:
        warnings.warn(
            f"regularity margin {margin:.4g} is thin; the Tracy-Widom "
            "normalization may be inaccurate at finite sizes",
            RuntimeWarning, stacklevel=2)
    return EdgeParams(
        c=c,
        lambda_r=compute_lambda_r(c, h, d_n),
        sigma=compute_sigma(c, h, d_n),
        d_n=d_n,
        regularity_margin=margin,
    )


def subcritical_check(spike: float, d: float) -> bool:
    """True iff a single spike stays below the detectability threshold
    ``1 + d^{-1/2}`` (exclusive boundary)."""
    if spike < 1.0:
        raise ValueError("spike must be >= 1")
    if d <= 0:
        raise ValueError("d must be positive")
    return spike < 1.0 + d ** -0.5


# ---------------------------------------------------------------------------
# Self-consistent Stieltjes transform
# ---------------------------------------------------------------------------

def _self_map(z: complex, m: complex, t: np.ndarray, w: np.ndarray, d_n: float) -> complex:
    """The fixed-point map F(m) = 1 / (-z + d_n^{-1} * sum w t/(t m + 1))."""
    s = np.sum(w * t / (t * m + 1.0))
    return 1.0 / (-z + s / d_n)


def _self_map_dsum(m: complex, t: np.ndarray, w: np.ndarray) -> complex:
    """sum w t^2/(t m + 1)^2, i.e. -d/dm of the atom sum."""
    q = t / (t * m + 1.0)
    return complex(np.sum(w * q * q))


def _newton_m0(z: complex, m_start: complex, t: np.ndarray, w: np.ndarray,
               d_n: float, tol: float, max_iter: int) -> complex:
    """Damped Newton for m = F(m) at a fixed z, constrained to Im m > 0."""
    m = m_start if m_start.imag > 0.0 else -1.0 / z
    for _ in range(max_iter):
        fm = _self_map(z, m, t, w, d_n)
        f = m - fm
        err = abs(f)
        if err <= tol:
            return m
        fprime = 1.0 - fm * fm * _self_map_dsum(m, t, w) / d_n
        if fprime == 0:
            fprime = 1e-30
        step = -f / fprime
        alpha = 1.0
        moved = False
        while alpha > 1e-12:
            cand = m + alpha * step
            if cand.imag > 0.0 and abs(cand - _self_map(z, cand, t, w, d_n)) < err:
                m = cand
                moved = True
                break
            alpha *= 0.5
        if not moved:
            # fall back on a damped fixed-point step (direction -f)
            cand = m - 0.5 * f
            if cand.imag > 0.0 and abs(cand - _self_map(z, cand, t, w, d_n)) < err:
                m = cand
            else:
                raise NonConvergence(f"stalled at z={z!r} with residual {err:.3e}")
    raise NonConvergence(f"iteration budget exhausted at z={z!r}")


def _eta_ladder(eta_target: float, start: float = 1.0, factor: float = 0.5) -> list[float]:
    if eta_target >= start:
        return [eta_target]
    ladder = [start]
    while ladder[-1] * factor > eta_target:
        ladder.append(ladder[-1] * factor)
    ladder.append(eta_target)
    return ladder


def solve_m0(z: complex, h: PopulationSpectrum, d_n: float,
             tol: float = 1e-11, *, max_iter: int = 100) -> StieltjesValue:
    """Solve the self-consistent equation at one point of the upper half plane.

    Plain fixed-point iteration stalls near the support edge, so the solver
    walks Im z down geometrically from 1 to the target, warm-starting damped
    Newton at every rung from the previous solution; the first rung starts
    from the large-|z| asymptote -1/z. Iterates are never allowed to leave
    the upper half plane.
    """
    z = complex(z)
    if not z.imag > 0.0:
        raise ValueError("z must lie in the upper half plane")
    if d_n <= 0:
        raise ValueError("d_n must be positive")
    t = h._values
    w = h._weights
    m = -1.0 / complex(z.real, _eta_ladder(z.imag)[0])
    for eta in _eta_ladder(z.imag):
        zz = complex(z.real, eta)
        m = _newton_m0(zz, m, t, w, d_n, tol, max_iter)
    residual = abs(m - _self_map(z, m, t, w, d_n))
    return StieltjesValue(z=z, m0=m, residual=residual)


def solve_m0_grid(e_values: Sequence[float], eta: float, h: PopulationSpectrum,
                  d_n: float, tol: float = 1e-11) -> list[StieltjesValue]:
    """Solve along a grid of real parts at fixed Im z, using continuation.

    Each point warm-starts from its neighbor; a point that refuses to
    converge from the warm start falls back on the full homotopy.
    """
    t = h._values
    w = h._weights
    out: list[StieltjesValue] = []
    m_prev: complex | None = None
    for e in e_values:
        z = complex(float(e), eta)
        if m_prev is not None:
            try:
                m = _newton_m0(z, m_prev, t, w, d_n, tol, max_iter=50)
                out.append(StieltjesValue(z, m, abs(m - _self_map(z, m, t, w, d_n))))
                m_prev = m
                continue
            except NonConvergence:
                pass
        sv = solve_m0(z, h, d_n, tol)
        out.append(sv)
        m_prev = sv.m0
    return out


def density_rho0(e_grid: Sequence[float], h: PopulationSpectrum, d_n: float,
                 *, tol: float = 1e-11) -> np.ndarray:
    """Limiting spectral density on a grid of energies.

    Evaluates Im m0 at eta in {1e-5, 2e-5} and Richardson-extrapolates
    linearly to eta = 0 (Im m0 is linear in eta to first order inside the
    bulk). Values are clipped at 0 and forced to exactly 0 beyond
    ``lambda_r`` plus a small tolerance band.
    """
    c = solve_c(h, d_n)
    lam_r = compute_lambda_r(c, h, d_n)
    band = 1e-6 * max(1.0, lam_r)
    eta1, eta2 = 1e-5, 2e-5
    grid = np.asarray(e_grid, dtype=float)
    inside = grid <= lam_r + band
    rho = np.zeros_like(grid)
    if np.any(inside):
        es = grid[inside]
        im1 = np.array([sv.m0.imag for sv in solve_m0_grid(es, eta1, h, d_n, tol)])
        im2 = np.array([sv.m0.imag for sv in solve_m0_grid(es, eta2, h, d_n, tol)])
        rho[inside] = np.maximum(0.0, (2.0 * im1 - im2) / np.pi)
    return rho


# ---------------------------------------------------------------------------
# Companion relation and edge normalization
# ---------------------------------------------------------------------------

def companion_transform(m: complex, z: complex, d_n: float) -> complex:
    """Map the N-side transform m to the M-side transform underline-m.

    The two spectral laws differ only by the point mass at zero carried by
    the dimension mismatch: ``m = d_n^{-1} m_underline - (1 - d_n^{-1})/z``.
    """
    return d_n * m + (d_n - 1.0) / z


def companion_inverse(m_underline: complex, z: complex, d_n: float) -> complex:
    """Inverse of :func:`companion_transform`."""
    return m_underline / d_n - (1.0 - 1.0 / d_n) / z


def normalize_top_eigenvalue(lambda1: float, ep: EdgeParams, n: int) -> float:
    """Tracy-Widom rescaling ``n^{2/3} (lambda1 - lambda_r) / sigma``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return n ** (2.0 / 3.0) * (lambda1 - ep.lambda_r) / ep.sigma
