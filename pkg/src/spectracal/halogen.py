"""Planck-inspired parametric model of stray-light-affected halogen spectra.

The model family is

    f(lam) = (a*lam - b)^3 / (exp(c*lam - d) - 1)

with the wavelength consumed in micrometers, which keeps all four
parameters O(1) on visible/NIR grids and the exponential well-conditioned.
The formula has a pole at ``c*lam = d``; sampling and fitting keep
``c*lam - d >= DELTA_POLE`` on the active grid so every admissible
parameter set yields a finite, nonnegative spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Spectrum, WavelengthGrid
from .errors import ConvergenceError, DomainError, ParameterError, SamplingError

__all__ = [
    "DELTA_POLE",
    "KAPPA_STRAY",
    "HalogenParams",
    "ParamRanges",
    "default_param_ranges",
    "params_feasible",
    "eval_halogen",
    "sample_halogen",
    "fit_halogen",
]

DELTA_POLE = 1e-3
# Widening factor applied to the upper parameter bounds at stray_level = 1.
KAPPA_STRAY = 0.5


@dataclass(frozen=True)
class HalogenParams:
    """Parameters (a, b, c, d) of the halogen spectral model."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d)
        if not all(np.isfinite(v) for v in vals):
            raise DomainError("halogen parameters must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=np.float64)


@dataclass(frozen=True)
class ParamRanges:
    """Closed per-parameter intervals for drawing halogen parameters.

    A range box is valid when each interval is ordered and the box contains
    at least one parameter set satisfying the model constraints on the
    active grid.  Individual corners of the box may be infeasible; draws
    are rejection-sampled against the constraints.
    """

    a: tuple[float, float]
    b: tuple[float, float]
    c: tuple[float, float]
    d: tuple[float, float]

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise ParameterError(f"range for {name} must be finite")
            if lo > hi:
                raise ParameterError(f"range for {name} has lo > hi")
            object.__setattr__(self, name, (float(lo), float(hi)))

    def as_bounds(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=np.float64)


def default_param_ranges() -> ParamRanges:
    """Ranges producing smooth broadband curves peaking inside 500-1000 nm."""
    return ParamRanges(a=(0.5, 2.0), b=(0.0, 0.6), c=(2.0, 12.0), d=(0.0, 4.0))


def _lam_um(grid: WavelengthGrid) -> np.ndarray:
    return grid.lambdas / 1000.0


def _feasible_vec(p: np.ndarray, lam: np.ndarray) -> bool:
    a, b, c, d = p
    return bool(np.all(a * lam - b >= 0.0) and np.all(c * lam - d >= DELTA_POLE))


def params_feasible(p: HalogenParams, grid: WavelengthGrid) -> bool:
    """True when ``p`` satisfies both model constraints on every grid point."""
    return _feasible_vec(p.as_array(), _lam_um(grid))


def ranges_satisfiable(ranges: ParamRanges, grid: WavelengthGrid) -> bool:
    """True when the box contains at least one feasible parameter set.

    Both constraints are monotone in the parameters, so the most feasible
    point of the box is the corner (a_hi, b_lo, c_hi, d_lo).
    """
    corner = np.array(
        [ranges.a[1], ranges.b[0], ranges.c[1], ranges.d[0]], dtype=np.float64
    )
    return _feasible_vec(corner, _lam_um(grid))


def _eval_raw(p: np.ndarray, lam: np.ndarray) -> np.ndarray:
    a, b, c, d = p
    # expm1 overflow means the denominator is effectively infinite; the
    # model value is then 0, which is the correct limit.
    with np.errstate(over="ignore"):
        return (a * lam - b) ** 3 / np.expm1(c * lam - d)


def eval_halogen(p: HalogenParams, grid: WavelengthGrid) -> Spectrum:
    """Evaluate the halogen model on a grid.

    Raises DomainError when the parameters violate the nonnegativity or
    pole-exclusion constraint anywhere on the grid.
    """
    lam = _lam_um(grid)
    vec = p.as_array()
    a, b, c, d = vec
    if np.any(a * lam - b < 0.0):
        raise DomainError("a*lam - b must be nonnegative on the grid")
    if np.any(c * lam - d < DELTA_POLE):
        raise DomainError(
            f"c*lam - d must stay >= {DELTA_POLE:g} on the grid (pole exclusion)"
        )
    return Spectrum(_eval_raw(vec, lam), grid)


def sample_halogen(
    ranges: ParamRanges,
    stray_level: float,
    rng: np.random.Generator,
    grid: WavelengthGrid,
    max_tries: int = 1000,
) -> HalogenParams:
    """Draw parameters uniformly from ``ranges`` widened by the stray level.

    The upper bound of each interval is scaled by ``1 + stray_level *
    KAPPA_STRAY``; higher stray levels therefore admit spectra with more
    stray-light contamination.  Draws violating the model constraints on
    ``grid`` are rejected and retried.
    """
    if not 0.0 <= stray_level <= 1.0:
        raise ParameterError("stray_level must lie in [0, 1]")
    bounds = ranges.as_bounds().copy()
    widen = 1.0 + stray_level * KAPPA_STRAY
    bounds[:, 1] = np.maximum(bounds[:, 0], bounds[:, 1] * widen)
    lam = _lam_um(grid)
    for _ in range(max_tries):
        p = rng.uniform(bounds[:, 0], bounds[:, 1])
        if _feasible_vec(p, lam):
            return HalogenParams(*(float(v) for v in p))
    raise SamplingError(
        f"no feasible halogen draw in {max_tries} tries "
        f"(stray_level={stray_level:g})"
    )


def _latin_hypercube(bounds: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    dim = bounds.shape[0]
    pts = np.empty((n, dim), dtype=np.float64)
    for j in range(dim):
        perm = rng.permutation(n)
        u = rng.uniform(size=n)
        unit = (perm + u) / n
        pts[:, j] = bounds[j, 0] + unit * (bounds[j, 1] - bounds[j, 0])
    return pts


def _num_jacobian(p: np.ndarray, lam: np.ndarray, rel_step: float) -> np.ndarray:
    jac = np.empty((lam.size, p.size), dtype=np.float64)
    for i in range(p.size):
        h = rel_step * max(abs(p[i]), 1.0)
        hi = p.copy()
        lo = p.copy()
        hi[i] += h
        lo[i] -= h
        jac[:, i] = (_eval_raw(hi, lam) - _eval_raw(lo, lam)) / (2.0 * h)
    return jac


def _gauss_newton(
    p0: np.ndarray,
    lam: np.ndarray,
    target: np.ndarray,
    max_iter: int,
    step_tol: float,
    rel_step: float,
    success_sse: float,
) -> tuple[np.ndarray, float, bool]:
    """Damped Gauss-Newton from one feasible start.

    Candidate steps are accepted only if they stay feasible and reduce the
    sum of squares; otherwise the Levenberg damping factor is increased.
    A start counts as successful when the step norm drops below
    ``step_tol``, or when it runs out of budget (iteration cap or no
    improving step) with the residual already below ``success_sse``.  The
    latter handles the model's degenerate parameter valleys, where the
    residual is long converged while the parameters keep drifting and the
    step norm never shrinks.  Returns (params, sse, success).
    """
    p = p0.copy()
    resid = _eval_raw(p, lam) - target
    sse = float(resid @ resid)
    mu = 1e-3
    success = False
    for _ in range(max_iter):
        jac = _num_jacobian(p, lam, rel_step)
        grad = jac.T @ resid
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        diag[diag <= 0.0] = 1e-12
        accepted = False
        step = None
        for _ in range(50):
            try:
                step = np.linalg.solve(hess + mu * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            cand = p + step
            if _feasible_vec(cand, lam):
                cand_resid = _eval_raw(cand, lam) - target
                cand_sse = float(cand_resid @ cand_resid)
                if cand_sse <= sse:
                    p, resid, sse = cand, cand_resid, cand_sse
                    mu = max(mu / 3.0, 1e-14)
                    accepted = True
                    break
            mu *= 10.0
        if not accepted:
            # Stationary against the objective or a feasibility boundary.
            if step is not None and float(np.linalg.norm(step)) < step_tol:
                success = True
            break
        if float(np.linalg.norm(step)) < step_tol:
            success = True
            break
    return p, sse, success or sse <= success_sse


def fit_halogen(
    target: Spectrum,
    init_strategy: str = "lhs",
    ranges: ParamRanges | None = None,
    n_starts: int = 16,
    max_iter: int = 200,
    step_tol: float = 1e-10,
    rel_step: float = 1e-6,
    success_rtol: float = 1e-4,
    seed: int = 0,
) -> tuple[HalogenParams, float]:
    """Least-squares fit of the halogen model to a target spectrum.

    Multi-start damped Gauss-Newton with a central-difference Jacobian.
    Starts are Latin-hypercube draws over ``ranges`` (``init_strategy
    "lhs"``) or plain uniform draws (``"random"``), filtered for
    feasibility.  Parameter degeneracy is tolerated: only the residual of
    the returned parameters is contractual, and a start whose residual is
    already below ``success_rtol * max(target)`` when its iteration budget
    runs out counts as successful even if the parameters are still
    drifting along a degenerate valley.

    Returns (params, rmse).  Raises ConvergenceError, carrying the best
    RMSE found, when no start succeeds.
    """
    if init_strategy not in ("lhs", "random"):
        raise ParameterError(f"unknown init strategy {init_strategy!r}")
    if n_starts < 1:
        raise ParameterError("n_starts must be >= 1")
    tvals = target.values
    if np.any(tvals < 0.0):
        raise DomainError("target spectrum must be nonnegative")
    if not np.any(tvals > 0.0):
        raise DomainError("target spectrum must not be all zero")
    ranges = ranges or default_param_ranges()
    lam = _lam_um(target.grid)
    rng = np.random.default_rng(seed)
    bounds = ranges.as_bounds()

    starts: list[np.ndarray] = []
    for _ in range(200):
        if len(starts) >= n_starts:
            break
        if init_strategy == "lhs":
            batch = _latin_hypercube(bounds, n_starts, rng)
        else:
            batch = rng.uniform(bounds[:, 0], bounds[:, 1], size=(n_starts, 4))
        starts.extend(p for p in batch if _feasible_vec(p, lam))
    starts = starts[:n_starts]
    if not starts:
        raise ConvergenceError("no feasible start found in the given ranges")

    scale = float(np.max(tvals))
    early_sse = (1e-9 * scale) ** 2 * lam.size
    success_sse = (success_rtol * scale) ** 2 * lam.size
    best: tuple[np.ndarray, float] | None = None
    best_any_sse = np.inf
    for p0 in starts:
        p, sse, ok = _gauss_newton(
            p0, lam, tvals, max_iter, step_tol, rel_step, success_sse
        )
        best_any_sse = min(best_any_sse, sse)
        if ok and (best is None or sse < best[1]):
            best = (p, sse)
            if sse <= early_sse:
                break
    if best is None:
        raise ConvergenceError(
            "no Gauss-Newton start converged",
            best_rmse=float(np.sqrt(best_any_sse / lam.size)),
        )
    p, sse = best
    rmse = float(np.sqrt(sse / lam.size))
    return HalogenParams(*(float(v) for v in p)), rmse
