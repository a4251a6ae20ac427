"""Motion-coefficient estimation: global search, local refinement, coarse init.

The concentrated objective is highly multimodal in the location coordinates
(phase wraps every half wavelength of bistatic range change), so the
production pipeline is a box-constrained real-coded evolutionary search
followed by derivative-free simplex refinement of the winner.  A coarse
range-based initializer (multilateration per snapshot, then polynomial
regression over snapshots) supplies production-mode box centers when no
benchmark truth is available.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator

from .likelihood import ConcentratedObjective
from .scene import (
    AntennaGeometry,
    MotionCoefficients,
    RadarParams,
    eval_position,
    polynomial_basis,
)
from .validation import check_finite, check_vector

__all__ = [
    "SearchBox",
    "OptimizerConfig",
    "Estimate",
    "estimate",
    "multilaterate",
    "coarse_init",
    "objective_grid",
    "MotionEstimator",
]


@dataclass(frozen=True)
class SearchBox:
    """Axis-aligned bounds on the free motion-coefficient vector."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = check_vector(np.asarray(self.lower, dtype=float), "lower")
        upper = check_vector(np.asarray(self.upper, dtype=float), "upper", len(lower))
        if not np.all(lower < upper):
            raise ValueError("search box requires lower < upper per parameter")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def centered(cls, center, halfwidths) -> "SearchBox":
        center = np.asarray(center, dtype=float)
        halfwidths = np.asarray(halfwidths, dtype=float)
        return cls(lower=center - halfwidths, upper=center + halfwidths)

    @property
    def n_free(self) -> int:
        return len(self.lower)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, psi: np.ndarray) -> np.ndarray:
        return np.clip(psi, self.lower, self.upper)

    def contains(self, psi) -> bool:
        psi = np.asarray(psi, dtype=float)
        return bool(np.all(psi >= self.lower) and np.all(psi <= self.upper))


@dataclass(frozen=True)
class OptimizerConfig:
    """Budgets and operator parameters for the two-stage search.

    Defaults are engineering choices sized for the bundled example scenes;
    population and generations trade runtime against capture probability of
    the main likelihood lobe.
    """

    population_size: int = 64
    n_generations: int = 200
    tournament_size: int = 3
    crossover_alpha: float = 0.5
    mutation_rate: float = 0.25
    mutation_sigma: float = 0.08  # fraction of box width
    n_elite: int = 2
    refine_tol: float = 1e-10  # relative objective change
    refine_max_iter: int = 4000
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.n_generations < 1:
            raise ValueError("n_generations must be >= 1")
        if not 2 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament_size must be in [2, population_size]")
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be > 0")
        if not 0 <= self.n_elite < self.population_size:
            raise ValueError("n_elite must be in [0, population_size)")


@dataclass(frozen=True)
class Estimate:
    """Result of one estimation run."""

    motion: MotionCoefficients
    gains: np.ndarray
    objective: float  # recomputed positive log-likelihood surrogate at motion
    diagnostics: dict = field(default_factory=dict)


def _best_index(fitness: np.ndarray, population: np.ndarray,
                center: np.ndarray) -> int:
    """Highest fitness; exact ties go to the candidate nearest the box center."""
    best = np.max(fitness)
    tied = np.flatnonzero(fitness == best)
    if len(tied) == 1:
        return int(tied[0])
    dist = np.linalg.norm(population[tied] - center[None, :], axis=1)
    return int(tied[np.argmin(dist)])


def _global_stage(ctx: ConcentratedObjective, box: SearchBox,
                  cfg: OptimizerConfig):
    """Real-coded evolutionary maximization of the concentrated objective."""
    rng = np.random.default_rng(cfg.seed)
    d = box.n_free
    pop = rng.uniform(box.lower, box.upper, size=(cfg.population_size, d))
    pop[0] = box.center  # deterministic anchor
    fitness = ctx.positive_ll_batch(pop)
    evaluations = cfg.population_size
    width = box.width

    for _ in range(cfg.n_generations):
        order = np.argsort(fitness)[::-1]
        nxt = np.empty_like(pop)
        nxt[: cfg.n_elite] = pop[order[: cfg.n_elite]]

        n_children = cfg.population_size - cfg.n_elite
        # tournament selection, two parents per child
        draws = rng.integers(0, cfg.population_size,
                             size=(2 * n_children, cfg.tournament_size))
        winners = draws[np.arange(2 * n_children),
                        np.argmax(fitness[draws], axis=1)]
        pa = pop[winners[:n_children]]
        pb = pop[winners[n_children:]]
        # blend crossover: uniform on the parent interval inflated by alpha
        lo = np.minimum(pa, pb)
        hi = np.maximum(pa, pb)
        span = hi - lo
        u = rng.uniform(size=(n_children, d))
        children = (lo - cfg.crossover_alpha * span
                    + u * (1 + 2 * cfg.crossover_alpha) * span)
        # gaussian mutation scaled to the box width
        mutate = rng.uniform(size=(n_children, d)) < cfg.mutation_rate
        children = children + mutate * rng.normal(
            scale=cfg.mutation_sigma, size=(n_children, d)) * width[None, :]
        nxt[cfg.n_elite:] = np.clip(children, box.lower, box.upper)

        pop = nxt
        fitness = ctx.positive_ll_batch(pop)
        evaluations += cfg.population_size

    i = _best_index(fitness, pop, box.center)
    return pop[i], float(fitness[i]), evaluations


def _refine(ctx: ConcentratedObjective, box: SearchBox, cfg: OptimizerConfig,
            start: np.ndarray, start_value: float):
    """Simplex descent on the negative objective in box-normalized coordinates."""
    width = box.width

    def to_psi(u):
        return box.clip(box.lower + np.asarray(u) * width)

    def neg(u):
        return -ctx.positive_ll(to_psi(u))

    u0 = (start - box.lower) / width
    res = minimize(neg, u0, method="Nelder-Mead",
                   options={"fatol": cfg.refine_tol * max(1.0, abs(start_value)),
                            "xatol": 1e-12,
                            "maxiter": cfg.refine_max_iter,
                            "maxfev": cfg.refine_max_iter})
    psi = to_psi(res.x)
    value = float(ctx.positive_ll(psi))
    return psi, value, int(res.nfev)


def estimate(ctx: ConcentratedObjective, box: SearchBox,
             cfg: OptimizerConfig = OptimizerConfig()) -> Estimate:
    """Two-stage maximization of the concentrated objective within a box.

    Deterministic given ``cfg.seed``.  The local stage never returns a
    worse candidate than the global winner, and no candidate outside the
    box is ever evaluated.

    Raises
    ------
    RuntimeError
        If no finite objective value was found within the budget.
    """
    if box.n_free != ctx.n_free:
        raise ValueError(f"box has {box.n_free} parameters, "
                         f"objective expects {ctx.n_free}")
    g_psi, g_val, n_eval = _global_stage(ctx, box, cfg)
    if not np.isfinite(g_val):
        raise RuntimeError("global search found no finite objective value")
    r_psi, r_val, n_refine = _refine(ctx, box, cfg, g_psi, g_val)
    if r_val >= g_val:
        psi, val = r_psi, r_val
    else:  # keep the monotonicity contract
        psi, val = g_psi, g_val
    motion = MotionCoefficients.from_vector(psi, ctx.order, ctx.planar)
    gains = ctx.concentrate(psi)
    return Estimate(
        motion=motion,
        gains=gains,
        objective=float(ctx.positive_ll(psi)),
        diagnostics={
            "evaluations": n_eval + n_refine,
            "generations": cfg.n_generations,
            "global_objective": g_val,
            "refined_objective": r_val,
            "refine_evaluations": n_refine,
        },
    )


# ---------------------------------------------------------------------------
# coarse initialization from range measurements
# ---------------------------------------------------------------------------

def multilaterate(anchors, ranges, planar: bool = False,
                  max_iter: int = 50) -> np.ndarray:
    """Least-squares position from ranges to known anchors (Gauss-Newton).

    Minimizes sum_n (||L - anchor_n|| - range_n)^2 starting from the anchor
    centroid.

    Parameters
    ----------
    anchors : array_like, shape (N, 2) or (N, 3)
    ranges : array_like, shape (N,)
    planar : bool
        Solve for (x, y) only, pinning z = 0.

    Raises
    ------
    ValueError
        For degenerate anchor geometry (rank-deficient normal equations,
        e.g. collinear anchors in 2D) or too few anchors.
    """
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    if anchors.shape[1] == 2:
        anchors = np.hstack([anchors, np.zeros((len(anchors), 1))])
    ranges = check_vector(np.asarray(ranges, dtype=float), "ranges", len(anchors))
    n_dim = 2 if planar else 3
    if len(anchors) < n_dim + 1:
        raise ValueError(f"need at least {n_dim + 1} receivers for a "
                         f"{n_dim}D fix, got {len(anchors)}")
    pos = anchors.mean(axis=0)
    if planar:
        pos[2] = 0.0
    for _ in range(max_iter):
        diff = pos[None, :] - anchors  # (N, 3)
        dist = np.linalg.norm(diff, axis=1)
        dist = np.maximum(dist, 1e-12)
        resid = dist - ranges
        jac = diff / dist[:, None]  # rows: unit vectors anchor -> pos
        jac = jac[:, :n_dim]
        jtj = jac.T @ jac
        if np.linalg.matrix_rank(jtj, tol=1e-9 * max(np.trace(jtj), 1.0)) < n_dim:
            raise ValueError("degenerate receiver geometry: multilateration "
                             f"normal equations are rank-deficient (< {n_dim})")
        step = np.linalg.solve(jtj, jac.T @ resid)
        pos[:n_dim] -= step
        if np.linalg.norm(step) < 1e-10 * max(1.0, np.linalg.norm(pos)):
            break
    return pos


def coarse_init(geometry: AntennaGeometry, params: RadarParams,
                range_estimates, order: int, planar: bool = False,
                range_noise: float = 0.0) -> MotionCoefficients:
    """Motion coefficients from per-receiver range tracks.

    Each snapshot's ranges are multilaterated into a position fix; the fixes
    are then regressed per axis on the factorial time basis.  When
    ``range_noise`` is nonzero the regression weights each snapshot by the
    inverse position variance implied by its multilateration geometry.

    Parameters
    ----------
    range_estimates : array_like, shape (K, N)
        Estimated target-to-receiver ranges in meters.

    Raises
    ------
    ValueError
        Fewer snapshots than coefficients, or degenerate geometry.
    """
    ranges = np.atleast_2d(np.asarray(range_estimates, dtype=float))
    check_finite(ranges, "range_estimates")
    if ranges.shape != (params.snapshot_count, geometry.n_rx):
        raise ValueError(
            f"range_estimates must have shape (K, N) = "
            f"({params.snapshot_count}, {geometry.n_rx}), got {ranges.shape}")
    if params.snapshot_count < order + 1:
        raise ValueError(f"need at least {order + 1} snapshots to fit "
                         f"order-{order} motion, got {params.snapshot_count}")
    n_dim = 2 if planar else 3
    fixes = np.empty((params.snapshot_count, 3))
    weights = np.empty((params.snapshot_count, n_dim))
    for k in range(params.snapshot_count):
        fixes[k] = multilaterate(geometry.receivers, ranges[k], planar=planar)
        diff = fixes[k][None, :] - geometry.receivers
        dist = np.maximum(np.linalg.norm(diff, axis=1), 1e-12)
        jac = (diff / dist[:, None])[:, :n_dim]
        cov = np.linalg.inv(jac.T @ jac)  # position covariance up to sigma_r^2
        weights[k] = 1.0 / np.maximum(np.diag(cov), 1e-12)
    if range_noise == 0.0:
        weights[:] = 1.0

    h = polynomial_basis(params.snapshot_times(), order)  # (K, Q+1)
    coeffs = np.zeros((3, order + 1))
    for axis in range(n_dim):
        w = weights[:, axis]
        hw = h * w[:, None]
        coeffs[axis] = np.linalg.solve(h.T @ hw, hw.T @ fixes[:, axis])
    if planar:
        return MotionCoefficients(cx=coeffs[0], cy=coeffs[1])
    return MotionCoefficients(cx=coeffs[0], cy=coeffs[1], cz=coeffs[2])


def objective_grid(ctx: ConcentratedObjective, base_psi, axis1: int,
                   axis1_values, axis2: int, axis2_values) -> np.ndarray:
    """Objective over a 2D slice of the parameter space.

    Rows follow ``axis1_values`` in the given order, columns
    ``axis2_values``; every other coefficient stays at ``base_psi``.
    """
    base = check_vector(np.asarray(base_psi, dtype=float), "base_psi", ctx.n_free)
    v1 = check_vector(np.asarray(axis1_values, dtype=float), "axis1_values")
    v2 = check_vector(np.asarray(axis2_values, dtype=float), "axis2_values")
    if len(v1) < 2 or len(v2) < 2:
        raise ValueError("grid axes need at least 2 points each")
    if axis1 == axis2:
        raise ValueError("grid axes must differ")
    grid = np.tile(base, (len(v1) * len(v2), 1))
    a, b = np.meshgrid(v1, v2, indexing="ij")
    grid[:, axis1] = a.ravel()
    grid[:, axis2] = b.ravel()
    return ctx.positive_ll_batch(grid).reshape(len(v1), len(v2))


# ---------------------------------------------------------------------------
# sklearn-style front end
# ---------------------------------------------------------------------------

class MotionEstimator(BaseEstimator):
    """Scikit-learn style wrapper around the two-stage pipeline.

    Parameters mirror :class:`OptimizerConfig` plus the scene description;
    ``fit`` consumes the (K, MN) complex snapshot matrix.

    Attributes (after fit)
    ----------------------
    motion_ : MotionCoefficients
    gains_ : ndarray, complex path gains
    objective_ : float
    diagnostics_ : dict
    """

    def __init__(self, geometry=None, radar=None, order=2, planar=True,
                 box_lower=None, box_upper=None, population_size=64,
                 n_generations=200, mutation_rate=0.25, mutation_sigma=0.08,
                 refine_tol=1e-10, seed=0):
        self.geometry = geometry
        self.radar = radar
        self.order = order
        self.planar = planar
        self.box_lower = box_lower
        self.box_upper = box_upper
        self.population_size = population_size
        self.n_generations = n_generations
        self.mutation_rate = mutation_rate
        self.mutation_sigma = mutation_sigma
        self.refine_tol = refine_tol
        self.seed = seed

    def _context(self, X) -> ConcentratedObjective:
        if self.geometry is None or self.radar is None:
            raise ValueError("geometry and radar parameters are required")
        return ConcentratedObjective(self.geometry, self.radar, self.order,
                                     np.asarray(X), planar=self.planar)

    def fit(self, X, y=None):
        """Estimate motion coefficients from a (K, MN) snapshot matrix."""
        if self.box_lower is None or self.box_upper is None:
            raise ValueError("box_lower and box_upper are required")
        ctx = self._context(X)
        cfg = OptimizerConfig(population_size=self.population_size,
                              n_generations=self.n_generations,
                              mutation_rate=self.mutation_rate,
                              mutation_sigma=self.mutation_sigma,
                              refine_tol=self.refine_tol, seed=self.seed)
        result = estimate(ctx, SearchBox(self.box_lower, self.box_upper), cfg)
        self.motion_ = result.motion
        self.gains_ = result.gains
        self.objective_ = result.objective
        self.diagnostics_ = result.diagnostics
        self.n_features_in_ = ctx.data.shape[1]
        return self

    def predict(self, k):
        """Target positions at the given snapshot indices, shape (len(k), 3)."""
        self._check_fitted()
        k = np.atleast_1d(np.asarray(k, dtype=float))
        return eval_position(self.motion_, self.radar, k)

    def score(self, X, y=None):
        """Concentrated objective of the fitted coefficients on new data."""
        self._check_fitted()
        ctx = self._context(X)
        return float(ctx.positive_ll(self.motion_.to_vector()))

    def _check_fitted(self):
        if not hasattr(self, "motion_"):
            raise ValueError("estimator is not fitted; call fit first")
