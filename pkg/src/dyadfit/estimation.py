"""Maximum likelihood and adaptive-lasso estimation for the dyad model.

Two fitters share one objective:

* fit_mle: damped Newton with step-halving on the smooth log-likelihood.
* fit_rmle: accelerated proximal gradient (backtracking line search plus
  momentum restarts) on the negative log-likelihood plus a weighted L1
  penalty, whose proximal map is coordinatewise soft-thresholding.

fit_path chains them: the unpenalized estimate supplies adaptive penalty
weights, a descending lambda grid is fitted with warm starts, and the
network BIC picks the reported model.  standard_errors inverts the
observed information on the active set for Wald intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    CollinearityError,
    ConvergenceError,
    DataError,
    DegenerateDataError,
)
from .model import (
    DyadDesign,
    log_likelihood,
    observed_information,
    sufficient_statistics,
    validate_categories,
)
from .params import ParamVector

# Estimates whose sup-norm passes this bound are treated as evidence of a
# likelihood without a finite maximizer (e.g. a network where some dyad
# state never occurs in a separable direction).
_DIVERGENCE_BOUND = 1e3

_MAX_HALVINGS = 30


@dataclass(frozen=True)
class FitOptions:
    """Knobs shared by the fitters.

    free_mask marks coordinates allowed to move; frozen ones are held at
    exactly 0.  newton_* control fit_mle, prox_* control fit_rmle.
    gamma and weight_cap shape the adaptive penalty weights.
    kkt_tol guards the proximal solver's stopping rule: small parameter
    changes alone can fire long before optimality when the problem is
    ill-conditioned, so convergence additionally requires the per-dyad
    KKT residual to fall below kkt_tol (and a residual below kkt_tol is
    itself sufficient).  Set kkt_tol to 0 to stop on parameter change
    alone.  nbic_window bounds the model-selection search to grid values
    with lambda <= nbic_window * log N; the full path is still computed
    and reported.  exempt_structural removes the penalty from the
    reciprocity and density coordinates.
    """

    free_mask: Optional[np.ndarray] = None
    newton_tol: float = 1e-8
    newton_max_iter: int = 100
    prox_tol: float = 1e-7
    prox_max_iter: int = 5000
    gamma: float = 1.0
    weight_cap: float = 1e8
    kkt_tol: float = 1e-9
    nbic_window: float = 5.0
    exempt_structural: bool = False

    def __post_init__(self):
        if self.newton_tol <= 0 or self.prox_tol <= 0:
            raise DataError("tolerances must be positive")
        if self.newton_max_iter < 1 or self.prox_max_iter < 1:
            raise DataError("iteration caps must be at least 1")
        if self.gamma <= 0:
            raise DataError("gamma must be positive")
        if self.weight_cap <= 0:
            raise DataError("weight_cap must be positive")
        if self.kkt_tol < 0:
            raise DataError("kkt_tol must be non-negative")
        if self.nbic_window < 1.0:
            raise DataError("nbic_window must be at least 1 so the reference lambda stays searchable")


@dataclass(frozen=True)
class MleResult:
    theta_hat: ParamVector
    loglik: float
    iterations: int
    score_sup_norm: float
    converged: bool


@dataclass(frozen=True)
class RmleResult:
    theta_hat: ParamVector
    lam: float
    weights: np.ndarray
    active_set: tuple
    loglik: float
    nbic: float
    df: int
    kkt_violation: float
    converged: bool


@dataclass(frozen=True)
class PathResult:
    """Full regularization path with the NBIC-selected model.

    selected_index minimizes NBIC over grid values not exceeding
    selection_cap (= nbic_window * log N); reference_lambda = log N is
    always inside that window.  pilot and weights record the inputs the
    path was built from.
    """

    grid: np.ndarray
    records: tuple
    selected_index: int
    reference_lambda: float
    selection_cap: float
    pilot: MleResult
    weights: np.ndarray

    @property
    def selected(self) -> RmleResult:
        return self.records[self.selected_index]


@dataclass(frozen=True)
class InferenceResult:
    """Wald standard errors and confidence intervals on the active set."""

    active_set: tuple
    se: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    level: float


class _DyadObjective:
    """Negative log-likelihood with cached design products and buffers."""

    def __init__(self, y, design: DyadDesign):
        self.design = design
        self.zflat = design.zflat
        self.n_pairs = design.n_pairs
        self.s_obs = sufficient_statistics(y, design).s
        self._logits = np.empty(3 * design.n_pairs)
        self._work = np.empty((3, design.n_pairs))

    def _normalizers(self, theta: np.ndarray):
        np.dot(self.zflat, theta, out=self._logits)
        logits = self._logits.reshape(3, self.n_pairs)
        mx = np.maximum(logits.max(axis=0), 0.0)
        np.subtract(logits, mx, out=self._work)
        np.exp(self._work, out=self._work)
        denom = self._work.sum(axis=0)
        denom += np.exp(-mx)
        return mx, denom

    def negll(self, theta: np.ndarray) -> float:
        mx, denom = self._normalizers(theta)
        lse = np.log(denom)
        lse += mx
        return float(lse.sum() - self.s_obs @ theta)

    def negll_grad(self, theta: np.ndarray):
        """Value and gradient of the negative log-likelihood."""
        mx, denom = self._normalizers(theta)
        lse = np.log(denom)
        lse += mx
        value = float(lse.sum() - self.s_obs @ theta)
        np.divide(self._work, denom, out=self._work)
        grad = self.zflat.T @ self._work.reshape(-1)
        grad -= self.s_obs
        return value, grad


def _resolve_free_mask(free_mask, p: int) -> np.ndarray:
    if free_mask is None:
        return np.ones(p, dtype=bool)
    mask = np.asarray(free_mask, dtype=bool)
    if mask.shape != (p,):
        raise DataError(f"free_mask has shape {mask.shape}, expected ({p},)")
    if not mask.any():
        raise DataError("free_mask must leave at least one coordinate free")
    return mask


def _solve_newton_step(info_sub: np.ndarray, score_sub: np.ndarray, free_idx: np.ndarray):
    """Newton direction via eigendecomposition, flagging singular systems."""
    evals, evecs = np.linalg.eigh(info_sub)
    if evals[-1] <= 0 or evals[0] <= 1e-10 * max(evals[-1], 1.0):
        null = evecs[:, 0]
        offending = free_idx[np.abs(null) >= 0.5 * np.abs(null).max()]
        raise CollinearityError(offending.tolist())
    return evecs @ ((evecs.T @ score_sub) / evals)


def fit_mle(y, design: DyadDesign, options: Optional[FitOptions] = None) -> MleResult:
    """Damped Newton maximum likelihood on the free coordinates.

    Raises DegenerateDataError when estimates escape a fixed sup-norm
    bound (no finite maximizer) and CollinearityError when the observed
    information is singular on the free coordinates.
    """
    options = options if options is not None else FitOptions()
    y = validate_categories(y, design)
    if design.n_pairs < 1:
        raise DataError("at least one dyad is required")
    p = design.n_params
    mask = _resolve_free_mask(options.free_mask, p)
    free_idx = np.flatnonzero(mask)
    obj = _DyadObjective(y, design)

    theta = np.zeros(p)
    iterations = 0
    converged = False
    value, grad = obj.negll_grad(theta)
    while True:
        score_sub = -grad[free_idx]
        sup = float(np.abs(score_sub).max())
        if sup <= options.newton_tol:
            converged = True
            break
        if iterations >= options.newton_max_iter:
            break
        info = observed_information(design, theta)
        info_sub = info[np.ix_(free_idx, free_idx)]
        direction = _solve_newton_step(info_sub, score_sub, free_idx)

        # accept within float resolution of the objective, otherwise the
        # quadratic endgame stalls on roundoff noise
        slack = 1e-12 * max(1.0, abs(value))
        step = 1.0
        trial = theta.copy()
        for _ in range(_MAX_HALVINGS + 1):
            trial[free_idx] = theta[free_idx] + step * direction
            trial_value = obj.negll(trial)
            if trial_value <= value + slack:
                break
            step *= 0.5
        theta = trial
        value = trial_value
        iterations += 1
        if np.abs(theta).max() > _DIVERGENCE_BOUND:
            raise DegenerateDataError(
                "degenerate or separated data: estimates diverged beyond sup-norm 1e3"
            )
        value, grad = obj.negll_grad(theta)

    return MleResult(
        theta_hat=ParamVector(theta, design.n_groups),
        loglik=log_likelihood(y, design, theta),
        iterations=iterations,
        score_sup_norm=sup,
        converged=converged,
    )


def adaptive_weights(theta_tilde, gamma: float = 1.0, cap: float = 1e8) -> np.ndarray:
    """Penalty weights 1/|pilot estimate|^gamma, capped for zero pilots."""
    if gamma <= 0:
        raise DataError("gamma must be positive")
    if isinstance(theta_tilde, ParamVector):
        theta_tilde = theta_tilde.theta
    theta_tilde = np.asarray(theta_tilde, dtype=np.float64)
    with np.errstate(divide="ignore"):
        raw = 1.0 / np.abs(theta_tilde) ** gamma
    return np.minimum(raw, cap)


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0); elementwise on arrays."""
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def _kkt_violation(grad_negll, theta, thresholds, n_pairs: int, mask) -> float:
    """Per-dyad KKT residual of the penalized problem."""
    nonzero = theta != 0.0
    resid = np.where(
        nonzero,
        np.abs(grad_negll + thresholds * np.sign(theta)),
        np.maximum(np.abs(grad_negll) - thresholds, 0.0),
    )
    resid = resid[mask]
    return float(resid.max() / n_pairs) if resid.size else 0.0


def _fista(obj, lam, weights, x0, options, mask, step, metric=None):
    """Monotone accelerated proximal gradient with backtracking.

    metric, when given, is a positive diagonal preconditioner (typically
    the information diagonal at the pilot estimate); it rescales the
    proximal step without changing the minimizer.  Returns
    (x, iterations, converged, step, kkt); the step size is returned so
    warm-started path fits can reuse it.
    """
    thresholds = lam * weights
    free = mask.astype(np.float64)
    if metric is None:
        metric = np.ones_like(weights)
    x = x0.copy()
    x[~mask] = 0.0
    fx = obj.negll(x)
    pen_x = float(thresholds @ np.abs(x))
    big_f = fx + pen_x
    yv = x.copy()
    t_mom = 1.0
    converged = False
    iterations = 0
    check_every = 10

    for it in range(1, options.prox_max_iter + 1):
        iterations = it
        fy, gy = obj.negll_grad(yv)
        gy *= free
        for _ in range(60):
            cand = soft_threshold(yv - step * gy / metric, step * thresholds / metric)
            delta = cand - yv
            f_cand = obj.negll(cand)
            bound = fy + gy @ delta + 0.5 * (delta @ (metric * delta)) / step
            if f_cand <= bound + 1e-10 * max(1.0, abs(fy)):
                break
            step *= 0.5
        pen_cand = float(thresholds @ np.abs(cand))
        f_total = f_cand + pen_cand
        if f_total > big_f + 1e-12 * max(1.0, abs(big_f)):
            if np.array_equal(yv, x):
                # prox step from the incumbent cannot improve: at optimum
                converged = True
                break
            yv = x.copy()
            t_mom = 1.0
            continue
        diff = float(np.abs(cand - x).max())
        x_prev = x
        x = cand
        fx = f_cand
        big_f = f_total
        param_quiet = diff < options.prox_tol * (1.0 + float(np.abs(x).max()))
        if options.kkt_tol <= 0:
            if param_quiet:
                converged = True
                break
        elif param_quiet or it % check_every == 0:
            _, gx = obj.negll_grad(x)
            if _kkt_violation(gx, x, thresholds, obj.n_pairs, mask) < options.kkt_tol:
                converged = True
                break
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        yv = x + ((t_mom - 1.0) / t_next) * (x - x_prev)
        t_mom = t_next

    _, g_final = obj.negll_grad(x)
    kkt = _kkt_violation(g_final, x, thresholds, obj.n_pairs, mask)
    return x, iterations, converged, step, kkt


def _validate_weights(weights, p: int, allow_zero: bool) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (p,):
        raise DataError(f"weights have shape {weights.shape}, expected ({p},)")
    if not np.all(np.isfinite(weights)):
        raise DataError("weights must be finite")
    if allow_zero:
        if np.any(weights < 0):
            raise DataError("weights must be non-negative")
    elif np.any(weights <= 0):
        raise DataError("weights must be positive")
    return weights


def _build_rmle_result(y, design, lam, weights, x, kkt, converged) -> RmleResult:
    active = tuple(int(k) for k in np.flatnonzero(x != 0.0))
    loglik = log_likelihood(y, design, x)
    return RmleResult(
        theta_hat=ParamVector(x, design.n_groups),
        lam=float(lam),
        weights=weights.copy(),
        active_set=active,
        loglik=loglik,
        nbic=nbic(loglik, len(active), design.n_pairs),
        df=len(active),
        kkt_violation=kkt,
        converged=converged,
    )


def fit_rmle(
    y,
    design: DyadDesign,
    lam: float,
    weights,
    init=None,
    options: Optional[FitOptions] = None,
) -> RmleResult:
    """Penalized fit at one penalty level.

    Minimizes the negative log-likelihood plus lam * sum_k w_k |theta_k|.
    Zero weights are allowed (unpenalized coordinates).  Non-convergence
    is reported through the converged flag, not an exception.
    """
    options = options if options is not None else FitOptions()
    y = validate_categories(y, design)
    if not np.isfinite(lam) or lam < 0:
        raise DataError("lambda must be finite and non-negative")
    p = design.n_params
    weights = _validate_weights(weights, p, allow_zero=True)
    mask = _resolve_free_mask(options.free_mask, p)
    if init is None:
        x0 = np.zeros(p)
    elif isinstance(init, ParamVector):
        x0 = init.as_array()
    else:
        x0 = np.asarray(init, dtype=np.float64).copy()
        if x0.shape != (p,):
            raise DataError(f"init has shape {x0.shape}, expected ({p},)")
    obj = _DyadObjective(y, design)
    x, _, converged, _, kkt = _fista(obj, lam, weights, x0, options, mask, step=1.0)
    return _build_rmle_result(y, design, lam, weights, x, kkt, converged)


def lambda_grid(y, design: DyadDesign, weights, n_points: int = 50) -> np.ndarray:
    """Descending log-spaced penalty grid from lambda_max down 4 decades.

    lambda_max is the smallest penalty that zeroes every penalized
    coordinate (largest weighted score magnitude at the origin, nudged
    up one part in 1e12 so the zero fit is exact in floating point).
    The reference value log N is always inserted.
    """
    y = validate_categories(y, design)
    if n_points < 2:
        raise DataError("n_points must be at least 2")
    weights = _validate_weights(weights, design.n_params, allow_zero=True)
    obj = _DyadObjective(y, design)
    _, grad0 = obj.negll_grad(np.zeros(design.n_params))
    penalized = weights > 0
    if not penalized.any():
        raise DataError("lambda_grid needs at least one positively weighted coordinate")
    ratios = np.abs(grad0[penalized]) / weights[penalized]
    lam_max = float(ratios.max())
    if lam_max == 0.0:
        raise DegenerateDataError(
            "score at the origin is zero; the penalty grid is undefined"
        )
    lam_top = lam_max * (1.0 + 1e-12)
    grid = np.geomspace(lam_top, lam_top * 1e-4, n_points)
    reference = math.log(design.n_pairs)
    grid = np.unique(np.append(grid, reference))[::-1]
    return grid


def nbic(loglik: float, df: int, n_dyads: int) -> float:
    """Network BIC: -loglik / sqrt(N) + log(N) * df."""
    if n_dyads < 1:
        raise DataError("n_dyads must be at least 1")
    if df < 0:
        raise DataError("df must be non-negative")
    return -loglik / math.sqrt(n_dyads) + math.log(n_dyads) * df


def fit_path(y, design: DyadDesign, options: Optional[FitOptions] = None) -> PathResult:
    """Adaptive-lasso path with NBIC model selection.

    Pipeline: unpenalized pilot fit, adaptive weights, descending lambda
    grid, warm-started penalized fits, then NBIC argmin over the search
    window lambda <= nbic_window * log N (ties resolve to the larger
    lambda, i.e. the sparser model).  The window keeps selection in the
    regime of the reference penalty log N; very large lambdas remain in
    the reported path but are not selection candidates, since their
    heavily shrunk fits can undercut the NBIC of the true model on small
    networks.
    """
    options = options if options is not None else FitOptions()
    y = validate_categories(y, design)
    pilot = fit_mle(y, design, options)
    if not pilot.converged:
        raise ConvergenceError(
            f"pilot fit did not converge in {options.newton_max_iter} iterations "
            f"(score sup-norm {pilot.score_sup_norm:.3e})"
        )
    weights = adaptive_weights(pilot.theta_hat, options.gamma, options.weight_cap)
    if options.exempt_structural:
        weights = weights.copy()
        weights[:2] = 0.0
    grid = lambda_grid(y, design, weights)
    mask = _resolve_free_mask(options.free_mask, design.n_params)

    # precondition the proximal solver with the curvature scale of each
    # coordinate at the pilot fit; this only reshapes the iteration
    info_diag = np.diag(observed_information(design, pilot.theta_hat.theta)).copy()
    metric = np.maximum(info_diag, 1e-6 * max(info_diag.max(), 1.0))

    obj = _DyadObjective(y, design)
    records = []
    solutions = []
    x = np.zeros(design.n_params)
    step = 1.0
    for i, lam in enumerate(grid):
        init = x
        if i >= 2:
            # the solution path is locally affine in lambda, so linear
            # extrapolation of the last two fits gives a better warm start
            gap_prev = grid[i - 2] - grid[i - 1]
            if gap_prev > 0:
                ratio = (grid[i - 1] - lam) / gap_prev
                init = x + (x - solutions[i - 2]) * ratio
        x, _, converged, step, kkt = _fista(
            obj, lam, weights, init, options, mask, step, metric=metric
        )
        solutions.append(x)
        records.append(_build_rmle_result(y, design, lam, weights, x, kkt, converged))
        step *= 2.0

    reference = math.log(design.n_pairs)
    cap = options.nbic_window * reference
    candidates = np.flatnonzero(grid <= cap)
    nbics = np.array([records[i].nbic for i in candidates])
    selected_index = int(candidates[int(np.argmin(nbics))])
    return PathResult(
        grid=grid,
        records=tuple(records),
        selected_index=selected_index,
        reference_lambda=reference,
        selection_cap=cap,
        pilot=pilot,
        weights=weights,
    )


def standard_errors(
    design: DyadDesign,
    theta_hat,
    active_set,
    level: float = 0.95,
) -> InferenceResult:
    """Wald inference from the observed information on the active set.

    The information of the full dataset is restricted to the active
    coordinates and inverted; no per-dyad averaging, so standard errors
    carry the 1/sqrt(N) scale directly.
    """
    active = tuple(sorted(int(k) for k in active_set))
    if len(active) == 0:
        raise DataError("active_set must be nonempty")
    if len(set(active)) != len(active):
        raise DataError("active_set has duplicate indices")
    p = design.n_params
    if active[0] < 0 or active[-1] >= p:
        raise DataError(f"active_set indices must lie in [0, {p - 1}]")
    if not 0.0 < level < 1.0:
        raise DataError("confidence level must lie in (0, 1)")

    if isinstance(theta_hat, ParamVector):
        theta_arr = theta_hat.theta
    else:
        theta_arr = np.asarray(theta_hat, dtype=np.float64)
    info = observed_information(design, theta_arr)
    idx = np.array(active)
    sub = info[np.ix_(idx, idx)]
    evals, evecs = np.linalg.eigh(sub)
    if evals[-1] <= 0 or evals[0] <= 1e-10 * max(evals[-1], 1.0):
        null = evecs[:, 0]
        offending = idx[np.abs(null) >= 0.5 * np.abs(null).max()]
        raise CollinearityError(offending.tolist())
    inv_diag = ((evecs / evals) * evecs).sum(axis=1)
    se = np.sqrt(inv_diag)
    if level == 0.95:
        z = 1.96
    else:
        from scipy.stats import norm

        z = float(norm.ppf(0.5 * (1.0 + level)))
    center = theta_arr[idx]
    return InferenceResult(
        active_set=active,
        se=se,
        ci_lower=center - z * se,
        ci_upper=center + z * se,
        level=level,
    )
