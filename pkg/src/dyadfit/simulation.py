"""Seeded simulation studies: feature generation, network sampling,
replication harness, and the estimation / selection metrics tables.

Replications are independent: replication r rebuilds its generator from
a splittable seed derived from (master seed, r), so results do not
depend on execution order or worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, DyadfitError, StudyError
from .estimation import (
    FitOptions,
    fit_mle,
    fit_path,
    standard_errors,
)
from .features import FeatureTable, GroupSpec
from .model import DyadDesign, build_dyad_design, dyad_probability_matrix
from .params import ParamVector, param_length

_DISTRIBUTIONS = ("standard-normal", "bernoulli")
FIT_KINDS = ("mle", "rmle-path")


@dataclass(frozen=True)
class GroupGenerator:
    """Sampling law plus design kinds for one synthetic feature group."""

    distribution: str
    prob: float = 0.5
    n_columns: int = 1
    similarity: str = "gaussian"
    magnitude: str = "identity"
    name: str = ""

    def __post_init__(self):
        if self.distribution not in _DISTRIBUTIONS:
            raise DataError(
                f"unknown distribution {self.distribution!r}; expected one of {_DISTRIBUTIONS}"
            )
        if self.distribution == "bernoulli" and not 0.0 < self.prob < 1.0:
            raise DataError("bernoulli probability must lie strictly in (0, 1)")
        if self.n_columns < 1:
            raise DataError("n_columns must be at least 1")


@dataclass(frozen=True)
class GeneratorSpec:
    """Everything needed to draw one synthetic network replication."""

    n: int
    groups: tuple
    theta_true: ParamVector
    seed: int

    def __post_init__(self):
        if self.n < 2:
            raise DataError("node count must be at least 2")
        if self.seed < 0:
            raise DataError("seed must be non-negative")
        groups = tuple(self.groups)
        if len(groups) < 1:
            raise DataError("at least one feature group is required")
        if len(self.theta_true) != param_length(len(groups)):
            raise DataError(
                f"theta_true has length {len(self.theta_true)}, "
                f"expected {param_length(len(groups))} for {len(groups)} groups"
            )
        object.__setattr__(self, "groups", groups)

    @property
    def n_groups(self) -> int:
        return len(self.groups)


def default_study_spec(n: int, seed: int) -> GeneratorSpec:
    """The packaged benchmark design: two standard-normal feature groups,
    two bernoulli(0.5) groups, gaussian similarity, identity magnitude,
    and a sparse strong-signal truth (reciprocity 6, density -6, one
    active homophily, out, and in coefficient of +/-6)."""
    groups = tuple(
        [GroupGenerator("standard-normal", name=f"V{i + 1}") for i in range(2)]
        + [GroupGenerator("bernoulli", prob=0.5, name=f"V{i + 3}") for i in range(2)]
    )
    theta = ParamVector.from_blocks(
        reciprocity=6.0,
        density=-6.0,
        homophily=[6.0, 0.0, 0.0, 0.0],
        out_effects=[-6.0, 0.0, 0.0, 0.0],
        in_effects=[6.0, 0.0, 0.0, 0.0],
    )
    return GeneratorSpec(n=n, groups=groups, theta_true=theta, seed=seed)


def generate_features(spec: GeneratorSpec, rng: np.random.Generator) -> FeatureTable:
    """Draw a feature table, one group at a time, from the given generator."""
    blocks = []
    specs = []
    for k, group in enumerate(spec.groups):
        shape = (spec.n, group.n_columns)
        if group.distribution == "standard-normal":
            block = rng.standard_normal(shape)
        else:
            block = (rng.random(shape) < group.prob).astype(np.float64)
        blocks.append(block)
        specs.append(
            GroupSpec(
                similarity=group.similarity,
                magnitude=group.magnitude,
                name=group.name or f"g{k}",
            )
        )
    return FeatureTable(
        node_ids=tuple(range(spec.n)),
        groups=tuple(blocks),
        specs=tuple(specs),
    )


def sample_network(theta, design: DyadDesign, rng: np.random.Generator) -> np.ndarray:
    """Draw one network: inverse-CDF on one uniform per pair, in pair order."""
    probs = dyad_probability_matrix(design, theta)
    cum = np.cumsum(probs[:, :3], axis=1)
    u = rng.random(design.n_pairs)
    y = 1 + (u >= cum[:, 0]).astype(np.int64)
    y += (u >= cum[:, 1]).astype(np.int64)
    y += (u >= cum[:, 2]).astype(np.int64)
    return y


@dataclass(frozen=True)
class ReplicationSet:
    """Fits from R successful replications, ordered by replication index.

    ses rows are zero off the replication's active set.  failures
    records (replication index, error class name, message) for excluded
    replications.
    """

    estimates: np.ndarray
    ses: np.ndarray
    active_sets: tuple
    seeds: tuple
    failures: tuple
    fit_kind: str


def replication_seed(master_seed: int, r: int) -> np.random.SeedSequence:
    """Splittable per-replication seed; replication r is reproducible alone."""
    return np.random.SeedSequence((master_seed, r))


def _run_one(spec: GeneratorSpec, r: int, fit_kind: str, options: Optional[FitOptions]):
    rng = np.random.default_rng(replication_seed(spec.seed, r))
    features = generate_features(spec, rng)
    design = build_dyad_design(features)
    y = sample_network(spec.theta_true, design, rng)
    p = design.n_params
    if fit_kind == "mle":
        res = fit_mle(y, design, options)
        if not res.converged:
            raise DyadfitError(
                f"replication fit did not converge (score sup-norm {res.score_sup_norm:.3e})"
            )
        theta = res.theta_hat.theta
        active = tuple(range(p))
    else:
        path = fit_path(y, design, options)
        sel = path.selected
        if not sel.converged:
            raise DyadfitError(
                f"selected path fit did not converge (lambda {sel.lam:.4g})"
            )
        theta = sel.theta_hat.theta
        active = sel.active_set
    ses = np.zeros(p)
    if active:
        inference = standard_errors(design, theta, active)
        ses[list(active)] = inference.se
    return np.array(theta), ses, active


def _worker(args):
    spec, r, fit_kind, options = args
    try:
        theta, ses, active = _run_one(spec, r, fit_kind, options)
        return r, (theta, ses, active), None
    except DyadfitError as exc:
        return r, None, (type(exc).__name__, str(exc))


def run_replications(
    spec: GeneratorSpec,
    R: int,
    fit_kind: str = "rmle-path",
    options: Optional[FitOptions] = None,
    workers: int = 1,
) -> ReplicationSet:
    """Run R seeded replications and collect fits.

    Failed replications are excluded and recorded; more than 5% failures
    aborts the study.  Results are keyed by replication index, so worker
    count never changes the output.
    """
    if fit_kind not in FIT_KINDS:
        raise DataError(f"fit_kind must be one of {FIT_KINDS}, got {fit_kind!r}")
    if R < 1:
        raise DataError("R must be at least 1")
    if workers < 1:
        raise DataError("workers must be at least 1")

    jobs = [(spec, r, fit_kind, options) for r in range(R)]
    if workers == 1:
        raw = [_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, R // (4 * workers))
            raw = list(pool.map(_worker, jobs, chunksize=chunk))
    raw.sort(key=lambda item: item[0])

    estimates, ses, actives, seeds, failures = [], [], [], [], []
    for r, payload, failure in raw:
        if failure is not None:
            failures.append((r, failure[0], failure[1]))
            continue
        theta, se_row, active = payload
        estimates.append(theta)
        ses.append(se_row)
        actives.append(tuple(active))
        seeds.append((spec.seed, r))

    if len(failures) > 0.05 * R:
        summary = "; ".join(f"r={r}: {name}: {msg}" for r, name, msg in failures[:5])
        raise StudyError(
            f"{len(failures)} of {R} replications failed (>5%); first failures: {summary}"
        )
    return ReplicationSet(
        estimates=np.array(estimates),
        ses=np.array(ses),
        active_sets=tuple(actives),
        seeds=tuple(seeds),
        failures=tuple(failures),
        fit_kind=fit_kind,
    )


@dataclass(frozen=True)
class EstimationMetrics:
    """Per-coordinate accuracy summaries over replications."""

    bias: np.ndarray
    sd: np.ndarray
    rmse: np.ndarray
    ase: np.ndarray
    cp: np.ndarray


@dataclass(frozen=True)
class SelectionMetrics:
    """Active-set recovery summaries with their replication SDs."""

    cf: float
    cf_sd: float
    tpr: float
    tpr_sd: float
    fpr: float
    fpr_sd: float
    ms: float
    ms_sd: float


@dataclass(frozen=True)
class MetricsReport:
    """One study's metrics; selection is None for plain MLE studies."""

    n: int
    n_dyads: int
    n_requested: int
    n_used: int
    n_failures: int
    fit_kind: str
    seed: int
    theta_true: np.ndarray
    estimation: EstimationMetrics
    selection: Optional[SelectionMetrics]


def estimation_metrics(reps: ReplicationSet, theta_true) -> EstimationMetrics:
    """BIAS, SD (divisor R), RMSE, average SE, and 95% coverage.

    SD uses the population divisor so RMSE^2 = BIAS^2 + SD^2 holds
    exactly.  Coverage counts replications whose theta_hat +/- 1.96 SE
    interval contains the truth.
    """
    if isinstance(theta_true, ParamVector):
        theta_true = theta_true.theta
    theta_true = np.asarray(theta_true, dtype=np.float64)
    est = reps.estimates
    if est.ndim != 2 or est.shape[0] < 2:
        raise DataError("estimation metrics need at least 2 replications")
    bias = est.mean(axis=0) - theta_true
    sd = est.std(axis=0)
    rmse = np.sqrt(bias * bias + sd * sd)
    ase = reps.ses.mean(axis=0)
    covered = np.abs(est - theta_true) <= 1.96 * reps.ses
    cp = covered.mean(axis=0)
    return EstimationMetrics(bias=bias, sd=sd, rmse=rmse, ase=ase, cp=cp)


def selection_metrics(reps: ReplicationSet, true_active) -> SelectionMetrics:
    """Correct-fit rate, true/false positive rates, and mean model size."""
    p = reps.estimates.shape[1]
    truth = frozenset(int(k) for k in true_active)
    if not truth or not truth.issubset(range(p)) or len(truth) >= p:
        raise DataError("true_active must be a nonempty proper subset of the coordinates")
    n_true = len(truth)
    n_false = p - n_true
    cf, tpr, fpr, ms = [], [], [], []
    for active in reps.active_sets:
        chosen = frozenset(active)
        cf.append(1.0 if chosen == truth else 0.0)
        tpr.append(len(chosen & truth) / n_true)
        fpr.append(len(chosen - truth) / n_false)
        ms.append(float(len(chosen)))
    cf = np.array(cf)
    tpr = np.array(tpr)
    fpr = np.array(fpr)
    ms = np.array(ms)
    return SelectionMetrics(
        cf=float(cf.mean()),
        cf_sd=float(cf.std()),
        tpr=float(tpr.mean()),
        tpr_sd=float(tpr.std()),
        fpr=float(fpr.mean()),
        fpr_sd=float(fpr.std()),
        ms=float(ms.mean()),
        ms_sd=float(ms.std()),
    )


def run_study(
    spec: GeneratorSpec,
    R: int,
    fit_kind: str = "rmle-path",
    options: Optional[FitOptions] = None,
    workers: int = 1,
) -> MetricsReport:
    """Replications plus both metric tables in one report."""
    reps = run_replications(spec, R, fit_kind=fit_kind, options=options, workers=workers)
    est = estimation_metrics(reps, spec.theta_true)
    selection = None
    if fit_kind == "rmle-path":
        true_active = tuple(int(k) for k in np.flatnonzero(spec.theta_true.theta != 0.0))
        selection = selection_metrics(reps, true_active)
    return MetricsReport(
        n=spec.n,
        n_dyads=spec.n * (spec.n - 1) // 2,
        n_requested=R,
        n_used=reps.estimates.shape[0],
        n_failures=len(reps.failures),
        fit_kind=fit_kind,
        seed=spec.seed,
        theta_true=spec.theta_true.theta.copy(),
        estimation=est,
        selection=selection,
    )
