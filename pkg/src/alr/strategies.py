"""Pool-based sample-selection rules over a labeled/unlabeled ledger.

Eight selection rules operate on a :class:`PoolState`:

* `random` -- uniform draw from the unlabeled set.
* `gsx` -- greedy sampling in the input space: pick the candidate whose
  nearest labeled sample is farthest away (Euclidean distance).
* `gsy` -- greedy sampling in one task's output space: pick the candidate
  whose predicted output is farthest from every labeled output.
* `igs` -- input and output distances multiplied per labeled sample before
  taking the min, balancing diversity in both spaces.
* `mt_gsy` / `mt_igs` -- multi-task variants combining per-task output
  distances by product, so no task's scale dominates the others.
* `qbc` -- maximum prediction variance across a bootstrap committee.
* `emcm` -- maximum expected model change, estimated from bootstrap
  disagreement times the candidate's feature vector.

:func:`select_next` applies the shared phase logic: the first pick is the
sample closest to the feature centroid (greedy kinds) or a random draw
(random/qbc/emcm); picks before the k0 threshold use input-space greedy
sampling or random draws respectively; from k0 onward each rule applies its
own criterion. Ties always break toward the smallest pool index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import Dataset
from .regression import LinearModel, SolverConfig, fit, predict

__all__ = [
    "GS_FAMILY",
    "SINGLE_TASK_KINDS",
    "STRATEGY_KINDS",
    "StrategySpec",
    "PoolState",
    "k0_default",
    "parse_strategy",
    "strategy_to_string",
    "select_initial_centroid",
    "gs_input_step",
    "gsy_step",
    "mtgsy_step",
    "igs_step",
    "mtigs_step",
    "qbc_step",
    "emcm_step",
    "random_step",
    "select_next",
]

GS_FAMILY = frozenset({"gsx", "gsy", "igs", "mt_gsy", "mt_igs"})
RANDOM_INIT_KINDS = frozenset({"random", "qbc", "emcm"})
SINGLE_TASK_KINDS = frozenset({"gsy", "igs", "qbc", "emcm"})
STRATEGY_KINDS = tuple(sorted(GS_FAMILY | RANDOM_INIT_KINDS))


def k0_default(d: int) -> int:
    """Initial labeled count needed before model-based selection: one per feature."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return d


@dataclass(frozen=True)
class StrategySpec:
    """Which selection rule to run and its knobs.

    `focus_task` names the task a single-task rule (gsy/igs/qbc/emcm) targets
    on multi-task data; it may stay None for single-task data (task 0) and is
    ignored by the other kinds. `committee_size` is the bootstrap ensemble
    size for qbc/emcm.
    """

    kind: str
    focus_task: int | None = None
    committee_size: int = 4

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(
                f"unknown strategy kind '{self.kind}', expected one of {STRATEGY_KINDS}"
            )
        if self.focus_task is not None and self.focus_task < 0:
            raise ValueError("focus_task must be a nonnegative task index")
        if self.committee_size < 2:
            raise ValueError("committee_size must be >= 2")


def parse_strategy(text: str) -> StrategySpec:
    """Parse the strategy mini-grammar, e.g. "mt_igs", "gsy:task=1", "qbc:task=0,committee=4"."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    focus_task = None
    committee = 4
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep or not value:
                raise ValueError(f"malformed strategy option '{item}' in '{text}'")
            if key == "task":
                focus_task = int(value)
            elif key == "committee":
                committee = int(value)
            else:
                raise ValueError(f"unknown strategy option '{key}' in '{text}'")
    return StrategySpec(kind=kind, focus_task=focus_task, committee_size=committee)


def strategy_to_string(spec: StrategySpec) -> str:
    """Canonical grammar string for a StrategySpec (inverse of parse_strategy)."""
    parts = []
    if spec.kind in SINGLE_TASK_KINDS and spec.focus_task is not None:
        parts.append(f"task={spec.focus_task}")
    if spec.kind in ("qbc", "emcm") and spec.committee_size != 4:
        parts.append(f"committee={spec.committee_size}")
    return spec.kind + (":" + ",".join(parts) if parts else "")


class PoolState:
    """The active-learning ledger for one experiment run.

    Tracks the ordered labeled index list, the unlabeled remainder, the
    per-task fitted models, and a seeded random stream used by the
    random/qbc/emcm rules. Confined to a single run; advance it sequentially.
    """

    def __init__(self, pool: Dataset, rng=0, k0: int | None = None):
        self.pool = pool
        self.labeled: list[int] = []
        self._is_labeled = np.zeros(pool.n_samples, dtype=bool)
        self.models: list[LinearModel] | None = None
        self.rng = np.random.default_rng(rng)
        self.k0 = k0_default(pool.n_features) if k0 is None else int(k0)
        if self.k0 < 1:
            raise ValueError("k0 must be >= 1")
        self._models_k = -1

    @property
    def n_labeled(self) -> int:
        return len(self.labeled)

    @property
    def n_unlabeled(self) -> int:
        return self.pool.n_samples - len(self.labeled)

    def unlabeled_indices(self) -> np.ndarray:
        """Unlabeled pool indices in ascending order."""
        return np.flatnonzero(~self._is_labeled)

    def add(self, index: int) -> None:
        """Move one index from the unlabeled set to the end of the labeled list."""
        index = int(index)
        if not 0 <= index < self.pool.n_samples:
            raise ValueError(f"index {index} outside pool of size {self.pool.n_samples}")
        if self._is_labeled[index]:
            raise ValueError(f"index {index} is already labeled")
        self.labeled.append(index)
        self._is_labeled[index] = True

    def fit_models(self, solver: SolverConfig) -> None:
        """Refit all per-task models from scratch on the current labeled set."""
        if self.n_labeled < self.k0:
            raise ValueError(
                f"need at least k0={self.k0} labeled samples to fit models, "
                f"have {self.n_labeled}"
            )
        X = self.pool.features[self.labeled]
        self.models = [
            fit(X, self.pool.labels[self.labeled, p], solver)
            for p in range(self.pool.n_tasks)
        ]
        self._models_k = self.n_labeled

    def set_models(self, models) -> None:
        """Install externally fitted models (one per task) for the current labeled set."""
        models = list(models)
        if len(models) != self.pool.n_tasks:
            raise ValueError(
                f"need {self.pool.n_tasks} models, got {len(models)}"
            )
        self.models = models
        self._models_k = self.n_labeled

    def _require_models(self) -> list[LinearModel]:
        if self.models is None:
            raise ValueError("no fitted models; call fit_models() first")
        if self._models_k != self.n_labeled:
            raise ValueError("models are stale; refit after labeling")
        return self.models


def _check_has_unlabeled(state: PoolState) -> np.ndarray:
    unlabeled = state.unlabeled_indices()
    if unlabeled.size == 0:
        raise ValueError("no unlabeled samples left")
    return unlabeled


def select_initial_centroid(state: PoolState) -> int:
    """First pick: the pool sample nearest the feature centroid."""
    if state.n_labeled != 0:
        raise ValueError("initial selection requires an empty labeled set")
    feats = state.pool.features
    centroid = feats.mean(axis=0)
    dists = np.linalg.norm(feats - centroid, axis=1)
    return int(np.argmin(dists))


def _min_input_distances(state: PoolState, unlabeled: np.ndarray) -> np.ndarray:
    pairwise = cdist(state.pool.features[unlabeled], state.pool.features[state.labeled])
    return pairwise.min(axis=1)


def gs_input_step(state: PoolState) -> int:
    """Pick the candidate whose nearest labeled sample is farthest (input space)."""
    if state.n_labeled < 1:
        raise ValueError("input-space greedy step needs at least one labeled sample")
    unlabeled = _check_has_unlabeled(state)
    scores = _min_input_distances(state, unlabeled)
    return int(unlabeled[np.argmax(scores)])


def _output_gaps(state: PoolState, unlabeled: np.ndarray, task: int) -> np.ndarray:
    """``|prediction(candidate) - labeled output|`` for one task, candidates x labeled."""
    models = state._require_models()
    preds = predict(models[task], state.pool.features[unlabeled])
    labeled_y = state.pool.labels[state.labeled, task]
    return np.abs(preds[:, None] - labeled_y[None, :])


def _output_gap_products(state: PoolState, unlabeled: np.ndarray) -> np.ndarray:
    """Across-task product of output gaps, candidates x labeled."""
    prod = np.ones((unlabeled.size, state.n_labeled))
    for p in range(state.pool.n_tasks):
        prod *= _output_gaps(state, unlabeled, p)
    return prod


def gsy_step(state: PoolState, task: int) -> int:
    """Pick the candidate whose predicted output is farthest from all labeled outputs."""
    unlabeled = _check_has_unlabeled(state)
    scores = _output_gaps(state, unlabeled, task).min(axis=1)
    return int(unlabeled[np.argmax(scores)])


def mtgsy_step(state: PoolState) -> int:
    """Multi-task output-space greedy step.

    Per labeled sample, the output gaps of all tasks are combined by product
    (so rescaling one task cannot dominate), and the min over labeled samples
    of that product is maximized. Note the min applies to the per-sample
    product, not the other way around.
    """
    unlabeled = _check_has_unlabeled(state)
    scores = _output_gap_products(state, unlabeled).min(axis=1)
    return int(unlabeled[np.argmax(scores)])


def igs_step(state: PoolState, task: int) -> int:
    """Input-distance times output-gap greedy step for one task.

    The product is taken per labeled sample before the min, so a candidate
    scores low if any labeled sample is close in input and output jointly.
    """
    unlabeled = _check_has_unlabeled(state)
    pairwise = cdist(state.pool.features[unlabeled], state.pool.features[state.labeled])
    scores = (pairwise * _output_gaps(state, unlabeled, task)).min(axis=1)
    return int(unlabeled[np.argmax(scores)])


def mtigs_step(state: PoolState) -> int:
    """Multi-task variant of :func:`igs_step`: input distance times the across-task gap product."""
    unlabeled = _check_has_unlabeled(state)
    pairwise = cdist(state.pool.features[unlabeled], state.pool.features[state.labeled])
    scores = (pairwise * _output_gap_products(state, unlabeled)).min(axis=1)
    return int(unlabeled[np.argmax(scores)])


def _bootstrap_indices(rng: np.random.Generator, k: int) -> np.ndarray:
    # redraw until the resample holds at least 2 distinct rows
    while True:
        idx = rng.integers(0, k, size=k)
        if np.unique(idx).size >= 2:
            return idx


def _bootstrap_predictions(
    state: PoolState, unlabeled: np.ndarray, task: int, committee_size: int
) -> np.ndarray:
    """Committee predictions on the candidates, one row per bootstrap model.

    Committee members reuse the solver configuration of the fitted main model.
    """
    if state.n_labeled < 2:
        raise ValueError("labeled set too small to bootstrap (need >= 2 samples)")
    solver = state._require_models()[task].solver
    X = state.pool.features[state.labeled]
    y = state.pool.labels[state.labeled, task]
    candidates = state.pool.features[unlabeled]
    preds = np.empty((committee_size, unlabeled.size))
    for b in range(committee_size):
        idx = _bootstrap_indices(state.rng, state.n_labeled)
        member = fit(X[idx], y[idx], solver)
        preds[b] = predict(member, candidates)
    return preds


def qbc_step(state: PoolState, task: int, committee_size: int = 4) -> int:
    """Pick the candidate with maximum prediction variance across a bootstrap committee."""
    unlabeled = _check_has_unlabeled(state)
    preds = _bootstrap_predictions(state, unlabeled, task, committee_size)
    scores = preds.var(axis=0)
    return int(unlabeled[np.argmax(scores)])


def emcm_step(state: PoolState, task: int, committee_size: int = 4) -> int:
    """Pick the candidate with maximum expected model change.

    The change for candidate x is the average over bootstrap models of
    ``||(f(x) - f_b(x)) * x||``, a gradient-of-squared-loss surrogate with
    bootstrap predictions standing in for the unknown label.
    """
    unlabeled = _check_has_unlabeled(state)
    main = state._require_models()[task]
    candidates = state.pool.features[unlabeled]
    main_preds = predict(main, candidates)
    boot = _bootstrap_predictions(state, unlabeled, task, committee_size)
    mean_gap = np.abs(main_preds[None, :] - boot).mean(axis=0)
    scores = mean_gap * np.linalg.norm(candidates, axis=1)
    return int(unlabeled[np.argmax(scores)])


def random_step(state: PoolState) -> int:
    """Uniform draw from the unlabeled set via the state's random stream."""
    unlabeled = _check_has_unlabeled(state)
    return int(unlabeled[state.rng.integers(unlabeled.size)])


def _resolve_focus_task(spec: StrategySpec, n_tasks: int) -> int:
    task = spec.focus_task
    if task is None:
        if spec.kind in SINGLE_TASK_KINDS and n_tasks > 1:
            raise ValueError(
                f"strategy '{spec.kind}' needs a focus task on {n_tasks}-task data"
            )
        task = 0
    if task >= n_tasks:
        raise ValueError(f"focus_task {task} out of range for {n_tasks} tasks")
    return task


def select_next(state: PoolState, spec: StrategySpec) -> int:
    """Dispatch one query according to the strategy's phase logic."""
    _check_has_unlabeled(state)
    k = state.n_labeled
    if spec.kind in GS_FAMILY:
        if k == 0:
            return select_initial_centroid(state)
        if k < state.k0 or spec.kind == "gsx":
            return gs_input_step(state)
        if spec.kind == "mt_gsy":
            return mtgsy_step(state)
        if spec.kind == "mt_igs":
            return mtigs_step(state)
        task = _resolve_focus_task(spec, state.pool.n_tasks)
        if spec.kind == "gsy":
            return gsy_step(state, task)
        return igs_step(state, task)

    if spec.kind == "random" or k < state.k0:
        return random_step(state)
    task = _resolve_focus_task(spec, state.pool.n_tasks)
    if spec.kind == "qbc":
        return qbc_step(state, task, spec.committee_size)
    return emcm_step(state, task, spec.committee_size)
