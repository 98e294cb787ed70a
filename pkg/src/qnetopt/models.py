"""Model training, multi-objective prediction, and 5-fold model selection.

Both regressor kinds fit one independent single-output head per objective.
``select_model`` compares them by cross-validated mean absolute error on a
shared fold partition and retrains the winner on the full dataset; ties go
to the random forest.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, InsufficientDataError, QnetoptError
from .forest import ForestHead, RfSettings, fit_forest
from .svr import SvrHead, SvrSettings, fit_svr

RANDOM_FOREST = "random-forest"
SUPPORT_VECTOR = "support-vector"
MODEL_FILE_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    """Feature rows with aligned multi-objective target rows."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        Y = np.asarray(self.Y, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.shape[0] != Y.shape[0]:
            raise DomainError(f"feature rows ({X.shape[0]}) and target rows ({Y.shape[0]}) differ")
        if Y.shape[1] < 1:
            raise DomainError("need at least one objective column")
        if X.size and not np.isfinite(X).all():
            raise DomainError("features contain non-finite entries")
        if Y.size and not np.isfinite(Y).all():
            raise DomainError("targets contain non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.X.shape[1]

    @property
    def target_dim(self) -> int:
        return self.Y.shape[1]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.Y[rows])


@dataclass
class TrainedModel:
    kind: str
    heads: list
    feature_dim: int
    target_dim: int
    metadata: dict = field(default_factory=dict)

    def predict(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.feature_dim:
            raise DomainError(f"expected {self.feature_dim} features, got {x.shape[0]}")
        return self.predict_batch(x[None, :])[0]

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.feature_dim:
            raise DomainError(f"expected {self.feature_dim} features, got {X.shape[1]}")
        out = np.empty((X.shape[0], self.target_dim))
        for j, head in enumerate(self.heads):
            out[:, j] = head.predict_batch(X)
        return out


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def train_rf(data: Dataset, hyper: Optional[RfSettings] = None, rng=None) -> TrainedModel:
    """One bootstrapped forest per target column."""
    hyper = hyper or RfSettings()
    if data.n_rows == 0:
        raise InsufficientDataError("empty dataset")
    gen = _as_rng(rng)
    heads = [fit_forest(data.X, data.Y[:, j], hyper, gen) for j in range(data.target_dim)]
    meta = {"hyper": hyper.__dict__.copy(), "seed": rng if isinstance(rng, int) else None}
    return TrainedModel(RANDOM_FOREST, heads, data.feature_dim, data.target_dim, meta)


def train_svr(data: Dataset, hyper: Optional[SvrSettings] = None) -> TrainedModel:
    """One epsilon-SVR per target column; raises ConvergenceError past the iteration cap."""
    hyper = hyper or SvrSettings()
    if data.n_rows == 0:
        raise InsufficientDataError("empty dataset")
    heads = [fit_svr(data.X, data.Y[:, j], hyper) for j in range(data.target_dim)]
    meta = {"hyper": hyper.__dict__.copy()}
    return TrainedModel(SUPPORT_VECTOR, heads, data.feature_dim, data.target_dim, meta)


def _train(data: Dataset, kind: str, rf_settings, svr_settings, rng) -> TrainedModel:
    if kind == RANDOM_FOREST:
        return train_rf(data, rf_settings, rng)
    if kind == SUPPORT_VECTOR:
        return train_svr(data, svr_settings)
    raise DomainError(f"unknown model kind {kind!r}")


def _fold_partition(n_rows: int, folds: int, rng) -> list:
    perm = _as_rng(rng).permutation(n_rows)
    return [np.sort(f) for f in np.array_split(perm, folds)]


def _cv_mae(data: Dataset, kind: str, partition, rf_settings, svr_settings, rng) -> float:
    gen = _as_rng(rng)
    fold_seeds = gen.integers(0, 2**63 - 1, size=len(partition))
    maes = []
    for fold, fold_seed in zip(partition, fold_seeds):
        mask = np.ones(data.n_rows, dtype=bool)
        mask[fold] = False
        model = _train(data.subset(mask), kind, rf_settings, svr_settings, int(fold_seed))
        pred = model.predict_batch(data.X[fold])
        maes.append(float(np.abs(pred - data.Y[fold]).mean()))
    return float(np.mean(maes))


def cross_validate(
    data: Dataset,
    kind: str,
    folds: int = 5,
    rng=None,
    rf_settings: Optional[RfSettings] = None,
    svr_settings: Optional[SvrSettings] = None,
) -> float:
    """Mean absolute error over a seeded k-fold partition (all target columns pooled)."""
    if data.n_rows < folds:
        raise InsufficientDataError(f"{data.n_rows} rows cannot be split into {folds} folds")
    gen = _as_rng(rng)
    partition = _fold_partition(data.n_rows, folds, gen)
    return _cv_mae(data, kind, partition, rf_settings, svr_settings, gen)


def select_model(
    data: Dataset,
    rng=None,
    folds: int = 5,
    rf_settings: Optional[RfSettings] = None,
    svr_settings: Optional[SvrSettings] = None,
) -> TrainedModel:
    """Cross-validate both kinds on one shared partition, retrain the winner.

    If one kind fails to train the other is selected; exact ties go to the
    random forest. The CV errors land in the returned model's metadata.
    """
    if data.n_rows < folds:
        raise InsufficientDataError(f"{data.n_rows} rows cannot be split into {folds} folds")
    gen = _as_rng(rng)
    partition = _fold_partition(data.n_rows, folds, gen)
    maes = {}
    failures = {}
    for kind in (RANDOM_FOREST, SUPPORT_VECTOR):
        try:
            maes[kind] = _cv_mae(data, kind, partition, rf_settings, svr_settings, gen)
        except QnetoptError as exc:
            failures[kind] = exc
    if not maes:
        raise failures[RANDOM_FOREST]
    if len(maes) == 2 and maes[SUPPORT_VECTOR] < maes[RANDOM_FOREST]:
        winner = SUPPORT_VECTOR
    else:
        winner = min(maes, key=maes.get) if len(maes) == 1 else RANDOM_FOREST
    model = _train(data, winner, rf_settings, svr_settings, gen)
    model.metadata["cv_mae"] = {k: maes.get(k) for k in (RANDOM_FOREST, SUPPORT_VECTOR)}
    return model


_HEAD_TYPES = {"forest": ForestHead, "svr": SvrHead}


def save_model(model: TrainedModel, path) -> None:
    heads = []
    for head in model.heads:
        tag = "forest" if isinstance(head, ForestHead) else "svr"
        heads.append({"type": tag, "data": head.to_jsonable()})
    doc = {
        "format": "qnetopt-model",
        "version": MODEL_FILE_VERSION,
        "kind": model.kind,
        "feature_dim": model.feature_dim,
        "target_dim": model.target_dim,
        "metadata": model.metadata,
        "heads": heads,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "qnetopt-model" or doc.get("version") != MODEL_FILE_VERSION:
        raise DomainError(f"unsupported model file {path}")
    heads = [_HEAD_TYPES[h["type"]].from_jsonable(h["data"]) for h in doc["heads"]]
    return TrainedModel(doc["kind"], heads, doc["feature_dim"], doc["target_dim"], doc["metadata"])
