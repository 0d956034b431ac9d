"""Second-order boosting on a chosen loss, transform, and weight scheme.

The learner maintains an additive internal score.  Fitting starts from
the constant score minimizing the weighted loss, then repeatedly fits a
base learner (regression tree or ridge-regularized linear model) to the
weighted gradient/hessian of the loss at the current score and takes a
damped Newton step.  The mean prediction is recovered from the score
through the loss's link, mapped back through the target transform, and
finally rescaled by an optional bias corrector.

Everything is deterministic: row subsampling draws from a stream keyed
by (seed, round), features are scanned in order, and the linear step
builds its normal equations with einsum so the summation order is fixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .biascorr import BiasCorrector
from .errors import (
    ConfigError,
    DegenerateData,
    DomainError,
    EmptyInput,
    IoFailure,
    ShapeMismatch,
)
from .losses import (
    LossSpec,
    WeightScheme,
    constant_score,
    grad_hess,
    mean_from_score,
    total_loss,
    weights_for,
)
from .rng import keyed_stream
from .transform import TargetTransform, forward, inverse
from .trees import Tree, grow_tree

MODEL_FORMAT = "skewcast-model-v1"

_BASES = ("tree", "linear")


@dataclass(frozen=True)
class LearnerConfig:
    """Boosting hyperparameters; defaults suit daily retail panels."""

    base: str = "tree"
    rounds: int = 200
    learning_rate: float = 0.1
    max_depth: int = 6
    min_child_weight: float = 1.0
    l2_reg: float = 1.0
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.base not in _BASES:
            raise ConfigError(f"unknown base learner {self.base!r}")
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_child_weight < 0:
            raise ConfigError("min_child_weight must be >= 0")
        if self.l2_reg < 0:
            raise ConfigError("l2_reg must be >= 0")
        if not (0.0 < self.subsample <= 1.0):
            raise ConfigError("subsample must lie in (0, 1]")

    def to_json(self) -> dict:
        return {
            "base": self.base,
            "rounds": self.rounds,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_child_weight": self.min_child_weight,
            "l2_reg": self.l2_reg,
            "subsample": self.subsample,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LearnerConfig":
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(f"bad learner config: {exc}") from None


@dataclass
class FitModel:
    """A fitted forecaster: score function plus the back-mapping recipe."""

    transform: TargetTransform
    loss: LossSpec
    weight_scheme: WeightScheme
    learner: LearnerConfig
    feature_names: list[str]
    base_score: float
    trees: list[Tree] = field(default_factory=list)
    betas: list[np.ndarray] = field(default_factory=list)
    training_loss: list[float] = field(default_factory=list)
    bias_corrector: BiasCorrector = field(default_factory=BiasCorrector)

    def score(self, X) -> np.ndarray:
        """Raw additive score for each feature row."""
        X = _check_matrix(X, len(self.feature_names))
        s = np.full(len(X), self.base_score, dtype=np.float64)
        lr = self.learner.learning_rate
        for tree in self.trees:
            s += lr * tree.predict(X)
        if self.betas:
            coef = lr * np.sum(self.betas, axis=0)
            s += np.einsum("ij,j->i", _augment(X), coef)
        return s

    def predict_transformed(self, X) -> np.ndarray:
        """Mean prediction in transformed-target units."""
        return mean_from_score(self.loss, self.score(X))

    def predict(self, X) -> np.ndarray:
        """Raw-sales prediction: back-transformed and bias-corrected."""
        zhat = self.predict_transformed(X)
        return self.bias_corrector.apply(inverse(self.transform, zhat), zhat)

    def with_corrector(self, corrector: BiasCorrector) -> "FitModel":
        return replace(self, bias_corrector=corrector)

    def to_json(self) -> dict:
        return {
            "version": MODEL_FORMAT,
            "transform": self.transform.to_json(),
            "loss": self.loss.to_json(),
            "weight_scheme": self.weight_scheme.to_json(),
            "learner": self.learner.to_json(),
            "feature_names": list(self.feature_names),
            "base_score": self.base_score,
            "trees": [t.to_json() for t in self.trees],
            "betas": [b.tolist() for b in self.betas],
            "training_loss": list(self.training_loss),
            "bias_corrector": self.bias_corrector.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FitModel":
        if obj.get("version") != MODEL_FORMAT:
            raise ConfigError(
                f"unsupported model version {obj.get('version')!r}, expected {MODEL_FORMAT!r}"
            )
        return cls(
            transform=TargetTransform.from_json(obj["transform"]),
            loss=LossSpec.from_json(obj["loss"]),
            weight_scheme=WeightScheme.from_json(obj["weight_scheme"]),
            learner=LearnerConfig.from_json(obj["learner"]),
            feature_names=list(obj["feature_names"]),
            base_score=float(obj["base_score"]),
            trees=[Tree.from_json(t) for t in obj["trees"]],
            betas=[np.asarray(b, dtype=np.float64) for b in obj["betas"]],
            training_loss=[float(v) for v in obj["training_loss"]],
            bias_corrector=BiasCorrector.from_json(obj["bias_corrector"]),
        )


def _check_matrix(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ShapeMismatch(
            f"feature matrix must be (n, {n_features}), got {X.shape}"
        )
    return X


def _augment(X: np.ndarray) -> np.ndarray:
    """Append an intercept column of ones."""
    return np.hstack([X, np.ones((len(X), 1))])


def fit(
    panel,
    transform: TargetTransform,
    loss: LossSpec,
    weight_scheme: WeightScheme,
    config: LearnerConfig,
) -> FitModel:
    """Fit a boosted model of transform(sales) on a sales panel."""
    return fit_arrays(
        panel.feature_matrix,
        panel.sales,
        transform,
        loss,
        weight_scheme,
        config,
        feature_names=list(panel.feature_names),
    )


def fit_arrays(
    X,
    y,
    transform: TargetTransform,
    loss: LossSpec,
    weight_scheme: WeightScheme,
    config: LearnerConfig,
    feature_names: list[str] | None = None,
) -> FitModel:
    """Fit a boosted model of transform(y) on feature rows X.

    y is raw sales; sample weights are evaluated on it before any
    transformation.  Deviance losses (Poisson/Gamma/Tweedie) model raw
    sales through their own log link and therefore require the identity
    target transform; stacking them on an already-compressed target
    would double-count the concavity.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise EmptyInput("cannot fit on an empty panel")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch(f"feature matrix must be 2-D, got shape {X.shape}")
    if feature_names is not None:
        X = _check_matrix(X, len(feature_names))
    if len(X) != len(y):
        raise ShapeMismatch(f"{len(X)} feature rows vs {len(y)} targets")
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(X.shape[1])]
    if loss.log_link and not transform.is_identity:
        raise ConfigError(
            f"{loss.kind} loss works on raw sales; combine it with the identity transform"
        )

    z = forward(transform, y)
    if np.all(z == z[0]):
        raise DegenerateData("all target values are identical; nothing to fit")
    w = weights_for(weight_scheme, y)
    try:
        base = constant_score(loss, z, w)
    except DomainError as exc:
        raise DegenerateData(f"cannot initialize fit: {exc}") from None

    scores = np.full(len(y), base, dtype=np.float64)
    w_total = float(np.sum(w))
    curve = [total_loss(loss, w, z, mean_from_score(loss, scores)) / w_total]

    model = FitModel(
        transform=transform,
        loss=loss,
        weight_scheme=weight_scheme,
        learner=config,
        feature_names=list(feature_names),
        base_score=base,
    )
    Xa = _augment(X) if config.base == "linear" else None
    for rnd in range(config.rounds):
        gh = grad_hess(loss, z, scores)
        g = w * gh.grad
        h = w * gh.hess
        rows = _round_rows(config, rnd, len(y))
        if config.base == "tree":
            tree = grow_tree(
                X[rows], g[rows], h[rows],
                max_depth=config.max_depth,
                min_child_weight=config.min_child_weight,
                l2_reg=config.l2_reg,
            )
            model.trees.append(tree)
            scores += config.learning_rate * tree.predict(X)
        else:
            beta = _linear_step(Xa[rows], g[rows], h[rows], config.l2_reg)
            model.betas.append(beta)
            scores += config.learning_rate * np.einsum("ij,j->i", Xa, beta)
        curve.append(total_loss(loss, w, z, mean_from_score(loss, scores)) / w_total)
    model.training_loss = curve
    return model


def _round_rows(config: LearnerConfig, rnd: int, n: int) -> np.ndarray:
    if config.subsample >= 1.0:
        return np.arange(n)
    gen = keyed_stream(config.seed, rnd)
    mask = gen.random(n) < config.subsample
    if not mask.any():
        return np.arange(n)
    return np.nonzero(mask)[0]


def _linear_step(Xa: np.ndarray, g: np.ndarray, h: np.ndarray, l2_reg: float) -> np.ndarray:
    """Newton step for a global linear score adjustment.

    Solves (Xa' diag(h) Xa + l2 I) beta = -Xa' g; einsum keeps the
    accumulation order fixed regardless of any BLAS threading.
    """
    k = Xa.shape[1]
    A = np.einsum("ij,i,ik->jk", Xa, h, Xa) + l2_reg * np.eye(k)
    b = -np.einsum("ij,i->j", Xa, g)
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise DegenerateData(
            "singular normal equations in linear step; increase l2_reg"
        ) from None


def predict(model: FitModel, X, in_raw_units: bool = True) -> np.ndarray:
    """Predict; raw units apply the inverse transform and bias corrector,
    otherwise the internal score is returned."""
    if in_raw_units:
        return model.predict(X)
    return model.score(X)


def in_sample_fit_report(model: FitModel, panel) -> dict:
    """Residual summary in transformed and raw units, with (y, yhat) pairs.

    The "pairs" entry is plot-ready: one (actual, predicted) tuple per
    row, raw units, after any bias correction.
    """
    X = panel.feature_matrix
    y = panel.sales
    if y.size == 0:
        raise EmptyInput("cannot report on an empty panel")
    z = forward(model.transform, y)
    zhat = model.predict_transformed(X)
    yhat = model.predict(X)
    rz = z - zhat
    ry = y - yhat
    return {
        "n_rows": int(len(y)),
        "rounds": len(model.training_loss) - 1,
        "initial_training_loss": model.training_loss[0],
        "final_training_loss": model.training_loss[-1],
        "mean_transformed_residual": float(np.mean(rz)),
        "var_transformed_residual": float(np.var(rz)),
        "mean_raw_residual": float(np.mean(ry)),
        "var_raw_residual": float(np.var(ry)),
        "pairs": list(zip(y.tolist(), yhat.tolist())),
    }


def write_pairs_csv(report: dict, path) -> None:
    """Write a fit report's (actual, predicted) pairs as a two-column CSV."""
    lines = ["actual,predicted"]
    for a, p in report["pairs"]:
        lines.append(f"{a:.12g},{p:.12g}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def save_model(model: FitModel, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(model.to_json(), fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write model {path}: {exc}") from exc


def load_model(path) -> FitModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file {path} is not valid JSON: {exc}") from None
    return FitModel.from_json(obj)
