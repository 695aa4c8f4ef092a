"""Gaussian-process regression surrogate with an anisotropic RBF kernel.

One independent model per output metric.  Inputs and target are standardized
before kernel evaluation so length scales are comparable across units; the
noise floor defaults to 1e-8 with jitter escalation when the Cholesky
factorisation struggles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

MODEL_FORMAT_VERSION = "thermoharvest-gpr-1"

JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


class ConditioningError(RuntimeError):
    """Kernel matrix stayed non-positive-definite after maximum jitter."""


class ConstantTargetError(ValueError):
    """R^2 is undefined for a constant target; carries the RMSE anyway."""

    def __init__(self, rmse: float):
        super().__init__(f"R^2 undefined for constant y_true (rmse={rmse!r})")
        self.rmse = rmse


@dataclass(frozen=True)
class Standardizer:
    """Per-column affine map to zero mean, unit variance."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray, what: str = "input") -> "Standardizer":
        values = np.atleast_2d(np.asarray(values, float))
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        bad = np.flatnonzero(std <= 0)
        if bad.size:
            raise ValueError(f"constant {what} column(s) {bad.tolist()} cannot be standardized")
        return cls(mean=mean, std=std)

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, float) - self.mean) / self.std

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, float) * self.std + self.mean


@dataclass(frozen=True)
class RegressionMetrics:
    r_squared: float
    rmse: float


@dataclass(frozen=True)
class GprModel:
    """Fitted GP: training inputs (standardized), kernel hyperparameters,
    Cholesky factor and weight vector, plus the standardizers."""

    train_inputs: np.ndarray  # (n, d) standardized
    length_scales: np.ndarray  # (d,)
    signal_variance: float
    noise_variance: float
    cholesky_factor: np.ndarray  # lower triangular
    alpha: np.ndarray  # (n,)
    input_standardizer: Standardizer
    target_mean: float
    target_std: float
    log_marginal_likelihood: float
    constant_target: float | None = None  # shortcut for a constant target


def _sq_distances(a: np.ndarray, b: np.ndarray, length_scales: np.ndarray) -> np.ndarray:
    sa = a / length_scales
    sb = b / length_scales
    return (
        np.sum(sa**2, axis=1)[:, None]
        + np.sum(sb**2, axis=1)[None, :]
        - 2.0 * sa @ sb.T
    )


def rbf_kernel(a: np.ndarray, b: np.ndarray, length_scales: np.ndarray,
               signal_variance: float) -> np.ndarray:
    d2 = np.maximum(_sq_distances(a, b, length_scales), 0.0)
    return signal_variance * np.exp(-0.5 * d2)


def _factorize(K: np.ndarray, noise_variance: float, signal_variance: float) -> np.ndarray:
    n = K.shape[0]
    for jitter in JITTER_LADDER:
        try:
            return np.linalg.cholesky(K + (noise_variance + jitter * signal_variance) * np.eye(n))
        except np.linalg.LinAlgError:
            continue
    raise ConditioningError(
        f"kernel matrix not positive definite after jitter escalation to {JITTER_LADDER[-1]}"
    )


def gpr_fit(inputs, targets, noise_variance: float = 1e-8,
            length_scales=None, signal_variance: float = 1.0) -> GprModel:
    """Fit the GP weight vector for fixed hyperparameters.

    Length scales apply in standardized input space and default to 1 per
    dimension.  A constant target short-circuits to a constant predictor.
    """
    X = np.atleast_2d(np.asarray(inputs, float))
    y = np.asarray(targets, float).ravel()
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples to fit")
    if X.shape[0] != y.size:
        raise ValueError("inputs and targets must have matching length")
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")

    x_std = Standardizer.fit(X, "input")
    Xs = x_std.transform(X)
    d = Xs.shape[1]
    scales = np.full(d, 1.0) if length_scales is None else np.asarray(length_scales, float)
    if scales.shape != (d,) or np.any(scales <= 0):
        raise ValueError("length_scales must be positive, one per input dimension")

    y_mean = float(y.mean())
    y_sd = float(y.std())
    if y_sd <= 0:
        # constant target: predict the constant with zero variance
        return GprModel(
            train_inputs=Xs, length_scales=scales, signal_variance=signal_variance,
            noise_variance=noise_variance, cholesky_factor=np.zeros((0, 0)),
            alpha=np.zeros(0), input_standardizer=x_std,
            target_mean=y_mean, target_std=1.0, log_marginal_likelihood=0.0,
            constant_target=y_mean,
        )
    ys = (y - y_mean) / y_sd

    K = rbf_kernel(Xs, Xs, scales, signal_variance)
    L = _factorize(K, noise_variance, signal_variance)
    alpha = np.linalg.solve(L.T, np.linalg.solve(L, ys))
    lml = (
        -0.5 * float(ys @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * ys.size * np.log(2 * np.pi)
    )
    return GprModel(
        train_inputs=Xs, length_scales=scales, signal_variance=signal_variance,
        noise_variance=noise_variance, cholesky_factor=L, alpha=alpha,
        input_standardizer=x_std, target_mean=y_mean, target_std=y_sd,
        log_marginal_likelihood=lml,
    )


def gpr_predict(model: GprModel, x):
    """Posterior mean and variance at one point or a batch.

    Returns scalars for a single input vector, arrays for a batch; both the
    mean and the variance are de-standardized (variance in squared target
    units).
    """
    x = np.asarray(x, float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    d = model.train_inputs.shape[1] if model.train_inputs.size else model.length_scales.size
    if X.shape[1] != d:
        raise ValueError(f"expected {d}-dimensional inputs, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("query points must be finite")

    if model.constant_target is not None:
        mean = np.full(X.shape[0], model.constant_target)
        var = np.zeros(X.shape[0])
        return (float(mean[0]), float(var[0])) if single else (mean, var)

    Xs = model.input_standardizer.transform(X)
    k_star = rbf_kernel(model.train_inputs, Xs, model.length_scales, model.signal_variance)
    mean_s = k_star.T @ model.alpha
    v = np.linalg.solve(model.cholesky_factor, k_star)
    var_s = np.maximum(model.signal_variance - np.sum(v * v, axis=0), 0.0)

    mean = model.target_mean + model.target_std * mean_s
    var = var_s * model.target_std**2
    return (float(mean[0]), float(var[0])) if single else (mean, var)


def _tuning_starts(d: int, restarts: int, seed: int) -> np.ndarray:
    """Deterministic nested start sequence: the unit start, then seeded draws."""
    rng = np.random.default_rng(seed)
    starts = [np.zeros(d + 1)]
    for _ in range(max(restarts - 1, 0)):
        starts.append(np.concatenate([rng.uniform(-1.5, 2.5, d), rng.uniform(-1.0, 1.0, 1)]))
    return np.array(starts[:restarts])


def tune_hyperparameters(inputs, targets, restarts: int = 2, seed: int = 0,
                         noise_variance: float = 1e-8,
                         max_evaluations: int = 400) -> GprModel:
    """Maximize the log marginal likelihood over log length scales and log
    signal variance with seeded Nelder-Mead multistart.

    The start list is nested in ``restarts``, so more restarts can only
    improve the found likelihood; results are deterministic given the seed.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    X = np.atleast_2d(np.asarray(inputs, float))
    d = X.shape[1]

    best: GprModel | None = None

    def objective(log_params: np.ndarray) -> float:
        scales = np.exp(np.clip(log_params[:d], -10, 10))
        s2 = float(np.exp(np.clip(log_params[d], -10, 10)))
        try:
            model = gpr_fit(X, targets, noise_variance, scales, s2)
        except ConditioningError:
            return 1e12
        return -model.log_marginal_likelihood

    failures = 0
    for start in _tuning_starts(d, restarts, seed):
        result = minimize(objective, start, method="Nelder-Mead",
                          options={"maxfev": max_evaluations, "xatol": 1e-3, "fatol": 1e-4})
        scales = np.exp(np.clip(result.x[:d], -10, 10))
        s2 = float(np.exp(np.clip(result.x[d], -10, 10)))
        try:
            model = gpr_fit(X, targets, noise_variance, scales, s2)
        except ConditioningError:
            failures += 1
            continue
        if best is None or model.log_marginal_likelihood > best.log_marginal_likelihood:
            best = model
    if best is None:
        raise ConditioningError(f"all {failures} tuning restarts failed conditioning")
    return best


def regression_metrics(y_true, y_pred) -> RegressionMetrics:
    """Coefficient of determination and root-mean-square error."""
    y_true = np.asarray(y_true, float).ravel()
    y_pred = np.asarray(y_pred, float).ravel()
    if y_true.size == 0 or y_true.size != y_pred.size:
        raise ValueError("y_true and y_pred must be equal-length and non-empty")
    rmse = float(np.sqrt(np.mean((y_true - y_pred) ** 2)))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0:
        raise ConstantTargetError(rmse)
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return RegressionMetrics(r_squared=1.0 - ss_res / ss_tot, rmse=rmse)


def cross_validate(dataset, folds: int, target: str, seed: int,
                   tune_restarts: int = 1) -> RegressionMetrics:
    """Seeded k-fold cross-validation of one metric column.

    Hyperparameters are tuned once on the full data, then each fold refits the
    weight vector on its training rows and predicts its held-out rows;
    metrics pool over all held-out predictions.
    """
    X = dataset.design_matrix()
    y = dataset.metric_column(target)
    n = y.size
    if not 2 <= folds <= n:
        raise ValueError(f"folds must lie in [2, {n}]")

    tuned = tune_hyperparameters(X, y, restarts=tune_restarts, seed=seed)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    chunks = np.array_split(order, folds)

    predictions = np.empty(n)
    for chunk in chunks:
        train = np.setdiff1d(order, chunk)
        if train.size < 2:
            raise ValueError("every fold needs at least 2 training rows")
        model = gpr_fit(X[train], y[train], tuned.noise_variance,
                        tuned.length_scales, tuned.signal_variance)
        predictions[chunk], _ = gpr_predict(model, X[chunk])
    return regression_metrics(y, predictions)


def model_to_dict(model: GprModel) -> dict:
    return {
        "format": MODEL_FORMAT_VERSION,
        "train_inputs": model.train_inputs.tolist(),
        "length_scales": model.length_scales.tolist(),
        "signal_variance": model.signal_variance,
        "noise_variance": model.noise_variance,
        "cholesky_factor": model.cholesky_factor.tolist(),
        "alpha": model.alpha.tolist(),
        "input_mean": model.input_standardizer.mean.tolist(),
        "input_std": model.input_standardizer.std.tolist(),
        "target_mean": model.target_mean,
        "target_std": model.target_std,
        "log_marginal_likelihood": model.log_marginal_likelihood,
        "constant_target": model.constant_target,
    }


def model_from_dict(doc: dict) -> GprModel:
    if doc.get("format") != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"unsupported model format {doc.get('format')!r}; expected {MODEL_FORMAT_VERSION!r}"
        )
    return GprModel(
        train_inputs=np.array(doc["train_inputs"], float),
        length_scales=np.array(doc["length_scales"], float),
        signal_variance=float(doc["signal_variance"]),
        noise_variance=float(doc["noise_variance"]),
        cholesky_factor=np.array(doc["cholesky_factor"], float),
        alpha=np.array(doc["alpha"], float),
        input_standardizer=Standardizer(
            mean=np.array(doc["input_mean"], float),
            std=np.array(doc["input_std"], float),
        ),
        target_mean=float(doc["target_mean"]),
        target_std=float(doc["target_std"]),
        log_marginal_likelihood=float(doc["log_marginal_likelihood"]),
        constant_target=doc.get("constant_target"),
    )


def save_model(model: GprModel, path, meta: dict | None = None) -> None:
    doc = model_to_dict(model)
    if meta:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> GprModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
