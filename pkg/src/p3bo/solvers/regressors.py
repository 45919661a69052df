"""Closed-form linear regressors on one-hot features and their CV ensemble."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

RIDGE_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
CV_FOLDS = 5
CV_THRESHOLD = 0.4


@dataclass
class Centered:
    """Spectral decomposition of the centred design, shared by every model on a fold.

    ``ev`` holds the non-zero eigenvalues of Fc^T Fc (squared singular
    values), ``Vt`` the matching right-singular vectors and ``sty`` the
    projection Vt @ Fc^T @ yc. The eigenproblem is solved on whichever Gram
    matrix is smaller.
    """

    x_mean: np.ndarray
    y_mean: float
    ev: np.ndarray      # (r,)
    Vt: np.ndarray      # (r, d)
    sty: np.ndarray     # (r,)
    yy: float           # ||yc||^2
    n: int

    @classmethod
    def of(cls, F: np.ndarray, y: np.ndarray) -> "Centered":
        n, d = F.shape
        x_mean = F.mean(axis=0)
        y_mean = float(y.mean())
        Fc = F - x_mean
        yc = y - y_mean
        if n >= d:
            ev, V = np.linalg.eigh(Fc.T @ Fc)
            Vt = V.T
        else:
            ev, U = np.linalg.eigh(Fc @ Fc.T)
            keep = ev > 1e-10 * max(float(ev.max()), 1e-300)
            ev, U = ev[keep], U[:, keep]
            Vt = (Fc.T @ U / np.sqrt(ev)).T
        ev = np.clip(ev, 0.0, None)
        return cls(x_mean, y_mean, ev, Vt, Vt @ (Fc.T @ yc), float(yc @ yc), n)


class LinearModel:
    """Base for models predicting ``intercept + (x - x_mean) @ coef``."""

    name = "linear"
    has_variance = False

    def __init__(self):
        self.coef: np.ndarray | None = None
        self.x_mean: np.ndarray | None = None
        self.intercept = 0.0

    def fit(self, F: np.ndarray, y: np.ndarray):
        return self.fit_centered(Centered.of(F, np.asarray(y, dtype=float)))

    def fit_centered(self, c: Centered):
        raise NotImplementedError

    def predict(self, F: np.ndarray) -> np.ndarray:
        return self.intercept + (F - self.x_mean) @ self.coef

    def predict_var(self, F: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Ridge(LinearModel):
    def __init__(self, alpha: float):
        super().__init__()
        self.alpha = alpha
        self.name = f"Ridge(alpha={alpha:g})"

    def fit_centered(self, c: Centered) -> "Ridge":
        self.x_mean, self.intercept = c.x_mean, c.y_mean
        self.coef = c.Vt.T @ (c.sty / (c.ev + self.alpha))
        return self


class BayesianRidge(LinearModel):
    """Conjugate Gaussian linear model with evidence-maximised precisions.

    Weight precision and noise precision are updated by MacKay's fixed-point
    rules (with weak Gamma(1e-6, 1e-6) hyperpriors) until the posterior mean
    settles. Posterior mean/covariance are closed form at every step.
    """

    name = "BayesianRidge"
    has_variance = True

    def __init__(self, max_iter: int = 300, tol: float = 1e-6, prior: float = 1e-6):
        super().__init__()
        self.max_iter = max_iter
        self.tol = tol
        self.prior = prior
        self.weight_precision = 1.0
        self.noise_precision = 1.0
        self.cov: np.ndarray | None = None

    def fit_centered(self, c: Centered) -> "BayesianRidge":
        n, ev = c.n, c.ev
        self.x_mean, self.intercept = c.x_mean, c.y_mean
        var_y = c.yy / n
        noise = 1.0 / var_y if var_y > 0 else 1.0
        weight = 1.0
        a = self.prior
        w = np.zeros_like(ev)  # coefficients in the right-singular basis
        for _ in range(self.max_iter):
            denom = noise * ev + weight
            new_w = noise * c.sty / denom
            gamma = float(np.sum(noise * ev / denom))
            # ||yc - Fc coef||^2 expanded in the eigenbasis
            resid = max(c.yy - 2.0 * float(new_w @ c.sty) + float(np.sum(ev * new_w ** 2)), 0.0)
            weight = (gamma + 2 * a) / (float(new_w @ new_w) + 2 * a)
            noise = (n - gamma + 2 * a) / (resid + 2 * a)
            done = np.sum(np.abs(new_w - w)) < self.tol
            w = new_w
            if done:
                break
        self.weight_precision, self.noise_precision = weight, noise
        denom = noise * ev + weight
        self.coef = c.Vt.T @ (noise * c.sty / denom)
        d = c.Vt.shape[1]
        # posterior covariance: span(Vt) shrinks, the orthogonal complement keeps the prior
        self.cov = (c.Vt.T / denom) @ c.Vt + (np.eye(d) - c.Vt.T @ c.Vt) / weight
        return self

    def predict_var(self, F: np.ndarray) -> np.ndarray:
        Fc = F - self.x_mean
        return 1.0 / self.noise_precision + np.einsum("ij,jk,ik->i", Fc, self.cov, Fc)


def explained_variance(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    var = float(np.var(y_true))
    resid = float(np.var(y_true - y_pred))
    if var == 0.0:
        return 1.0 if resid == 0.0 else 0.0
    return 1.0 - resid / var


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def candidate_models(kind: str) -> list[LinearModel]:
    if kind == "BayesianRidge":
        return [BayesianRidge()]
    if kind == "Ensemble":
        return [BayesianRidge()] + [Ridge(a) for a in RIDGE_GRID]
    raise ValueError(f"unknown regressor {kind!r}")


def cv_scores(protos: list[LinearModel], F: np.ndarray, y: np.ndarray,
              folds: list[np.ndarray]) -> dict[str, float]:
    """Mean out-of-fold explained variance per candidate model."""
    per_model: dict[str, list[float]] = {p.name: [] for p in protos}
    for test in folds:
        train = np.setdiff1d(np.arange(len(y)), test)
        if len(test) == 0 or len(train) == 0:
            continue
        c = Centered.of(F[train], y[train])
        for p in protos:
            model = (Ridge(p.alpha) if isinstance(p, Ridge) else BayesianRidge()).fit_centered(c)
            per_model[p.name].append(explained_variance(y[test], model.predict(F[test])))
    return {k: float(np.mean(v)) if v else 0.0 for k, v in per_model.items()}


@dataclass
class Ensemble:
    """Averaged predictions of the CV-selected member models."""

    members: list = field(default_factory=list)
    scores: dict = field(default_factory=dict)
    constant: float | None = None
    low_confidence: bool = False

    def predict(self, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Mean and standard deviation for a feature matrix."""
        if self.constant is not None:
            return np.full(len(F), self.constant), np.zeros(len(F))
        means = np.stack([m.predict(F) for m in self.members])
        mean = means.mean(axis=0)
        var = means.var(axis=0)
        native = [m.predict_var(F) for m in self.members if m.has_variance]
        if native:
            var = var + np.mean(native, axis=0)
        return mean, np.sqrt(var)

    def on_tokens(self, length: int, vocab_size: int):
        """Predictor taking token-index arrays directly.

        Every member is linear in one-hot features, so means reduce to table
        lookups and quadratic forms to gathers from the covariance matrix.
        Gives the same result as ``predict(one_hot_batch(X))``.
        """
        if self.constant is not None:
            const = self.constant
            return lambda X: (np.full(len(X), const), np.zeros(len(X)))
        offsets = np.arange(length) * vocab_size
        coefs = np.stack([m.coef for m in self.members])
        bias = np.array([m.intercept - m.x_mean @ m.coef for m in self.members])
        bayes = [m for m in self.members if m.has_variance]
        quad = [(m.cov, m.cov @ m.x_mean, float(m.x_mean @ m.cov @ m.x_mean), 1.0 / m.noise_precision)
                for m in bayes]

        def predict(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            idx = offsets + np.asarray(X, dtype=np.int64)
            means = bias[:, None] + coefs[:, idx].sum(axis=2)
            var = means.var(axis=0)
            if quad:
                native = np.zeros(len(idx))
                for cov, u, c, noise in quad:
                    block = cov[idx[:, :, None], idx[:, None, :]].sum(axis=(1, 2))
                    native += noise + block - 2.0 * u[idx].sum(axis=1) + c
                var = var + native / len(quad)
            return means.mean(axis=0), np.sqrt(np.maximum(var, 0.0))

        return predict


def fit_ensemble(F: np.ndarray, y: np.ndarray, kind: str = "Ensemble", seed: int = 0,
                 threshold: float = CV_THRESHOLD) -> Ensemble:
    y = np.asarray(y, dtype=float)
    if np.var(y) == 0.0:
        return Ensemble(constant=float(y[0]), low_confidence=True,
                        scores={m.name: 0.0 for m in candidate_models(kind)})
    if kind == "BayesianRidge":
        return Ensemble(members=[BayesianRidge().fit(F, y)])
    folds = kfold_indices(len(y), CV_FOLDS, seed)
    protos = candidate_models(kind)
    scores = cv_scores(protos, F, y, folds)
    keep = [p for p in protos if scores[p.name] >= threshold]
    low = not keep
    if not keep:
        keep = [max(protos, key=lambda p: scores[p.name])]
    full = Centered.of(F, y)
    members = [p.fit_centered(full) for p in keep]
    return Ensemble(members=members, scores=scores, low_confidence=low)


class FitCache:
    """Small LRU so population members fitting identical data share one fit."""

    def __init__(self, size: int = 8):
        self.size = size
        self._store: OrderedDict = OrderedDict()

    def get(self, key):
        if key in self._store:
            self._store.move_to_end(key)
            return self._store[key]
        return None

    def put(self, key, value):
        self._store[key] = value
        self._store.move_to_end(key)
        while len(self._store) > self.size:
            self._store.popitem(last=False)


FIT_CACHE = FitCache()
