"""Ridge-regularized binary logistic regression."""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit


def standardizer(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def loss_and_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray, ridge: float):
    """Negative log-likelihood plus ``ridge * |w|^2`` (intercept unpenalized) and its gradient.

    ``params`` is ``[intercept, w_1..w_d]``.
    """
    b, w = params[0], params[1:]
    z = X @ w + b
    # log(1 + e^z) - y z, computed stably
    nll = np.sum(np.logaddexp(0.0, z) - y * z) + ridge * np.dot(w, w)
    r = expit(z) - y
    grad = np.concatenate([[r.sum()], X.T @ r + 2.0 * ridge * w])
    return nll, grad


class LogisticRegression:
    def __init__(self, ridge: float = 1e-8, max_iter: int = 200, tol: float = 1e-8):
        self.ridge = ridge
        self.max_iter = max_iter
        self.tol = tol
        self.mean = None
        self.std = None
        self.intercept = 0.0
        self.weights = None

    def fit(self, X, y) -> "LogisticRegression":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.mean, self.std = standardizer(X)
        Z = (X - self.mean) / self.std
        x0 = np.zeros(X.shape[1] + 1)
        res = minimize(
            loss_and_grad,
            x0,
            args=(Z, y, self.ridge),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": self.max_iter, "gtol": self.tol, "ftol": 0.0},
        )
        self.intercept = float(res.x[0])
        self.weights = res.x[1:]
        return self

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return ((X - self.mean) / self.std) @ self.weights + self.intercept

    def proba(self, X) -> np.ndarray:
        return expit(self.decision(X))

    def to_params(self) -> dict:
        return {
            "ridge": self.ridge,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "intercept": self.intercept,
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_params(cls, params: dict) -> "LogisticRegression":
        model = cls(params["ridge"])
        model.mean = np.asarray(params["mean"], dtype=float)
        model.std = np.asarray(params["std"], dtype=float)
        model.intercept = float(params["intercept"])
        model.weights = np.asarray(params["weights"], dtype=float)
        return model
