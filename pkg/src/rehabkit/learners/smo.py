"""Linear support vector machine trained by sequential minimal optimization (two-threshold form)."""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .logistic import standardizer


class LinearSMO:
    """Soft-margin linear SVM, ``f(x) = w.z - b`` on standardized inputs ``z``.

    Labels are 0/1 externally and mapped to -1/+1 internally (+1 = deviant).
    """

    def __init__(self, C: float = 1.0, tol: float = 1e-3, max_iter: int = 10_000_000, seed: int = 0):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed  # kept for the model file; the solver itself is deterministic
        self.mean = None
        self.std = None
        self.weights = None
        self.b = 0.0
        self.alpha = None
        self.errors = None
        self.y = None
        self.converged = False
        self.iterations = 0

    def fit(self, X, y) -> "LinearSMO":
        X = np.asarray(X, dtype=float)
        self.mean, self.std = standardizer(X)
        Z = (X - self.mean) / self.std
        self._optimize(Z @ Z.T, np.where(np.asarray(y) == 1, 1.0, -1.0))
        self.weights = (self.alpha * self.y) @ Z
        return self

    def _optimize(self, K: np.ndarray, y: np.ndarray):
        """Pairwise updates on the maximal violating pair, second-order choice of the partner.

        ``u_t = -y_t G_t`` with ``G`` the dual gradient; the KKT conditions hold to
        ``tol`` once ``max(u over I_up) - min(u over I_low) < 2 tol`` and the
        threshold sits halfway between the two.
        """
        n = len(y)
        C, tau = self.C, 1e-12
        alpha = np.zeros(n)
        u = y.copy()  # alpha = 0 gives G = -1
        diag = np.diag(K)
        # curvature along every pair direction, floored for semi-definite K
        quad = np.maximum(diag[:, None] + diag[None, :] - 2.0 * K, tau)
        pos = y > 0
        up, low = np.ones(n, dtype=bool), np.ones(n, dtype=bool)
        it = 0
        m = M = 0.0
        while it < self.max_iter:
            i = int(np.argmax(np.where(up, u, -np.inf)))
            m, M = u[i], np.where(low, u, np.inf).min()
            if m - M < 2 * self.tol:
                break
            gap = m - u
            j = int(np.argmax(np.where(low & (gap > 0), gap * gap / quad[i], -np.inf)))
            ai, aj = alpha[i], alpha[j]
            q = quad[i, j]
            if y[i] != y[j]:
                delta = (u[i] * y[i] + u[j] * y[j]) / q
                diff = ai - aj
                ni, nj = ai + delta, aj + delta
                if diff > 0:
                    if nj < 0:
                        nj, ni = 0.0, diff
                elif ni < 0:
                    ni, nj = 0.0, -diff
                if diff > 0:
                    if ni > C:
                        ni, nj = C, C - diff
                elif nj > C:
                    nj, ni = C, C + diff
            else:
                delta = (u[j] * y[j] - u[i] * y[i]) / q
                total = ai + aj
                ni, nj = ai - delta, aj + delta
                if total > C:
                    if ni > C:
                        ni, nj = C, total - C
                elif nj < 0:
                    nj, ni = 0.0, total
                if total > C:
                    if nj > C:
                        nj, ni = C, total - C
                elif ni < 0:
                    ni, nj = 0.0, total
            u -= (y[i] * (ni - ai)) * K[i] + (y[j] * (nj - aj)) * K[j]
            alpha[i], alpha[j] = ni, nj
            for t in (i, j):
                up[t] = alpha[t] < C if pos[t] else alpha[t] > 0
                low[t] = alpha[t] > 0 if pos[t] else alpha[t] < C
            it += 1
        b = -(m + M) / 2.0
        self.alpha, self.y, self.b = alpha, y, b
        self.errors = -u - b  # f(x) - y, since sum_s alpha_s y_s K_ts = y_t - u_t
        self.converged = it < self.max_iter
        self.iterations = it

    def kkt_residuals(self) -> np.ndarray:
        """Per-multiplier KKT violation measured on ``y f(x) - 1`` (0 when satisfied)."""
        r = self.y * self.errors
        at_zero = self.alpha <= 0
        at_c = self.alpha >= self.C
        free = ~(at_zero | at_c)
        return np.where(at_zero, np.maximum(-r, 0), 0) + np.where(at_c, np.maximum(r, 0), 0) + np.where(free, np.abs(r), 0)

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return ((X - self.mean) / self.std) @ self.weights - self.b

    def proba(self, X) -> np.ndarray:
        return expit(self.decision(X))

    def to_params(self) -> dict:
        return {
            "C": self.C,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "weights": self.weights.tolist(),
            "b": self.b,
        }

    @classmethod
    def from_params(cls, params: dict) -> "LinearSMO":
        model = cls(params["C"])
        model.mean = np.asarray(params["mean"], dtype=float)
        model.std = np.asarray(params["std"], dtype=float)
        model.weights = np.asarray(params["weights"], dtype=float)
        model.b = float(params["b"])
        return model
