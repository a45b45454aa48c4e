"""Small feed-forward networks trained with numpy (full-batch or minibatch)."""

from __future__ import annotations

import numpy as np

from ..data_model import as_rng


class TrainingError(RuntimeError):
    pass


def _act(name: str, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name: str, h):
    # derivative expressed through the activation output
    if name == "tanh":
        return 1.0 - h * h
    return (h > 0.0).astype(h.dtype)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class FeedForward:
    """Fully connected regressor (linear output) or binary classifier (sigmoid output).

    Regression targets are standardized internally and mapped back on
    prediction. A target with no spread yields a constant predictor.
    ``loss_history_`` records the training loss after every epoch.
    """

    def __init__(self, hidden=(32,), activation: str = "tanh", output: str = "linear",
                 optimizer: str = "adam", lr: float = 0.01, epochs: int = 500,
                 batch_size: int | None = None, weight_decay: float = 0.0,
                 early_stopping: bool = False, validation_fraction: float = 0.1,
                 patience: int = 10, tol: float = 1e-4, seed=None):
        if output not in ("linear", "sigmoid"):
            raise ValueError("output must be 'linear' or 'sigmoid'")
        if optimizer not in ("adam", "gd"):
            raise ValueError("optimizer must be 'adam' or 'gd'")
        self.hidden = tuple(int(h) for h in hidden)
        self.activation = activation
        self.output = output
        self.optimizer = optimizer
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.early_stopping = early_stopping
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.tol = tol
        self.seed = seed

    # -- parameters ---------------------------------------------------------
    def _init(self, d: int, rng) -> list[np.ndarray]:
        params = []
        sizes = (d,) + self.hidden + (1,)
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            params.append(np.zeros(fan_out))
        return params

    def _forward(self, X, params):
        acts = [X]
        h = X
        for k in range(len(self.hidden)):
            h = _act(self.activation, h @ params[2 * k] + params[2 * k + 1])
            acts.append(h)
        out = (h @ params[-2])[:, 0] + params[-1][0]
        return out, acts

    def _loss(self, out, y):
        if self.output == "sigmoid":
            # numerically stable binary cross-entropy on logits
            return float(np.mean(np.logaddexp(0.0, out) - y * out))
        r = out - y
        return float(0.5 * np.mean(r * r))

    def _grads(self, X, y, params):
        out, acts = self._forward(X, params)
        n = X.shape[0]
        if self.output == "sigmoid":
            dout = (_sigmoid(out) - y) / n
        else:
            dout = (out - y) / n
        grads = [None] * len(params)
        grads[-2] = acts[-1].T @ dout[:, None]
        grads[-1] = np.array([dout.sum()])
        dh = dout[:, None] @ params[-2].T
        for k in range(len(self.hidden) - 1, -1, -1):
            dz = dh * _act_grad(self.activation, acts[k + 1])
            grads[2 * k] = acts[k].T @ dz
            grads[2 * k + 1] = dz.sum(axis=0)
            if k > 0:
                dh = dz @ params[2 * k].T
        if self.weight_decay:
            for k in range(0, len(params), 2):
                grads[k] = grads[k] + self.weight_decay * params[k] / n
        return grads

    # -- training -------------------------------------------------------------
    def fit(self, X, y) -> "FeedForward":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        n, d = X.shape
        if n == 0:
            raise TrainingError("no training rows")
        rng = as_rng(self.seed)
        self.n_features_in_ = d
        self.constant_ = None
        if self.output == "linear":
            self.y_mean_ = float(y.mean())
            sd = float(y.std())
            if not sd > 1e-12 * max(1.0, abs(self.y_mean_)):
                self.constant_ = self.y_mean_
                self.loss_history_ = [0.0]
                return self
            self.y_sd_ = sd
            target = (y - self.y_mean_) / sd
        else:
            if np.all(y == y[0]):
                self.constant_ = float(y[0])
                self.loss_history_ = [0.0]
                return self
            target = y

        params = self._init(d, rng)
        tr_idx = np.arange(n)
        val_idx = None
        if self.early_stopping:
            n_val = int(round(self.validation_fraction * n))
            if n_val >= 2 and n - n_val >= 2:
                perm = rng.permutation(n)
                val_idx, tr_idx = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        Xtr, ytr = X[tr_idx], target[tr_idx]
        batch = len(tr_idx) if self.batch_size is None else min(self.batch_size, len(tr_idx))

        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        b1, b2, eps = 0.9, 0.999, 1e-8
        step = 0
        history = []
        best_val, best_params, stall = np.inf, None, 0
        for _ in range(self.epochs):
            order = rng.permutation(len(tr_idx)) if batch < len(tr_idx) else None
            for lo in range(0, len(tr_idx), batch):
                if order is None:
                    xb, yb = Xtr, ytr
                else:
                    sel = order[lo:lo + batch]
                    xb, yb = Xtr[sel], ytr[sel]
                grads = self._grads(xb, yb, params)
                step += 1
                if self.optimizer == "gd":
                    for p, g in zip(params, grads):
                        p -= self.lr * g
                else:
                    c1 = 1.0 - b1 ** step
                    c2 = 1.0 - b2 ** step
                    for p, g, mk, vk in zip(params, grads, m, v):
                        mk *= b1
                        mk += (1.0 - b1) * g
                        vk *= b2
                        vk += (1.0 - b2) * g * g
                        p -= self.lr * (mk / c1) / (np.sqrt(vk / c2) + eps)
            loss = self._loss(self._forward(Xtr, params)[0], ytr)
            if not np.isfinite(loss):
                raise TrainingError("training loss became non-finite")
            history.append(loss)
            if val_idx is not None:
                val = self._loss(self._forward(X[val_idx], params)[0], target[val_idx])
                if val < best_val - self.tol:
                    best_val, best_params, stall = val, [p.copy() for p in params], 0
                else:
                    stall += 1
                    if stall >= self.patience:
                        break
        if best_params is not None:
            params = best_params
        self.params_ = params
        self.loss_history_ = history
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self._forward(X, self.params_)[0]

    def predict(self, X) -> np.ndarray:
        """Regression mean, or class-1 probability for a sigmoid output."""
        X = np.asarray(X, dtype=np.float64)
        if self.constant_ is not None:
            return np.full(X.shape[0], self.constant_)
        out = self.decision_function(X)
        if self.output == "sigmoid":
            return _sigmoid(out)
        return out * self.y_sd_ + self.y_mean_
