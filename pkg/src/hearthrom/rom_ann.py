"""Feed-forward regression of reduced coefficients over the parameter box.

A small fully connected network (two sigmoid hidden layers of equal width,
linear input and output) maps a normalized parameter tuple to the
best-approximation coefficients of the solution in a POD basis.  Training
uses Adam on the mean squared error with early stopping on a validation
set; the returned parameters are the best validation checkpoint, not the
last iterate.  Everything is plain numpy and deterministic for a fixed
seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .pod import ReducedBasis
from .sampling import ParameterRanges


# ---------------------------------------------------------------------------
# network definition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetworkConfig:
    """Two-hidden-layer sigmoid multilayer perceptron."""

    n_in: int
    n_out: int
    width: int
    n_hidden: int = 2

    @property
    def layer_sizes(self):
        return (self.n_in,) + (self.width,) * self.n_hidden + (self.n_out,)


def init_params(cfg: NetworkConfig, seed: int):
    """Fan-in scaled uniform weight init, zero biases."""
    rng = np.random.default_rng(seed)
    sizes = cfg.layer_sizes
    params = []
    for n, m in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(n)
        params.append((rng.uniform(-bound, bound, size=(n, m)),
                       np.zeros(m)))
    return params


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(params, X):
    """Network output for a batch (n, n_in) -> (n, n_out)."""
    a = np.atleast_2d(X)
    last = len(params) - 1
    for i, (W, b) in enumerate(params):
        z = a @ W + b
        a = z if i == last else _sigmoid(z)
    return a


def loss_and_gradient(params, X, Y):
    """Mean-squared-error loss and its gradient via backpropagation."""
    acts = [np.atleast_2d(X)]
    last = len(params) - 1
    for i, (W, b) in enumerate(params):
        z = acts[-1] @ W + b
        acts.append(z if i == last else _sigmoid(z))
    diff = acts[-1] - Y
    n = diff.shape[0]
    loss = float(np.mean(diff * diff))
    # d(loss)/d(output): mean over both batch and output dimensions
    delta = 2.0 * diff / diff.size
    grads = [None] * len(params)
    for i in range(last, -1, -1):
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ params[i][0].T) * acts[i] * (1.0 - acts[i])
    return loss, grads


def gradient_check(cfg: NetworkConfig = None, seed: int = 0, h: float = 1e-6):
    """Max relative error of the backprop gradient vs central differences."""
    if cfg is None:
        cfg = NetworkConfig(n_in=3, n_out=2, width=5)
    rng = np.random.default_rng(seed)
    params = init_params(cfg, seed)
    X = rng.standard_normal((7, cfg.n_in))
    Y = rng.standard_normal((7, cfg.n_out))
    _, grads = loss_and_gradient(params, X, Y)
    worst = 0.0
    for li, (W, b) in enumerate(params):
        for arr, g in ((W, grads[li][0]), (b, grads[li][1])):
            flat = arr.ravel()
            idx = rng.choice(flat.size, size=min(10, flat.size),
                             replace=False)
            for j in idx:
                orig = flat[j]
                flat[j] = orig + h
                lp, _ = loss_and_gradient(params, X, Y)
                flat[j] = orig - h
                lm, _ = loss_and_gradient(params, X, Y)
                flat[j] = orig
                fd = (lp - lm) / (2.0 * h)
                ref = max(abs(fd), abs(g.ravel()[j]), 1e-8)
                worst = max(worst, abs(fd - g.ravel()[j]) / ref)
    return worst


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 5000
    patience: int = 50
    batch_size: int = None   # None: full batch up to 500 samples, else 64
    seed: int = 0

    def resolved_batch(self, n_train):
        if self.batch_size is not None:
            return min(self.batch_size, n_train)
        return n_train if n_train <= 500 else 64


@dataclass
class TrainResult:
    params: list
    history: dict            # {'train': [...], 'val': [...]}
    best_epoch: int
    best_val: float
    stopped_epoch: int


def train_network(X_tr, Y_tr, X_val, Y_val, net_cfg: NetworkConfig,
                  train_cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Adam training with validation-based early stopping.

    Stops after ``patience`` epochs without a new validation minimum and
    restores the parameters of the best validation epoch.
    """
    X_tr, Y_tr = np.atleast_2d(X_tr), np.atleast_2d(Y_tr)
    X_val, Y_val = np.atleast_2d(X_val), np.atleast_2d(Y_val)
    params = init_params(net_cfg, train_cfg.seed)
    m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    rng = np.random.default_rng(train_cfg.seed + 1)
    lr, b1, b2, eps = train_cfg.learning_rate, 0.9, 0.999, 1e-8
    batch = train_cfg.resolved_batch(len(X_tr))

    history = {"train": [], "val": []}
    best = (np.inf, -1, None)
    t = 0
    for epoch in range(train_cfg.max_epochs):
        order = rng.permutation(len(X_tr))
        for start in range(0, len(order), batch):
            sel = order[start:start + batch]
            _, grads = loss_and_gradient(params, X_tr[sel], Y_tr[sel])
            t += 1
            new_params = []
            for li in range(len(params)):
                upd = []
                for k in range(2):
                    g = grads[li][k]
                    mk = b1 * m[li][k] + (1 - b1) * g
                    vk = b2 * v[li][k] + (1 - b2) * g * g
                    m[li] = (mk, m[li][1]) if k == 0 else (m[li][0], mk)
                    v[li] = (vk, v[li][1]) if k == 0 else (v[li][0], vk)
                    mhat = mk / (1 - b1 ** t)
                    vhat = vk / (1 - b2 ** t)
                    upd.append(params[li][k]
                               - lr * mhat / (np.sqrt(vhat) + eps))
                new_params.append(tuple(upd))
            params = new_params
        tr_loss, _ = loss_and_gradient(params, X_tr, Y_tr)
        pred = forward(params, X_val)
        val_loss = float(np.mean((pred - Y_val) ** 2))
        history["train"].append(tr_loss)
        history["val"].append(val_loss)
        if val_loss < best[0]:
            best = (val_loss, epoch,
                    [(W.copy(), b.copy()) for W, b in params])
        elif epoch - best[1] >= train_cfg.patience:
            break
    return TrainResult(params=best[2], history=history, best_epoch=best[1],
                       best_val=best[0], stopped_epoch=epoch)


# ---------------------------------------------------------------------------
# coefficient regression over the parameter box
# ---------------------------------------------------------------------------

@dataclass
class Scaler:
    """Min-max input normalization and per-output standardization."""

    in_lo: np.ndarray
    in_hi: np.ndarray
    out_mean: np.ndarray
    out_std: np.ndarray

    @classmethod
    def fit(cls, ranges: ParameterRanges, Y_train):
        lo, hi = ranges.as_arrays()
        Y = np.atleast_2d(Y_train)
        std = Y.std(axis=0)
        std[std == 0.0] = 1.0
        return cls(in_lo=lo, in_hi=hi, out_mean=Y.mean(axis=0), out_std=std)

    def encode_inputs(self, X):
        return (np.atleast_2d(X) - self.in_lo) / (self.in_hi - self.in_lo)

    def encode_outputs(self, Y):
        return (np.atleast_2d(Y) - self.out_mean) / self.out_std

    def decode_outputs(self, Y):
        return np.atleast_2d(Y) * self.out_std + self.out_mean


@dataclass
class CoefficientNetwork:
    """Trained map from a parameter tuple to reduced coefficients."""

    basis: ReducedBasis
    ranges: ParameterRanges
    scaler: Scaler
    result: TrainResult
    net_cfg: NetworkConfig
    train_cfg: TrainConfig

    def predict(self, tup):
        x = self.scaler.encode_inputs(
            np.asarray(tup.active_vector())[None, :])
        y = forward(self.result.params, x)
        return self.scaler.decode_outputs(y)[0]


def fit_coefficients(basis: ReducedBasis, ranges: ParameterRanges,
                     train_tuples, Y_train, val_tuples, Y_val,
                     width: int, train_cfg: TrainConfig = TrainConfig()
                     ) -> CoefficientNetwork:
    """Train a coefficient network on projection-coefficient targets."""
    X_tr = np.array([t.active_vector() for t in train_tuples])
    X_val = np.array([t.active_vector() for t in val_tuples])
    scaler = Scaler.fit(ranges, Y_train)
    net_cfg = NetworkConfig(n_in=ranges.dim, n_out=np.atleast_2d(Y_train
                                                                 ).shape[1],
                            width=width)
    result = train_network(scaler.encode_inputs(X_tr),
                           scaler.encode_outputs(Y_train),
                           scaler.encode_inputs(X_val),
                           scaler.encode_outputs(Y_val),
                           net_cfg, train_cfg)
    return CoefficientNetwork(basis=basis, ranges=ranges, scaler=scaler,
                              result=result, net_cfg=net_cfg,
                              train_cfg=train_cfg)


def ann_online(networks: dict, tup):
    """Predicted reduced coefficients at one tuple, per model key."""
    return {key: net.predict(tup) for key, net in networks.items()}
