"""Dense-layer primitives with hand-written gradients, plus the Gaussian rate gate.

Everything operates on plain 2-D float64 numpy arrays (batch rows, feature
columns).  Backprop is manual: the distributed engine owns the computation
graph (it *is* the network topology), so each primitive caches what its own
backward pass needs and nothing more.
"""

from __future__ import annotations

import math

import numpy as np

ACTIVATIONS = ("identity", "tanh", "relu")


def _as_batch(x, cols: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {x.shape}")
    if cols is not None and x.shape[1] != cols:
        raise ValueError(f"expected {cols} columns, got shape {x.shape}")
    return x


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class DenseLayer:
    """Fully connected layer ``activation(x @ w.T + b)`` with gradient buffers.

    ``backward`` accumulates parameter gradients (so multiple calls sum, which
    the optimizer later consumes and zeroes) and returns the gradient with
    respect to the layer input.
    """

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        activation: str = "identity",
        *,
        rng: np.random.Generator | None = None,
    ):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if rng is None:
            rng = np.random.default_rng(0)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.w = rng.normal(0.0, 1.0 / math.sqrt(in_dim), size=(out_dim, in_dim))
        self.b = np.zeros(out_dim)
        self.gw = np.zeros_like(self.w)
        self.gb = np.zeros_like(self.b)
        self._x: np.ndarray | None = None
        self._pre: np.ndarray | None = None
        self._out: np.ndarray | None = None

    def forward(self, x) -> np.ndarray:
        x = _as_batch(x, self.in_dim)
        self._x = x
        self._pre = x @ self.w.T + self.b
        if self.activation == "tanh":
            self._out = np.tanh(self._pre)
        elif self.activation == "relu":
            self._out = np.maximum(self._pre, 0.0)
        else:
            self._out = self._pre
        return self._out

    def backward(self, err) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward called before forward")
        err = _as_batch(err, self.out_dim)
        if err.shape != self._pre.shape:
            raise ValueError(
                f"error shape {err.shape} does not match cached batch {self._pre.shape}"
            )
        if self.activation == "tanh":
            d_pre = err * (1.0 - self._out**2)
        elif self.activation == "relu":
            d_pre = err * (self._pre > 0)
        else:
            d_pre = err
        self.gw += d_pre.T @ self._x
        self.gb += d_pre.sum(axis=0)
        return d_pre @ self.w

    def params(self) -> list[np.ndarray]:
        return [self.w, self.b]

    def grads(self) -> list[np.ndarray]:
        return [self.gw, self.gb]

    def param_count(self) -> int:
        return self.w.size + self.b.size


def bce_with_logits(logits, labels) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy from logits, stable for huge magnitudes.

    Returns the mean negative log-likelihood and the error signal
    ``(sigmoid(logit) - label) / batch`` that seeds the backward wave.
    """
    logits = _as_batch(logits)
    labels = _as_batch(labels)
    if logits.shape != labels.shape:
        raise ValueError(f"shape mismatch: logits {logits.shape}, labels {labels.shape}")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    z = logits
    nll = np.maximum(z, 0.0) - z * labels + np.log1p(np.exp(-np.abs(z)))
    error = (sigmoid(z) - labels) / z.size
    return float(nll.mean()), error


class GaussianGate:
    """Reparameterized Gaussian message with a KL rate to the standard prior.

    During training the transmitted message is ``mu + exp(logvar / 2) * eps``
    with fresh standard-normal noise; a deterministic pass sends ``mu``.
    The rate estimate is the mean per-sample KL divergence of the posterior
    ``N(mu, diag(exp(logvar)))`` from ``N(0, I)``, in nats.
    """

    def __init__(self):
        self._mu: np.ndarray | None = None
        self._logvar: np.ndarray | None = None
        self._eps: np.ndarray | None = None

    def forward(
        self,
        mu,
        logvar,
        rng: np.random.Generator | None = None,
        stochastic: bool = True,
    ) -> tuple[np.ndarray, float]:
        mu = _as_batch(mu)
        logvar = _as_batch(logvar)
        if mu.shape != logvar.shape:
            raise ValueError(f"shape mismatch: mu {mu.shape}, logvar {logvar.shape}")
        if stochastic:
            if rng is None:
                raise ValueError("stochastic gate pass needs an rng")
            eps = rng.standard_normal(mu.shape)
        else:
            eps = np.zeros_like(mu)
        message = mu + np.exp(0.5 * logvar) * eps
        kl_per_sample = 0.5 * (np.exp(logvar) + mu**2 - 1.0 - logvar).sum(axis=1)
        self._mu, self._logvar, self._eps = mu, logvar, eps
        return message, float(kl_per_sample.mean())

    def backward(self, upstream, rate_weight: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of task loss plus ``rate_weight`` times the mean KL.

        ``upstream`` is the task-loss gradient with respect to the emitted
        message; the cached noise makes the reparameterized path exact.
        """
        if self._mu is None:
            raise RuntimeError("backward called before forward")
        upstream = _as_batch(upstream)
        if upstream.shape != self._mu.shape:
            raise ValueError(
                f"error shape {upstream.shape} does not match cached {self._mu.shape}"
            )
        d_mu = upstream.copy()
        d_logvar = upstream * self._eps * 0.5 * np.exp(0.5 * self._logvar)
        if rate_weight:
            n = self._mu.shape[0]
            d_mu += rate_weight * self._mu / n
            d_logvar += rate_weight * 0.5 * (np.exp(self._logvar) - 1.0) / n
        return d_mu, d_logvar


class Adam:
    """Bias-corrected adaptive-moment optimizer over parallel lists of arrays.

    Holds references to parameter and gradient buffers, updates parameters in
    place, and zeroes each gradient buffer after the step.
    """

    def __init__(
        self,
        params: list[np.ndarray],
        grads: list[np.ndarray],
        lr: float = 1e-2,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if len(params) != len(grads):
            raise ValueError("params and grads must pair up")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}")
        self.params = params
        self.grads = grads
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, self.grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            g[:] = 0.0


def empirical_mi(joint_counts) -> float:
    """Plug-in mutual information of an empirical joint count table, in nats.

    Zero-count cells contribute nothing (0 log 0 = 0); an all-zero table has
    no empirical distribution and raises.
    """
    counts = np.asarray(joint_counts, dtype=np.float64)
    if counts.ndim != 2:
        raise ValueError(f"expected a 2-D count table, got shape {counts.shape}")
    if (counts < 0).any():
        raise ValueError("counts must be nonnegative")
    total = counts.sum()
    if total == 0:
        raise ValueError("count table is all zero")
    p = counts / total
    marginal = p.sum(axis=1, keepdims=True) @ p.sum(axis=0, keepdims=True)
    nz = p > 0
    return float((p[nz] * np.log(p[nz] / marginal[nz])).sum())
