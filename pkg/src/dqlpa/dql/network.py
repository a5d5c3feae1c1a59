"""Feed-forward Q network in float64 numpy with hand-written backprop and Adam."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError


class Adam:
    """Adam moment state for a list of parameter arrays."""

    def __init__(self, shapes, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)


class QNetwork:
    """affine - ReLU - affine - ReLU - affine, mapping a state to one Q value per action.

    Weights are stored ``(fan_in, fan_out)`` so a batch ``x`` of shape
    ``(B, fan_in)`` maps as ``x @ W + b``.
    """

    def __init__(self, dims, rng: np.random.Generator | None = None):
        self.dims = [int(d) for d in dims]
        if len(self.dims) < 2:
            raise ValueError("need at least input and output dims")
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.dims[:-1], self.dims[1:]):
            if rng is None:
                w = np.zeros((fan_in, fan_out))
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
                w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))
        self.adam = Adam([p.shape for p in self.params])

    @property
    def params(self) -> list[np.ndarray]:
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.input_dim:
            raise ValueError(f"state length {x.shape[-1]} != network input {self.input_dim}")
        return x

    def _forward(self, x):
        pre, act = [], [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = z if i == last else np.maximum(z, 0.0)
            act.append(h)
        return pre, act

    def forward(self, x) -> np.ndarray:
        x = self._check(x)
        return self._forward(x)[1][-1]

    __call__ = forward

    def _backward(self, pre, act, dout):
        grads_w, grads_b = [None] * len(self.weights), [None] * len(self.weights)
        delta = dout
        for i in reversed(range(len(self.weights))):
            grads_w[i] = act[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0)
        return grads_w, grads_b

    def loss_and_grads(self, states, actions, targets):
        """Mean squared TD error on the taken actions and its parameter gradients.

        Gradients are returned in :attr:`params` order.
        """
        x = self._check(np.atleast_2d(states))
        actions = np.asarray(actions, dtype=int)
        targets = np.asarray(targets, dtype=float)
        pre, act = self._forward(x)
        q = act[-1]
        rows = np.arange(len(x))
        err = q[rows, actions] - targets
        loss = float(np.mean(err**2))
        dout = np.zeros_like(q)
        dout[rows, actions] = 2.0 * err / len(x)
        gw, gb = self._backward(pre, act, dout)
        return loss, [a for pair in zip(gw, gb) for a in pair]

    def input_gradient(self, state, action: int) -> np.ndarray:
        """d Q(state, action) / d state."""
        x = self._check(np.atleast_2d(state))
        pre, act = self._forward(x)
        delta = np.zeros_like(act[-1])
        delta[:, action] = 1.0
        for i in reversed(range(len(self.weights))):
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * (pre[i - 1] > 0)
        return delta[0]

    def apply_gradients(self, grads, lr: float) -> None:
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise TrainingError("non-finite gradient")
        self.adam.step(self.params, grads, lr)

    def copy(self) -> "QNetwork":
        other = QNetwork(self.dims)
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        other.adam.m = [m.copy() for m in self.adam.m]
        other.adam.v = [v.copy() for v in self.adam.v]
        other.adam.t = self.adam.t
        return other
