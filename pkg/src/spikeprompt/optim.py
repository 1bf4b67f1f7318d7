"""Adaptive-moment gradient descent over Tensor parameters."""

import numpy as np


class Adam:
    """First/second-moment optimizer with bias correction.

    Weight decay is added to the raw gradient before the moment updates
    (coupled decay), matching the convention of the experiments this repo runs.
    """

    def __init__(self, params, lr: float = 1e-3, weight_decay: float = 0.0,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        if not lr > 0:
            raise ValueError("learning rate must be > 0")
        self.params = list(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.values) for p in self.params]
        self._v = [np.zeros_like(p.values) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = np.zeros_like(p.values) if p.grad is None else p.grad
            if self.weight_decay:
                g = g + self.weight_decay * p.values
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.values -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if not np.all(np.isfinite(p.values)):
                raise ValueError("non-finite parameter values after optimizer step")
