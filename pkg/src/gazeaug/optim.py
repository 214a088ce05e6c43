"""Adam-style adaptive-moment optimizer used by both network trainers."""

from __future__ import annotations

import numpy as np


class Adam:
    """Adaptive moment estimation over a fixed list of parameter arrays.

    Parameters are updated in place. Scratch buffers keep the step free
    of temporaries, which matters on memory-bound hosts; the parameter
    list must keep a stable order across steps.
    """

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float, beta2: float,
                 eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self._s1 = [np.empty_like(p) for p in params]
        self._s2 = [np.empty_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1**self.t
        inv_sqrt_bc2 = 1.0 / np.sqrt(1.0 - b2**self.t)
        for p, g, m, v, s1, s2 in zip(self.params, grads, self.m, self.v,
                                      self._s1, self._s2, strict=True):
            np.multiply(m, b1, out=m)
            np.multiply(g, 1.0 - b1, out=s1)
            np.add(m, s1, out=m)
            np.multiply(g, g, out=s1)
            np.multiply(s1, 1.0 - b2, out=s1)
            np.multiply(v, b2, out=v)
            np.add(v, s1, out=v)
            np.sqrt(v, out=s2)
            np.multiply(s2, inv_sqrt_bc2, out=s2)
            np.add(s2, self.eps, out=s2)
            np.divide(m, s2, out=s2)
            np.multiply(s2, self.lr / bc1, out=s2)
            np.subtract(p, s2, out=p)
