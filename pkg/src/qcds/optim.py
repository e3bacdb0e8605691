"""A small Adam optimiser over flat numpy parameter vectors."""
import numpy as np


class Adam:
    """Adam for minimisation; ``step`` returns the updated vector."""

    def __init__(self, lr=5e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ValueError("lr must be positive")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, x, grad):
        grad = np.asarray(grad, dtype=float)
        if self.m is None:
            self.m = np.zeros_like(grad)
            self.v = np.zeros_like(grad)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        return x - self.lr * mhat / (np.sqrt(vhat) + self.eps)


class AdamTree:
    """Adam applied independently to a dict of arrays (used by the MLP)."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.opts = {}
        self.kw = dict(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self, params, grads):
        for k in params:
            if k not in self.opts:
                self.opts[k] = Adam(**self.kw)
            params[k] = self.opts[k].step(params[k], grads[k])
        return params
