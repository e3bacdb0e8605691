"""Fully connected ReLU classifier with softmax cross-entropy, in numpy."""
from dataclasses import dataclass

import numpy as np

from ..optim import AdamTree


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple = (2, 64, 64, 2)

    def __post_init__(self):
        if len(self.layer_sizes) < 2 or self.layer_sizes[-1] != 2:
            raise ValueError("an MLP needs an input size and 2 outputs")


class MLP:
    def __init__(self, spec, rng):
        self.spec = spec
        self.params = {}
        sizes = spec.layer_sizes
        for i, (m, n) in enumerate(zip(sizes[:-1], sizes[1:])):
            # He initialisation for the ReLU layers
            self.params[f"W{i}"] = rng.normal(0, np.sqrt(2.0 / m), (m, n))
            self.params[f"b{i}"] = np.zeros(n)
        self.n_layers = len(sizes) - 1

    def forward(self, x):
        acts = [x]
        h = x
        for i in range(self.n_layers):
            z = h @ self.params[f"W{i}"] + self.params[f"b{i}"]
            h = np.maximum(z, 0) if i < self.n_layers - 1 else z
            acts.append(h)
        return h, acts

    def predict(self, x):
        """Index of the larger output (0 = class A, 1 = class B)."""
        return np.argmax(self.forward(x)[0], axis=1)

    def loss_grad(self, x, y):
        """Mean cross-entropy, parameter gradients and input gradient."""
        logits, acts = self.forward(x)
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        m = len(y)
        loss = -np.mean(logp[np.arange(m), y])
        d = np.exp(logp)
        d[np.arange(m), y] -= 1
        d /= m
        grads = {}
        for i in reversed(range(self.n_layers)):
            grads[f"W{i}"] = acts[i].T @ d
            grads[f"b{i}"] = d.sum(axis=0)
            d = d @ self.params[f"W{i}"].T
            if i > 0:
                d = d * (acts[i] > 0)
        return loss, grads, d


def fit(mlp, x_fn, y, epochs=5000, batch=64, lr=1e-3, rng=None, on_epoch=None, input_grad=None):
    """Minibatch Adam training.

    ``x_fn(epoch, idx)`` returns the features of the selected points, so
    noisy channels can redraw their samples every epoch.  ``input_grad``
    receives (epoch, idx, dL/dx) for channels with trainable parameters.
    ``on_epoch(epoch)`` is called after every epoch.
    """
    rng = np.random.default_rng(rng)
    opt = AdamTree(lr)
    n = len(y)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for s in range(0, n, batch):
            idx = order[s:s + batch]
            _, grads, dx = mlp.loss_grad(x_fn(epoch, idx), y[idx])
            opt.step(mlp.params, grads)
            if input_grad is not None:
                input_grad(epoch, idx, dx)
        if on_epoch is not None:
            on_epoch(epoch)
    return mlp
