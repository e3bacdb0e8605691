"""Train an MLP on a measurement channel and report its test accuracy."""
from dataclasses import dataclass

import numpy as np

from .. import tasks
from ..optim import Adam
from .channels import make_channel
from .mlp import MLP, MlpSpec, fit

# hidden layers per channel; input width comes from the channel
HIDDEN = {
    "noiseless": (64, 64),
    "constant": (64, 64),
    "heterodyne": (64, 64),
    "squeezed": (8,),
    "gkp_ion": (64, 64),
    "tms": (64, 64, 64),
}


@dataclass(frozen=True)
class MlpTrainConfig:
    epochs: int = 5000
    batch: int = 64
    lr: float = 1e-2
    settings_lr: float = 1e-2
    average_last: int = 100
    size: int = 512
    seed: int = 0


@dataclass
class BaselineResult:
    name: str
    accuracy: float
    stderr: float
    train_accuracy: float
    settings: np.ndarray
    model: MLP = None
    channel: object = None


def mlp_spec_for(channel):
    return MlpSpec((channel.n_features,) + HIDDEN[channel.name] + (2,))


def _run(channel, train_set, test_set, mlp_spec, cfg, start, seed):
    channel.set_settings(start)
    rng = np.random.default_rng(seed)
    mlp = MLP(mlp_spec, rng)
    noise = np.random.default_rng([seed, 1])
    test_noise = np.random.default_rng([seed, 2])
    opt = Adam(cfg.settings_lr) if channel.trainable else None
    xs, ys = train_set.alphas, train_set.labels
    hist_test, hist_train = [], []
    first = cfg.epochs - cfg.average_last

    def x_fn(epoch, idx):
        return channel.features(xs[idx], noise)

    def input_grad(epoch, idx, dx):
        if opt is not None:
            g = channel.settings_grad(xs[idx], dx)
            channel.set_settings(opt.step(channel.settings(), g))

    def on_epoch(epoch):
        if epoch >= first:
            f = channel.features(test_set.alphas, test_noise)
            hist_test.append(np.mean(mlp.predict(f) == test_set.labels))
            f = channel.features(xs, test_noise)
            hist_train.append(np.mean(mlp.predict(f) == ys))

    fit(mlp, x_fn, ys, cfg.epochs, cfg.batch, cfg.lr, rng, on_epoch, input_grad)
    return np.array(hist_test), float(np.mean(hist_train)), channel.settings(), mlp


def mlp_train_eval(channel, spec, mlp_spec=None, cfg=MlpTrainConfig(), data=None):
    """Test accuracy averaged over the last epochs, with noise redrawn every epoch.

    Channels with trainable settings are trained jointly with the MLP; for
    each entry of ``channel.starts()`` a full run is made and the run with
    the best training accuracy is kept.
    """
    if isinstance(channel, str):
        channel = make_channel(channel, spec.bound)
    mlp_spec = mlp_spec or mlp_spec_for(channel)
    if mlp_spec.layer_sizes[0] != channel.n_features:
        raise ValueError("MLP input size does not match the channel")
    train_set, test_set = data or tasks.train_test(spec, cfg.size, cfg.seed)
    best = None
    for k, start in enumerate(channel.starts()):
        run = _run(channel, train_set, test_set, mlp_spec, cfg, start, [cfg.seed, k])
        if best is None or run[1] > best[1]:
            best = run
    hist, tr_acc, settings, mlp = best
    channel.set_settings(settings)
    acc = float(np.mean(hist))
    stderr = float(np.sqrt(max(acc * (1 - acc), 1e-12) / len(test_set)))
    return BaselineResult(channel.name, acc, stderr, tr_acc, settings, mlp, channel)


def pipeline_accuracy(result, data, seed=0, repeats=100):
    """Accuracy of a trained channel + MLP on ``data``, averaged over noise draws."""
    rng = np.random.default_rng(seed)
    accs = [np.mean(result.model.predict(result.channel.features(data.alphas, rng)) == data.labels)
            for _ in range(repeats)]
    return float(np.mean(accs))
