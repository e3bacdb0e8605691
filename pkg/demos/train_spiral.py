"""Train shallow and deep sensing circuits on a spiral and compare them.

Short runs so it finishes in a couple of minutes; raise ``epochs`` and
``restarts`` for converged numbers.
"""
import numpy as np

from qcds import ProtocolConfig, TaskSpec, TrainConfig, run_protocol, train

spec = TaskSpec("spiral", W=1.5, r_max=7.2)
cfg = TrainConfig(epochs=300, restarts=2, size=256)

for depth in (1, 4, 8):
    rep = train(cfg, ProtocolConfig(depth), spec)
    print(f"N={depth:2d}  train {rep.best_accuracy:.3f}  test {rep.test_accuracy:.3f}  "
          f"converged={rep.converged()}")

# a coarse look at the deepest circuit: '#' where the qubit mostly ends in e
x = np.linspace(-7.2, 7.2, 41)
grid = x[None, :] + 1j * x[::-1, None]
p = run_protocol(grid.ravel(), rep.best_params, ProtocolConfig(8)).reshape(grid.shape)
for row in p:
    print("".join("#" if v > 0.5 else "." for v in row))
