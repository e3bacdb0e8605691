"""Conventional strategies on one spiral: estimate-then-classify versus cat sensing."""
from qcds import TaskSpec
from qcds.baselines import cat, mlp_train_eval
from qcds.baselines.benchmark import MlpTrainConfig

spec = TaskSpec("spiral", W=2.0)
cfg = MlpTrainConfig(epochs=300)
for name in ("noiseless", "heterodyne_ideal", "heterodyne_haystac", "squeezed_ideal", "tms", "gkp_ion"):
    r = mlp_train_eval(name, spec, cfg=cfg)
    print(f"{name:>20s}: {r.accuracy:.3f} +/- {r.stderr:.3f}")

for b in (0.24, 0.72, 1.2):
    F, fit = cat.fringe_fisher(b)
    print(f"cat |beta|={b:.2f}: fringe frequency {fit[2]:.3f}, Fisher information {F:.2f}")
