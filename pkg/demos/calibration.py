"""Recover chi and the drive scale from a synthetic entangled-Ramsey sweep."""
import numpy as np

from qcds import calibration as cal

for noise in (0.0, 0.01):
    sweep = cal.synthetic_sweep(noise=noise, seed=1)
    res = cal.fit_and_extract(sweep)
    print(f"noise {noise}: chi/2pi = {res.chi / 2 / np.pi / 1e3:.2f} kHz "
          f"(true {cal.CHI / 2 / np.pi / 1e3:.2f}), s = {res.s:.3f} (true {cal.SCALE})")
    for z, f in zip(sweep.amplitudes_z, res.fits):
        print(f"   z={z:.3f}  C={f.C:.4g} 1/s  f={f.f / 1e6:.4f} MHz  rms={f.rms:.2e}")
