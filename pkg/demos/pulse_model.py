"""How close is the pulse-level ECD to the ideal gate, and to a brute-force solve?"""
import numpy as np

from qcds import pulse, qcore

params = pulse.PhysicalParams()
n = 50
print(f"calibrated drive amplitude: {pulse.calibrate_ecd_amplitude(params) / 2 / np.pi / 1e6:.2f} MHz")

g = qcore.ground_state(n)
for phase in (0.0, np.pi / 3, np.pi):
    u = pulse.ecd_pulse_unitary(phase, params, n)
    ideal = qcore.build_ecd(0.24 * np.exp(1j * phase), n)
    print(f"phase {phase:.3f}: 1 - F(pulse, ideal) on |0,g> = {1 - qcore.state_fidelity(u @ g, ideal @ g):.2e}")

rng = np.random.default_rng(0)
psi = np.zeros(2 * n, complex)
psi[:4] = rng.normal(size=4)
psi[n:n + 4] = rng.normal(size=4)
psi /= np.linalg.norm(psi)
u = pulse.ecd_pulse_unitary(0.5, params, n, pi_pulse="finite")
ref = pulse.brute_force_evolve(psi, pulse.ecd_schedule(0.5, params), params, n, dt=0.1e-9)
print(f"finite-pi composite vs brute force: 1 - F = {1 - qcore.state_fidelity(ref, u @ psi):.2e}")
