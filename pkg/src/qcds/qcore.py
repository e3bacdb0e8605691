"""Truncated Fock-space primitives for a qubit coupled to an oscillator.

States are complex vectors of length ``2 * n_fock`` laid out qubit-major,
``[g-block | e-block]``, so ``psi.reshape(2, n_fock)`` gives the two
oscillator wavefunctions conditioned on the qubit level.  The qubit ground
state ``|g>`` is the +1 eigenstate of sigma_z.
"""
from functools import lru_cache
import warnings

import numpy as np

from .exceptions import TruncationWarning

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def annihilation(n_fock):
    """Truncated annihilation operator with <m|a|m+1> = sqrt(m+1)."""
    if n_fock < 1:
        raise ValueError("n_fock must be positive")
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), 1).astype(complex)


class FockBasis:
    """Cached operators for one Fock cutoff.

    Displacements are evaluated from a single eigendecomposition of the
    Hermitian quadrature generator K = i(a^dag - a):
    D(r e^{i phi}) = P(phi) V exp(-i r Lambda) V^dag P(phi)^dag with
    P(phi) = exp(i phi n).  This keeps every D exactly unitary on the
    truncated space and makes batches of displacements O(n^2) each.
    """

    def __init__(self, n_fock=50):
        self.n = int(n_fock)
        self.a = annihilation(self.n)
        self.number = np.arange(self.n, dtype=float)
        k = 1j * (self.a.conj().T - self.a)
        lam, vec = np.linalg.eigh(k)
        self.lam = lam
        self.vec = vec
        self.vec_h = vec.conj().T
        # (a^dag - a) in the eigenbasis is diag(-i lam)

    def check_truncation(self, alpha):
        nbar = float(np.max(np.abs(np.asarray(alpha)) ** 2)) if np.size(alpha) else 0.0
        if nbar > self.n / 4:
            warnings.warn(
                f"<n> = {nbar:.2f} exceeds n_fock/4 = {self.n / 4:.2f}",
                TruncationWarning,
                stacklevel=3,
            )

    def displacement(self, alpha, check=True):
        """Dense D(alpha) on the truncated oscillator space."""
        alpha = complex(alpha)
        if check:
            self.check_truncation(alpha)
        r, phi = abs(alpha), np.angle(alpha)
        d = (self.vec * np.exp(-1j * r * self.lam)) @ self.vec_h
        ph = np.exp(1j * phi * self.number)
        return ph[:, None] * d * ph.conj()[None, :]

    def displacements(self, alphas, check=True):
        """Stack of dense displacements, shape (len(alphas), n, n)."""
        alphas = np.asarray(alphas, dtype=complex).ravel()
        if check:
            self.check_truncation(alphas)
        r = np.abs(alphas)
        ph = np.exp(1j * np.angle(alphas)[:, None] * self.number[None, :])
        core = np.einsum("ik,bk,kj->bij", self.vec, np.exp(-1j * r[:, None] * self.lam), self.vec_h)
        return ph[:, :, None] * core * ph.conj()[:, None, :]

    def displace(self, alphas, vecs, check=True):
        """Apply D(alpha_b) to vecs[b] without forming the matrices.

        ``alphas`` has shape (B,) and ``vecs`` shape (B, n); a single vector
        is broadcast against all displacements.
        """
        alphas = np.asarray(alphas, dtype=complex)
        if check:
            self.check_truncation(alphas)
        vecs = np.asarray(vecs, dtype=complex)
        ph = np.exp(1j * np.angle(alphas)[..., None] * self.number)
        x = vecs * ph.conj()
        x = x @ self.vec_h.T
        x = x * np.exp(-1j * np.abs(alphas)[..., None] * self.lam)
        x = x @ self.vec.T
        return x * ph

    def quadrature(self):
        """The anti-Hermitian generator a^dag - a."""
        return self.a.conj().T - self.a


@lru_cache(maxsize=16)
def fock_basis(n_fock=50):
    return FockBasis(n_fock)


def displacement(alpha, n_fock=50):
    """D(alpha) = exp(alpha a^dag - alpha^* a) on n_fock levels."""
    return fock_basis(n_fock).displacement(alpha)


def qubit_rotation(theta, phi):
    """2x2 matrix of R(theta, phi) = exp[i theta/2 (cos phi sx + sin phi sy)]."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return c * I2 + 1j * s * (np.cos(phi) * SX + np.sin(phi) * SY)


def build_rotation(theta, phi, n_fock=50):
    """Qubit rotation R(theta, phi) acting trivially on the oscillator."""
    return np.kron(qubit_rotation(theta, phi), np.eye(n_fock))


def ecd_blocks(beta, n_fock=50):
    """Blocks (A, B) of ECD(beta): A maps e -> g, B maps g -> e."""
    fb = fock_basis(n_fock)
    a = fb.displacement(beta / 2, check=False)
    return a, a.conj().T


def build_ecd(beta, n_fock=50):
    """ECD(beta) = D(beta/2)|g><e| + D(-beta/2)|e><g|.

    The operator is Hermitian and squares to the identity.
    """
    a, b = ecd_blocks(beta, n_fock)
    z = np.zeros((n_fock, n_fock), dtype=complex)
    return np.block([[z, a], [b, z]])


def ground_state(n_fock=50):
    """|0, g>."""
    psi = np.zeros(2 * n_fock, dtype=complex)
    psi[0] = 1.0
    return psi


def coherent_state(alpha, n_fock=50, qubit="g"):
    """|alpha> tensor |qubit> built from the truncated displacement."""
    osc = fock_basis(n_fock).displacement(alpha)[:, 0]
    psi = np.zeros(2 * n_fock, dtype=complex)
    off = 0 if qubit == "g" else n_fock
    psi[off:off + n_fock] = osc
    return psi


def excited_probability(psi):
    """Norm squared of the e-block; works along the last axis for batches."""
    psi = np.asarray(psi)
    n = psi.shape[-1] // 2
    return np.sum(np.abs(psi[..., n:]) ** 2, axis=-1)


def state_fidelity(psi, phi):
    """|<psi|phi>|^2 for normalised vectors (normalisation enforced)."""
    psi = np.asarray(psi, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    ov = np.vdot(psi, phi)
    return float(abs(ov) ** 2 / (np.vdot(psi, psi).real * np.vdot(phi, phi).real))


def mean_photon_number(psi):
    psi = np.asarray(psi).reshape(2, -1)
    n = np.arange(psi.shape[1])
    return float(np.sum(np.abs(psi) ** 2 * n))
