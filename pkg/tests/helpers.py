import numpy as np

from embedlab import matcore as mc
from embedlab.lindblad import Lindbladian


def random_hermitian(n, rng):
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (M + M.conj().T)


def random_pure(n, rng):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_density(n, rng, rank=None):
    rank = rank or n
    X = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = X @ X.conj().T
    return mc.DensityMatrix(rho / np.trace(rho).real)


def random_unitary(n, rng):
    Q, R = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_lindbladian(d, rng, n_jumps=2, scale=1.0, h_scale=1.0):
    H = h_scale * random_hermitian(d, rng)
    jumps = tuple(scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) for _ in range(n_jumps))
    return Lindbladian(H, jumps)
