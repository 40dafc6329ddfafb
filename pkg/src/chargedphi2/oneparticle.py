"""One-particle operators on a momentum lattice.

Everything here lives on the span of the lattice cell basis, where the matrix
of an operator with momentum kernel K(k1, k2) is the midpoint compression
K(gamma, gamma') / v.  That single 1/v quadrature weight makes the matrix
2-norm approximate the operator norm and the plain Frobenius norm approximate
the Hilbert-Schmidt norm of the continuum kernel, so the two norm constants
entering the stability threshold are read off the weighted matrices directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError, ShapeError
from .lattice import MomentumLattice
from .potentials import Potential

DENSE_NORM_LIMIT = 2048
POWER_TOL = 1e-10
POWER_MAXITER = 50000


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value: dense SVD below dimension 2048, else power iteration.

    The power iteration runs on a^H a with a deterministic start vector and a
    relative tolerance of 1e-10, so results are reproducible across runs.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise ShapeError("operator_norm expects a matrix")
    if max(a.shape) < DENSE_NORM_LIMIT:
        return float(np.linalg.svd(a, compute_uv=False)[0])
    v = np.full(a.shape[1], 1.0 / math.sqrt(a.shape[1]), dtype=complex)
    est = 0.0
    for _ in range(POWER_MAXITER):
        w = a.conj().T @ (a @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        new_est = math.sqrt(nrm)
        v = w / nrm
        if abs(new_est - est) <= POWER_TOL * max(new_est, 1.0):
            return new_est
        est = new_est
    return est


def potential_matrix(pot: Potential, lattice: MomentumLattice) -> np.ndarray:
    """Momentum-representation matrix of multiplication by the potential.

    Entry (gamma, gamma') is V_hat(gamma - gamma') / (2 pi v); Hermitian for
    real potentials since then V_hat(-k) = conj(V_hat(k)).
    """
    g = lattice.modes
    k_diff = g[:, None] - g[None, :]
    return np.asarray(pot.V_hat(k_diff), dtype=complex) / (2 * np.pi * float(lattice.v))


def b_matrix(pot: Potential, lattice: MomentumLattice) -> np.ndarray:
    """Charge-mixing one-particle operator b.

    b = (i/2)(eps^{1/2} V eps^{-1/2} + eps^{-1/2} V eps^{1/2}) in the momentum
    representation; anti-Hermitian (b^H = -b) for real V.
    """
    m = potential_matrix(pot, lattice)
    s = np.sqrt(lattice.dispersion())
    ratio = s[:, None] / s[None, :]
    sym = 0.5 * (ratio + 1.0 / ratio)
    return 1j * sym * m


@dataclass(frozen=True)
class PairKernel:
    """Antisymmetric pair-creation kernel R over lattice mode pairs.

    matrix[i, j] couples a species-1 creator at mode i with a species-2
    creator at mode j; antisymmetry R_ij = -R_ji is exact by construction.
    """

    lattice: MomentumLattice
    matrix: np.ndarray

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.matrix))


def pair_kernel(pot: Potential, lattice: MomentumLattice) -> PairKernel:
    """Kernel of the pair-creation part of the charge operator.

    R(g, g') = (i/4pi) V_hat(g+g') (eps(g)^{1/2} eps(g')^{-1/2}
                - eps(g)^{-1/2} eps(g')^{1/2}) / v.

    The diagonal vanishes (the bracket is antisymmetric) and every entry obeys
    |R(g, g')| <= (1/4pi) |Vp_hat(g+g')| eps(g)^{-1/2} eps(g')^{-1/2} / v.
    """
    g = lattice.modes
    s = np.sqrt(lattice.dispersion())
    ratio = s[:, None] / s[None, :]
    bracket = ratio - ratio.T
    vhat = np.asarray(pot.V_hat(g[:, None] + g[None, :]), dtype=complex)
    mat = (1j / (4 * np.pi)) * vhat * bracket / float(lattice.v)
    return PairKernel(lattice=lattice, matrix=mat)


def pair_kernel_bound(pot: Potential, lattice: MomentumLattice) -> np.ndarray:
    """Entrywise upper bound matrix (1/4pi) |Vp_hat(g+g')| / sqrt(eps eps') / v."""
    g = lattice.modes
    s = np.sqrt(lattice.dispersion())
    vp = np.abs(pot.Vp_hat(g[:, None] + g[None, :]))
    return vp / (4 * np.pi * s[:, None] * s[None, :] * float(lattice.v))


@dataclass(frozen=True)
class CouplingReport:
    """Norm constants and the stability threshold for a potential on a lattice.

    c0 is half the operator norm of eps^{-1} V + V eps^{-1}; c1 the Frobenius
    (discrete Hilbert-Schmidt) norm of eps^{-1/2} [V, eps] eps^{-1/2}; the
    threshold is 1 / (c0 + c1/m), +infinity when both constants vanish.
    """

    c0: float
    c1: float
    lambda_quant: float
    lattice: MomentumLattice

    def as_dict(self) -> dict:
        return {
            "c0": self.c0,
            "c1": self.c1,
            "lambda_quant": "inf" if math.isinf(self.lambda_quant) else self.lambda_quant,
            "lattice": {"v": str(self.lattice.v), "kappa": self.lattice.kappa},
        }


def lambda_quant(pot: Potential, lattice: MomentumLattice) -> CouplingReport:
    """Compute the coupling threshold below which the charge term is tame.

    Both constants are 1-homogeneous in the potential, so the threshold scales
    as lambda_quant(t V) = lambda_quant(V) / t.
    """
    m = potential_matrix(pot, lattice)
    eps = lattice.dispersion()
    sym = m / eps[None, :] + m / eps[:, None]
    c0 = 0.5 * operator_norm(sym)
    s = np.sqrt(eps)
    comm = m * (eps[None, :] - eps[:, None])
    c1 = float(np.linalg.norm(comm / (s[:, None] * s[None, :])))
    denom = c0 + c1 / lattice.m
    lam = math.inf if denom == 0.0 else 1.0 / denom
    return CouplingReport(c0=c0, c1=c1, lambda_quant=lam, lattice=lattice)


@dataclass(frozen=True)
class OneParticleBlockOperator:
    """Hermitian two-species block operator [[eps, lam*b], [lam*b^H, eps]].

    min_eig is the smallest eigenvalue of the assembled 2M x 2M matrix; it is
    positive whenever |lam| stays below the stability threshold.
    """

    lattice: MomentumLattice
    lam: float
    b: np.ndarray
    min_eig: float

    def full(self) -> np.ndarray:
        n = self.lattice.size
        eps = self.lattice.dispersion()
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, :n] = np.diag(eps)
        out[n:, n:] = np.diag(eps)
        out[:n, n:] = self.lam * self.b
        out[n:, :n] = self.lam * self.b.conj().T
        return out


def omega_block(lam: float, pot: Potential, lattice: MomentumLattice) -> OneParticleBlockOperator:
    """Assemble the dressed one-particle energy and report its bottom eigenvalue."""
    b = b_matrix(pot, lattice)
    n = lattice.size
    full = np.zeros((2 * n, 2 * n), dtype=complex)
    eps = lattice.dispersion()
    full[:n, :n] = np.diag(eps)
    full[n:, n:] = np.diag(eps)
    full[:n, n:] = lam * b
    full[n:, :n] = lam * b.conj().T
    min_eig = float(np.linalg.eigvalsh(full)[0])
    return OneParticleBlockOperator(lattice=lattice, lam=float(lam), b=b, min_eig=min_eig)


@dataclass(frozen=True)
class WeylGrid:
    """Matched position/momentum grids for the midpoint Weyl quantizer.

    The momentum grid is the sorted FFT dual of the position grid, so a
    position-independent symbol quantizes to an exact Fourier multiplier.
    """

    x: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        if self.x.ndim != 1 or self.k.ndim != 1 or self.x.size != self.k.size:
            raise ShapeError("position and momentum grids must be 1d of equal size")

    @property
    def size(self) -> int:
        return self.x.size

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dk(self) -> float:
        return float(self.k[1] - self.k[0])


def weyl_grid(points: int, length: float) -> WeylGrid:
    """Centered position grid of given extent with a half-dual momentum grid.

    The momentum spacing is pi/length, so the kernel quadrature is periodic in
    x - y with period twice the position extent: no wrap-around image reaches
    the far corners of the matrix, which a plain FFT-dual grid would alias.
    """
    if points < 2 or points % 2 != 0:
        raise ParameterError(f"points must be even and >= 2, got {points}")
    dx = length / points
    x = (np.arange(points) - points // 2) * dx
    dk = np.pi / length
    k = (np.arange(points) - points // 2) * dk
    return WeylGrid(x=x, k=k)


def weyl_quantize(symbol: Callable[[np.ndarray, np.ndarray], np.ndarray], grid: WeylGrid) -> np.ndarray:
    """Midpoint discretization of the Weyl operator of a phase-space symbol.

    Matrix entries are (2 pi)^{-1} sum_l exp(i (x_i - x_j) k_l)
    a((x_i + x_j)/2, k_l) dk dx, so the squared Frobenius norm approximates
    (2 pi)^{-1} times the squared L2 norm of the symbol.
    """
    x, k = grid.x, grid.k
    n = grid.size
    out = np.empty((n, n), dtype=complex)
    pref = grid.dk * grid.dx / (2 * np.pi)
    for j in range(n):
        mid = 0.5 * (x + x[j])
        vals = np.asarray(symbol(mid[:, None], k[None, :]), dtype=complex)
        phase = np.exp(1j * (x - x[j])[:, None] * k[None, :])
        out[:, j] = pref * (phase * vals).sum(axis=1)
    return out


def hs_norm_squared(mat: np.ndarray) -> float:
    """Squared Frobenius norm, the discrete Hilbert-Schmidt size of an operator."""
    return float(np.linalg.norm(mat) ** 2)


def weighted_kernel_norm(kern: PairKernel, s: float) -> float:
    """Frobenius norm of the kernel after a spectral |d/dk1|^s weight.

    The fractional difference acts along the first mode axis through the DFT
    of the lattice, with dual frequencies 2 pi fftfreq(M, 1/v); s = 0 returns
    the plain Frobenius norm exactly.  Used to monitor kernel smoothness under
    lattice refinement.
    """
    if s < 0:
        raise ParameterError(f"weight exponent must be nonnegative, got {s}")
    if s == 0:
        return kern.frobenius()
    mat = kern.matrix
    n = mat.shape[0]
    xi = 2 * np.pi * np.fft.fftfreq(n, d=kern.lattice.spacing())
    weighted = (np.abs(xi) ** s)[:, None] * np.fft.fft(mat, axis=0)
    return float(np.linalg.norm(weighted) / math.sqrt(n))
