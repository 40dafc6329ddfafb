"""Cutoff Hamiltonians: free part, normal-ordered interaction, charge coupling.

The full operator is H = H0 + HI + lambda (Q_dgamma + Q_pair_create +
Q_pair_annih) on the truncated Fock space of a momentum lattice.  HI comes
from a bounded-below polynomial in the two field species against a spatial
profile g; its normal-ordered kernels carry one factor (4 pi v)^(-1/2) and one
eps^(-1/2) per leg, and a g_hat evaluated at the total momentum transfer.
Wick ordering is relative to the lattice vacuum: no self-contraction terms
are generated, so the vacuum expectation of HI vanishes identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .errors import ContractError, ParameterError, StabilityError
from .fock import FockBasis, FockOperator, WickKernel, dgamma, fock_embedding, wick_operator
from .lattice import MomentumLattice, NestedPair, build_nested
from .oneparticle import CouplingReport, b_matrix, lambda_quant, pair_kernel
from .potentials import Potential

Monomial = tuple[int, int, float]


def _leading_form(monomials: Sequence[Monomial], degree: int, theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros_like(theta)
    for a1, a2, coeff in monomials:
        if a1 + a2 == degree:
            out = out + coeff * c**a1 * s**a2
    return out


def _leading_form_derivative(monomials: Sequence[Monomial], degree: int, theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros_like(theta)
    for a1, a2, coeff in monomials:
        if a1 + a2 != degree:
            continue
        if a1 > 0:
            out = out - coeff * a1 * c ** (a1 - 1) * s ** (a2 + 1)
        if a2 > 0:
            out = out + coeff * a2 * c ** (a1 + 1) * s ** (a2 - 1)
    return out


def leading_form_minimum(monomials: Sequence[Monomial], degree: int, samples: int = 4096) -> float:
    """Minimum over the circle of the top-degree form of the polynomial.

    Dense sampling locates candidate wells; sign changes of the derivative
    between samples are refined by bracketing, so the certificate is the value
    at a true critical point rather than at a grid node.
    """
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    vals = _leading_form(monomials, degree, theta)
    best = float(np.min(vals))
    dvals = _leading_form_derivative(monomials, degree, theta)
    f = lambda t: float(_leading_form_derivative(monomials, degree, np.array([t]))[0])
    for i in range(samples):
        a, b = theta[i], theta[(i + 1) % samples] if i + 1 < samples else 2 * np.pi
        da, db = dvals[i], dvals[(i + 1) % samples]
        if da == 0.0:
            best = min(best, float(_leading_form(monomials, degree, np.array([a]))[0]))
        elif da * db < 0.0:
            root = brentq(f, a, b)
            best = min(best, float(_leading_form(monomials, degree, np.array([root]))[0]))
    return best


@dataclass(frozen=True)
class InteractionSpec:
    """Bounded-below field polynomial with its spatial profile.

    monomials are (power of species-1 field, power of species-2 field, real
    coefficient); the certificate is the minimum over directions of the
    leading form, positive exactly when the polynomial is bounded below.
    """

    monomials: tuple
    g: Potential
    degree: int
    certificate: float

    def is_bounded_below(self) -> bool:
        if self.degree == 0:
            return True
        return self.degree % 2 == 0 and self.certificate > 0.0


def interaction_spec(monomials: Sequence[Monomial], g: Potential) -> InteractionSpec:
    """Validate and package an interaction polynomial.

    Requires real coefficients, even degree, a positive leading-form minimum,
    and a nonnegative profile g (checked on samples).
    """
    mono = tuple((int(a1), int(a2), float(c)) for a1, a2, c in monomials)
    if not mono:
        raise ParameterError("interaction polynomial needs at least one monomial")
    if any(a1 < 0 or a2 < 0 for a1, a2, _ in mono):
        raise ParameterError("monomial powers must be nonnegative")
    active = [(a1, a2, c) for a1, a2, c in mono if c != 0.0]
    degree = max((a1 + a2 for a1, a2, _ in active), default=0)
    if degree % 2 != 0:
        raise ContractError(f"polynomial degree {degree} is odd, not bounded below")
    if degree == 0:
        cert = sum(c for a1, a2, c in active)
    else:
        cert = leading_form_minimum(active, degree)
        if cert <= 0.0:
            raise ContractError(
                f"leading form attains minimum {cert:.6g} <= 0: polynomial unbounded below"
            )
    xs = np.linspace(-64.0, 64.0, 4097)
    if float(np.min(g.V(xs))) < -1e-12:
        raise ContractError("spatial profile g must be nonnegative")
    return InteractionSpec(monomials=mono, g=g, degree=degree, certificate=cert)


def monomial_kernels(a1: int, a2: int, coeff: float, g: Potential, lattice: MomentumLattice) -> list[WickKernel]:
    """Normal-ordered kernels of one monomial, one per creator/annihilator split.

    The split (p1, p2 | q1, q2) carries the binomial count C(a1,p1) C(a2,p2),
    the per-leg weights (4 pi v)^(-1/2) eps^(-1/2), and g_hat at the total
    created-minus-annihilated momentum.
    """
    d = a1 + a2
    modes = lattice.modes
    m = lattice.size
    wvec = 1.0 / np.sqrt(lattice.dispersion())
    out = []
    if d == 0:
        out.append(
            WickKernel(p=0, q=0, species=(), coeffs=np.asarray(coeff * g.V_hat(0.0), dtype=complex))
        )
        return out
    base_pref = (4 * np.pi * float(lattice.v)) ** (-d / 2)
    for p1 in range(a1 + 1):
        for p2 in range(a2 + 1):
            q1, q2 = a1 - p1, a2 - p2
            p, q = p1 + p2, q1 + q2
            species = (1,) * p1 + (2,) * p2 + (1,) * q1 + (2,) * q2
            pref = coeff * math.comb(a1, p1) * math.comb(a2, p2) * base_pref
            total = np.zeros((1,) * d)
            amps = np.ones((1,) * d)
            for leg in range(d):
                shape = [1] * d
                shape[leg] = m
                sgn = 1.0 if leg < p else -1.0
                total = total + sgn * modes.reshape(shape)
                amps = amps * wvec.reshape(shape)
            coeffs = pref * np.asarray(g.V_hat(total), dtype=complex) * amps
            out.append(WickKernel(p=p, q=q, species=species, coeffs=coeffs).symmetrized())
    return out


def interaction_kernels(spec: InteractionSpec, lattice: MomentumLattice) -> list[WickKernel]:
    """All normal-ordered kernels of the interaction polynomial."""
    if not spec.is_bounded_below():
        raise ContractError(
            f"interaction polynomial not bounded below (certificate {spec.certificate:.6g})"
        )
    kernels: list[WickKernel] = []
    for a1, a2, coeff in spec.monomials:
        if coeff == 0.0:
            continue
        kernels.extend(monomial_kernels(a1, a2, coeff, spec.g, lattice))
    return kernels


def free_hamiltonian(basis: FockBasis) -> FockOperator:
    """Second quantization of the lattice dispersion: diagonal sector energies."""
    eps = basis.lattice.dispersion()
    eps_slots = np.concatenate([eps, eps])
    arr = np.asarray(basis.states, dtype=float)
    diag = arr @ eps_slots if basis.dim else np.zeros(0)
    return FockOperator(
        basis=basis, matrix=sp.diags(diag.astype(complex)).tocsr(), hermitian=True
    )


def charge_operator(
    pot: Potential, basis: FockBasis, lattice: MomentumLattice
) -> tuple[FockOperator, FockOperator, FockOperator]:
    """The three pieces of the local charge coupling.

    Q_dgamma second-quantizes the off-diagonal species mixer [[0, b], [b^H, 0]];
    the pair parts create and annihilate one particle of each species weighted
    by the antisymmetric kernel R; the annihilation part is the structural
    adjoint of the creation part, so the sum is Hermitian.
    """
    b = b_matrix(pot, lattice)
    m = lattice.size
    block = np.zeros((2 * m, 2 * m), dtype=complex)
    block[:m, m:] = b
    block[m:, :m] = b.conj().T
    q_d = dgamma(basis, block)
    rk = pair_kernel(pot, lattice)
    kern_create = WickKernel(p=2, q=0, species=(1, 2), coeffs=rk.matrix)
    q_create = wick_operator(basis, kern_create)
    q_annih = wick_operator(basis, kern_create.adjoint())
    return q_d, q_create, q_annih


def form_bound_constants(coupling: CouplingReport, lam: float) -> tuple[float, float]:
    """Constructive relative bound (delta, C) with +/- lam Q <= delta H0 + C.

    delta = |lam| (c0 + c1/m) and C = |lam| c1, from the two norm constants of
    the threshold; delta < 1 exactly when |lam| < lambda_quant.
    """
    lam = abs(lam)
    return lam * (coupling.c0 + coupling.c1 / coupling.lattice.m), lam * coupling.c1


@dataclass(frozen=True)
class HamiltonianBundle:
    """All assembled pieces of one cutoff Hamiltonian."""

    basis: FockBasis
    lattice: MomentumLattice
    spec: InteractionSpec
    pot: Potential
    lam: float
    h0: FockOperator
    hi: FockOperator
    q_dgamma: FockOperator
    q_pair_create: FockOperator
    q_pair_annih: FockOperator
    h: FockOperator
    coupling: CouplingReport = field(repr=False)

    def charge(self) -> FockOperator:
        mat = (self.q_dgamma.matrix + self.q_pair_create.matrix + self.q_pair_annih.matrix).tocsr()
        return FockOperator(basis=self.basis, matrix=mat, hermitian=True)

    def one_particle_energy(self) -> np.ndarray:
        """Dense dressed one-particle block [[eps, lam b], [lam b^H, eps]]."""
        m = self.lattice.size
        eps = self.lattice.dispersion()
        out = np.zeros((2 * m, 2 * m), dtype=complex)
        out[:m, :m] = np.diag(eps)
        out[m:, m:] = np.diag(eps)
        b = b_matrix(self.pot, self.lattice)
        out[:m, m:] = self.lam * b
        out[m:, :m] = self.lam * b.conj().T
        return out

    def metadata(self) -> dict:
        diag = self.h.matrix.diagonal().real
        return {
            "dim": self.basis.dim,
            "n_max": self.basis.n_max,
            "modes": self.lattice.size,
            "nnz": int(self.h.matrix.nnz),
            "min_diag": float(diag.min()),
            "max_diag": float(diag.max()),
            "lambda": self.lam,
            "lambda_quant": self.coupling.lambda_quant,
        }


def assemble(
    spec: InteractionSpec,
    pot: Potential,
    lam: float,
    basis: FockBasis,
    lattice: MomentumLattice,
    override_stability: bool = False,
) -> HamiltonianBundle:
    """Build H = H0 + HI + lam Q and verify Hermiticity structurally.

    Refuses couplings at or above the stability threshold unless the override
    flag is set (exploration mode); the error carries the threshold.
    """
    coupling = lambda_quant(pot, lattice)
    if not override_stability and not abs(lam) < coupling.lambda_quant:
        raise StabilityError(lam, coupling.lambda_quant)
    h0 = free_hamiltonian(basis)
    hi_mat = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for kern in interaction_kernels(spec, lattice):
        hi_mat = hi_mat + wick_operator(basis, kern).matrix
    hi = FockOperator(basis=basis, matrix=hi_mat.tocsr(), hermitian=True)
    q_d, q_c, q_a = charge_operator(pot, basis, lattice)
    h_mat = (h0.matrix + hi.matrix + lam * (q_d.matrix + q_c.matrix + q_a.matrix)).tocsr()
    h = FockOperator(basis=basis, matrix=h_mat, hermitian=True)
    return HamiltonianBundle(
        basis=basis,
        lattice=lattice,
        spec=spec,
        pot=pot,
        lam=float(lam),
        h0=h0,
        hi=hi,
        q_dgamma=q_d,
        q_pair_create=q_c,
        q_pair_annih=q_a,
        h=h,
        coupling=coupling,
    )


def compress(pair: NestedPair, fine_op: FockOperator, coarse_basis: FockBasis) -> FockOperator:
    """Compress a fine-lattice Fock operator onto the coarse basis.

    Uses the occupation-transport isometry (coarse modes keep their momentum
    value on the fine lattice): compress = embed^H . fine_op . embed.  The
    free Hamiltonian compresses exactly; quadrature-weighted kernels compress
    to the coarse assembly up to the documented 1/v re-weighting.
    """
    emb = fock_embedding(pair, coarse_basis, fine_op.basis)
    mat = (emb.T.conj() @ fine_op.matrix @ emb).tocsr()
    return FockOperator(basis=coarse_basis, matrix=mat, hermitian=fine_op.hermitian)


def nested_bundles(
    spec: InteractionSpec,
    pot: Potential,
    lam: float,
    lattices: Sequence[MomentumLattice],
    n_max: int,
    override_stability: bool = False,
    cap: int = 200_000,
) -> tuple[list[HamiltonianBundle], list[NestedPair]]:
    """Assemble one bundle per ladder level plus the adjacent nesting pairs."""
    from .fock import enumerate_basis

    bundles = []
    pairs = []
    for i, lat in enumerate(lattices):
        basis = enumerate_basis(lat, n_max, cap=cap)
        bundles.append(assemble(spec, pot, lam, basis, lat, override_stability))
        if i > 0:
            pairs.append(build_nested(lattices[i - 1], lat))
    return bundles, pairs
