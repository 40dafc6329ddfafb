"""Truncated two-species bosonic Fock space over lattice modes.

Slots are species-major: slots 0..M-1 are species 1 at ascending momentum,
slots M..2M-1 species 2.  States are occupation tuples with total particle
number at most n_max, ordered by total number and then lexicographically, so
basis enumeration is deterministic across runs.  Creation out of the top
sector maps to zero, keeping every operator an endomorphism of one space;
canonical-commutation checks therefore restrict to the sector N <= n_max - 1.

Matrix elements use a single square root of an integer product, which makes
structural identities (Hermiticity of second quantizations, adjoints of
normal-ordered operators) hold bitwise, not just to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, ParameterError, ResourceLimitError, ShapeError
from .lattice import MomentumLattice, NestedPair

HARD_DIMENSION_CAP = 200_000


def fock_dimension(n_slots: int, n_max: int) -> int:
    """Number of occupation states with total <= n_max over n_slots slots."""
    return sum(math.comb(n_slots + n - 1, n) for n in range(n_max + 1))


@dataclass(frozen=True)
class FockBasis:
    """Deterministic occupation-number basis with a particle cap."""

    lattice: MomentumLattice
    n_max: int
    states: tuple = field(repr=False)
    index: dict = field(repr=False)

    @property
    def n_modes(self) -> int:
        return self.lattice.size

    @property
    def n_slots(self) -> int:
        return 2 * self.lattice.size

    @property
    def dim(self) -> int:
        return len(self.states)

    def slot(self, species: int, mode_idx: int) -> int:
        if species not in (1, 2):
            raise ParameterError(f"species must be 1 or 2, got {species}")
        if not 0 <= mode_idx < self.n_modes:
            raise ParameterError(f"mode index {mode_idx} out of range")
        return (species - 1) * self.n_modes + mode_idx

    def mode_index(self, gamma: float) -> int:
        """Index of the lattice mode with momentum gamma; errors if absent."""
        j = round(gamma * float(self.lattice.v))
        idx = j + self.lattice.n_half
        if not 0 <= idx < self.n_modes or abs(self.lattice.modes[idx] - gamma) > 1e-12:
            raise ParameterError(f"momentum {gamma} is not a lattice mode")
        return idx

    def vacuum(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        out[0] = 1.0
        return out

    def totals(self) -> np.ndarray:
        return np.array([sum(s) for s in self.states])


def enumerate_basis(
    lattice: MomentumLattice, n_max: int, cap: int = HARD_DIMENSION_CAP
) -> FockBasis:
    """Enumerate all occupations with total <= n_max, number-major then lex.

    Raises a resource error naming the cap when the dimension would exceed it.
    """
    if n_max < 0:
        raise ParameterError(f"n_max must be nonnegative, got {n_max}")
    n_slots = 2 * lattice.size
    dim = fock_dimension(n_slots, n_max)
    if dim > cap:
        raise ResourceLimitError(dim, cap)
    states: list[tuple[int, ...]] = []
    for n in range(n_max + 1):
        sector = []
        for combo in combinations_with_replacement(range(n_slots), n):
            occ = [0] * n_slots
            for s in combo:
                occ[s] += 1
            sector.append(tuple(occ))
        sector.sort()
        states.extend(sector)
    index = {s: i for i, s in enumerate(states)}
    return FockBasis(lattice=lattice, n_max=n_max, states=tuple(states), index=index)


@dataclass(frozen=True)
class FockOperator:
    """Sparse operator in a fixed Fock basis with an optional Hermitian claim."""

    basis: FockBasis
    matrix: sp.csr_matrix = field(repr=False)
    hermitian: bool = False

    def __post_init__(self):
        if self.hermitian:
            diff = self.matrix - self.matrix.getH()
            if diff.nnz and np.max(np.abs(diff.data)) > 1e-12:
                raise ContractError("operator claimed Hermitian is not")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.matrix @ psi))


def _coo(basis: FockBasis, rows, cols, vals, hermitian=False) -> FockOperator:
    mat = sp.coo_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)),
        shape=(basis.dim, basis.dim),
    ).tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return FockOperator(basis=basis, matrix=mat, hermitian=hermitian)


def creation(basis: FockBasis, species: int, gamma: float) -> FockOperator:
    """Bosonic creator at the given momentum; kills the top sector."""
    s = basis.slot(species, basis.mode_index(gamma))
    rows, cols, vals = [], [], []
    for c, state in enumerate(basis.states):
        if sum(state) >= basis.n_max:
            continue
        target = list(state)
        target[s] += 1
        rows.append(basis.index[tuple(target)])
        cols.append(c)
        vals.append(math.sqrt(state[s] + 1))
    return _coo(basis, rows, cols, vals)


def annihilation(basis: FockBasis, species: int, gamma: float) -> FockOperator:
    """Bosonic annihilator at the given momentum."""
    s = basis.slot(species, basis.mode_index(gamma))
    rows, cols, vals = [], [], []
    for c, state in enumerate(basis.states):
        if state[s] == 0:
            continue
        target = list(state)
        target[s] -= 1
        rows.append(basis.index[tuple(target)])
        cols.append(c)
        vals.append(math.sqrt(state[s]))
    return _coo(basis, rows, cols, vals)


def number_operator(basis: FockBasis) -> FockOperator:
    """Total number operator, diagonal with the sector totals."""
    totals = basis.totals().astype(complex)
    return FockOperator(basis=basis, matrix=sp.diags(totals).tocsr(), hermitian=True)


def _promote_one_particle(basis: FockBasis, h) -> np.ndarray:
    """Accept a 2M x 2M matrix, an M x M per-species matrix, or a block operator."""
    if hasattr(h, "full"):
        h = h.full()
    h = np.asarray(h, dtype=complex)
    m = basis.n_modes
    if h.shape == (m, m):
        out = np.zeros((2 * m, 2 * m), dtype=complex)
        out[:m, :m] = h
        out[m:, m:] = h
        return out
    if h.shape == (2 * m, 2 * m):
        return h
    raise ShapeError(f"one-particle matrix must be {m} or {2 * m} square, got {h.shape}")


def dgamma(basis: FockBasis, h) -> FockOperator:
    """Second quantization of a Hermitian one-particle operator.

    Vacuum expectation is zero, the one-particle block reproduces h, and the
    output commutes with the number operator sector decomposition.
    """
    hm = _promote_one_particle(basis, h)
    if np.max(np.abs(hm - hm.conj().T)) > 1e-12 * max(1.0, float(np.max(np.abs(hm)))):
        raise ContractError("dgamma requires a Hermitian one-particle matrix")
    n_slots = basis.n_slots
    cols_of = [np.nonzero(hm[:, j])[0] for j in range(n_slots)]
    rows, cols, vals = [], [], []
    index = basis.index
    for c, state in enumerate(basis.states):
        diag = 0.0 + 0.0j
        occupied = [s for s in range(n_slots) if state[s]]
        for j in occupied:
            nj = state[j]
            diag += hm[j, j] * nj
            for i in cols_of[j]:
                if i == j:
                    continue
                target = list(state)
                target[j] -= 1
                target[i] += 1
                amp = math.sqrt((state[i] + 1) * nj)
                rows.append(index[tuple(target)])
                cols.append(c)
                vals.append(hm[i, j] * amp)
        if diag != 0:
            rows.append(c)
            cols.append(c)
            vals.append(diag)
    return _coo(basis, rows, cols, vals, hermitian=True)


@dataclass(frozen=True)
class WickKernel:
    """Coefficient tensor of a normal-ordered monomial with species labels.

    coeffs has one mode axis per leg, creators first; it is kept symmetric
    under permutations of creator legs with equal species and of annihilator
    legs likewise (enforced by `symmetrized`).
    """

    p: int
    q: int
    species: tuple
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.species) != self.p + self.q:
            raise ShapeError("species labels must cover all legs")
        if any(s not in (1, 2) for s in self.species):
            raise ParameterError("species labels must be 1 or 2")
        if np.ndim(self.coeffs) != self.p + self.q:
            raise ShapeError("coefficient tensor rank must equal the leg count")

    def symmetrized(self) -> "WickKernel":
        """Average over leg permutations preserving species, per block."""
        perms_c = _species_perms(self.species[: self.p])
        perms_a = _species_perms(self.species[self.p :])
        if len(perms_c) * len(perms_a) == 1:
            return self
        acc = np.zeros_like(np.asarray(self.coeffs, dtype=complex))
        for pc in perms_c:
            for pa in perms_a:
                axes = list(pc) + [self.p + a for a in pa]
                acc = acc + np.transpose(self.coeffs, axes)
        acc /= len(perms_c) * len(perms_a)
        return WickKernel(p=self.p, q=self.q, species=self.species, coeffs=acc)

    def adjoint(self) -> "WickKernel":
        """Kernel of the adjoint operator: legs swap roles, entries conjugate."""
        axes = list(range(self.p, self.p + self.q)) + list(range(self.p))
        coeffs = np.conj(np.transpose(self.coeffs, axes)) if self.p + self.q else np.conj(self.coeffs)
        species = self.species[self.p :] + self.species[: self.p]
        return WickKernel(p=self.q, q=self.p, species=species, coeffs=coeffs)

    def frobenius(self) -> float:
        return float(np.linalg.norm(np.asarray(self.coeffs).ravel()))


def _species_perms(labels: Sequence[int]) -> list[tuple[int, ...]]:
    """All permutations of positions that fix the species labels pointwise."""
    out = []
    for perm in permutations(range(len(labels))):
        if all(labels[perm[i]] == labels[i] for i in range(len(labels))):
            out.append(perm)
    return out if out else [()]


def _annihilation_tuples(
    state: Sequence[int], offsets: Sequence[int], n_modes: int
) -> Iterator[tuple[tuple[int, ...], list, int]]:
    """Ordered mode tuples removable leg by leg, with the integer amplitude."""

    def rec(depth: int, occ: list, amp: int, modes: list):
        if depth == len(offsets):
            yield tuple(modes), occ, amp
            return
        off = offsets[depth]
        for k in range(n_modes):
            n = occ[off + k]
            if n == 0:
                continue
            occ2 = occ.copy()
            occ2[off + k] = n - 1
            modes.append(k)
            yield from rec(depth + 1, occ2, amp * n, modes)
            modes.pop()

    yield from rec(0, list(state), 1, [])


def wick_operator(basis: FockBasis, kern: WickKernel) -> FockOperator:
    """Assemble a normal-ordered monomial operator from its kernel.

    All creators stand left of all annihilators, so the vacuum expectation
    vanishes whenever p + q > 0.  Tuples that would exceed the particle cap
    are dropped (the truncation convention of `creation`).
    """
    m = basis.n_modes
    coeffs = np.asarray(kern.coeffs, dtype=complex)
    if coeffs.shape != (m,) * (kern.p + kern.q):
        raise ShapeError(
            f"kernel axes {coeffs.shape} do not match the {m}-mode lattice"
        )
    if kern.p == 0 and kern.q == 0:
        scalar = complex(coeffs)
        return FockOperator(
            basis=basis,
            matrix=(scalar * sp.identity(basis.dim, dtype=complex, format="csr")),
            hermitian=abs(scalar.imag) == 0.0,
        )
    cre_offsets = [(s - 1) * m for s in kern.species[: kern.p]]
    ann_offsets = [(s - 1) * m for s in kern.species[kern.p :]]
    index = basis.index
    n_max = basis.n_max
    p = kern.p
    rows, cols, vals = [], [], []

    def create_rec(depth: int, occ: list, amp: int, modes: list, col: int, w_slice):
        if depth == p:
            rows.append(index[tuple(occ)])
            cols.append(col)
            vals.append(complex(w_slice) * math.sqrt(amp))
            return
        off = cre_offsets[depth]
        for k in range(m):
            n = occ[off + k]
            occ[off + k] = n + 1
            modes.append(k)
            create_rec(depth + 1, occ, amp * (n + 1), modes, col, w_slice[k])
            modes.pop()
            occ[off + k] = n

    for c, state in enumerate(basis.states):
        n_state = sum(state)
        if n_state - kern.q + p > n_max or n_state < kern.q:
            continue
        for ann_modes, inter, amp in _annihilation_tuples(state, ann_offsets, m):
            w_slice = coeffs[(Ellipsis,) + ann_modes] if kern.q else coeffs
            create_rec(0, inter, amp, [], c, w_slice)
    return _coo(basis, rows, cols, vals)


def field_operator(basis: FockBasis, species: Optional[int], f: np.ndarray) -> FockOperator:
    """Hermitian Segal field (a*(f) + a(f)) / sqrt(2).

    With species 1 or 2, f is a length-M coefficient vector for that species;
    with species None, f covers all 2M slots.  a(f) is antilinear in f.
    """
    f = np.asarray(f, dtype=complex)
    m = basis.n_modes
    if species is None:
        if f.shape != (2 * m,):
            raise ShapeError(f"expected {2 * m} slot coefficients")
        full = f
    else:
        if f.shape != (m,):
            raise ShapeError(f"expected {m} mode coefficients")
        full = np.zeros(2 * m, dtype=complex)
        off = (species - 1) * m
        full[off : off + m] = f
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    support = np.nonzero(full)[0]
    rows, cols, vals = [], [], []
    index = basis.index
    for c, state in enumerate(basis.states):
        n_state = sum(state)
        for s in support:
            if n_state < basis.n_max:
                target = list(state)
                target[s] += 1
                rows.append(index[tuple(target)])
                cols.append(c)
                vals.append(full[s] * math.sqrt(state[s] + 1) * inv_sqrt2)
            if state[s]:
                target = list(state)
                target[s] -= 1
                rows.append(index[tuple(target)])
                cols.append(c)
                vals.append(np.conj(full[s]) * math.sqrt(state[s]) * inv_sqrt2)
    return _coo(basis, rows, cols, vals, hermitian=True)


def smeared_field_coefficients(g_hat, lattice: MomentumLattice) -> np.ndarray:
    """Mode coefficients of the point field smeared against a real profile g.

    f_gamma = g_hat(gamma) / sqrt(2 pi v eps(gamma)); pairing these with
    `field_operator` realizes the smeared field in the momentum picture.
    """
    eps = lattice.dispersion()
    return np.asarray(g_hat(lattice.modes), dtype=complex) / np.sqrt(
        2 * np.pi * float(lattice.v) * eps
    )


def annihilator_of(basis: FockBasis, f: np.ndarray) -> FockOperator:
    """a(f) = sum_s conj(f_s) a_s over all 2M slots (antilinear in f)."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (basis.n_slots,):
        raise ShapeError(f"expected {basis.n_slots} slot coefficients")
    rows, cols, vals = [], [], []
    index = basis.index
    support = np.nonzero(f)[0]
    for c, state in enumerate(basis.states):
        for s in support:
            if state[s]:
                target = list(state)
                target[s] -= 1
                rows.append(index[tuple(target)])
                cols.append(c)
                vals.append(np.conj(f[s]) * math.sqrt(state[s]))
    return _coo(basis, rows, cols, vals)


def ntau_check(basis: FockBasis, f: np.ndarray, bmult: np.ndarray) -> tuple[float, float]:
    """Evaluate both sides of the annihilator bound against a weighted number.

    Returns (|| a(f) (dGamma(b) + 1)^{-1/2} ||, || b^{-1/2} f ||); the first
    never exceeds the second for positive slot weights b.
    """
    bmult = np.asarray(bmult, dtype=float)
    if bmult.shape != (basis.n_slots,) or np.any(bmult <= 0):
        raise ParameterError("weights must be positive over all slots")
    f = np.asarray(f, dtype=complex)
    a_f = annihilator_of(basis, f)
    diag = np.array([sum(n * b for n, b in zip(s, bmult)) for s in basis.states])
    op = a_f.matrix @ sp.diags(1.0 / np.sqrt(diag + 1.0))
    if basis.dim <= 4000:
        lhs = float(np.linalg.svd(op.toarray(), compute_uv=False)[0]) if op.nnz else 0.0
    else:
        sq = (op.getH() @ op).toarray()
        lhs = math.sqrt(max(float(np.linalg.eigvalsh(sq)[-1]), 0.0))
    rhs = float(np.linalg.norm(f / np.sqrt(bmult)))
    return lhs, rhs


def fock_embedding(pair: NestedPair, coarse: FockBasis, fine: FockBasis) -> sp.csr_matrix:
    """Isometry carrying coarse occupations onto the same-momentum fine modes.

    Shape (fine.dim, coarse.dim); columns are distinct basis vectors, so the
    transpose is a left inverse.  Requires equal particle caps.
    """
    if coarse.n_max != fine.n_max:
        raise ParameterError("nested bases must share the particle cap")
    if coarse.lattice is not pair.coarse or fine.lattice is not pair.fine:
        if (coarse.lattice.params() != pair.coarse.params()) or (
            fine.lattice.params() != pair.fine.params()
        ):
            raise ParameterError("bases do not match the nested lattice pair")
    mc, mf = coarse.n_modes, fine.n_modes
    slot_map = np.concatenate([pair.mode_injection, pair.mode_injection + mf])
    rows = np.empty(coarse.dim, dtype=int)
    for c, state in enumerate(coarse.states):
        target = [0] * fine.n_slots
        for s in range(2 * mc):
            if state[s]:
                target[slot_map[s]] = state[s]
        rows[c] = fine.index[tuple(target)]
    data = np.ones(coarse.dim)
    return sp.coo_matrix(
        (data, (rows, np.arange(coarse.dim))), shape=(fine.dim, coarse.dim)
    ).tocsr()
