import math

import numpy as np
import pytest
import scipy.sparse as sp

from chargedphi2.errors import ParameterError, ResourceLimitError
from chargedphi2.fock import FockOperator, enumerate_basis
from chargedphi2.hamiltonian import assemble, interaction_spec
from chargedphi2.lattice import build_lattice
from chargedphi2.potentials import gaussian_potential, zero_potential
from chargedphi2.spectral import (
    default_shift,
    ground_state,
    heisenberg_probe,
    higher_order_norm,
    hvz_gap_probe,
    low_lying,
    recurrence_time,
    resolvent_convergence,
)


def shifted(op, c):
    return FockOperator(
        basis=op.basis,
        matrix=(op.matrix + c * sp.identity(op.dim, dtype=complex, format="csr")).tocsr(),
        hermitian=True,
    )


class TestGroundState:
    def test_free_ground_is_vacuum(self, free_ladder_bundles):
        bundle = free_ladder_bundles[0][0]
        e0, psi = ground_state(bundle.h)
        assert e0 == 0.0
        assert abs(psi[0]) == pytest.approx(1.0)

    def test_constant_shift(self, free_ladder_bundles):
        bundle = free_ladder_bundles[0][0]
        e0, psi = ground_state(shifted(bundle.h0, 2.5))
        assert e0 == 2.5
        assert abs(psi[0]) == pytest.approx(1.0)

    def test_residual_contract_on_desk_bundle(self, desk_bundle):
        e0, psi = ground_state(desk_bundle.h)
        res = np.linalg.norm(desk_bundle.h.matrix @ psi - e0 * psi)
        assert res <= 1e-8 * max(1.0, abs(e0))

    def test_variational_monotonicity_in_cap(self, lat3, gauss_v, quartic_spec):
        e0s = []
        for n_max in (2, 3, 4):
            basis = enumerate_basis(lat3, n_max)
            bundle = assemble(quartic_spec, gauss_v, 0.2, basis, lat3)
            e0s.append(ground_state(bundle.h)[0])
        assert e0s[1] <= e0s[0] + 1e-12
        assert e0s[2] <= e0s[1] + 1e-12

    def test_vacuum_overlap_nonzero_weak_coupling(self, desk_bundle):
        _, psi = ground_state(desk_bundle.h)
        assert abs(psi[0]) > 0.9


class TestLowLying:
    def test_sparse_path_matches_dense(self, desk_bundle):
        w_dense, _ = low_lying(desk_bundle.h, 4)
        import chargedphi2.spectral as spectral

        old = spectral.DENSE_EIG_LIMIT
        spectral.DENSE_EIG_LIMIT = 10
        try:
            w_sparse, _ = low_lying(desk_bundle.h, 4)
        finally:
            spectral.DENSE_EIG_LIMIT = old
        assert np.allclose(w_sparse, w_dense, atol=1e-8)

    def test_gap_nonnegative(self, ladder_bundles):
        for bundle in ladder_bundles[0]:
            w, _ = low_lying(bundle.h, 2)
            assert w[1] - w[0] >= 0

    def test_free_gap_is_mass(self, free_ladder_bundles):
        bundle = free_ladder_bundles[0][0]
        w, _ = low_lying(bundle.h, 2)
        assert w[1] - w[0] == bundle.lattice.m


class TestHvzProbe:
    def test_free_onset_exact(self, free_ladder_bundles):
        rep = hvz_gap_probe(free_ladder_bundles[0][0])
        assert rep.e0 == 0.0
        assert rep.hvz_onset_estimate == free_ladder_bundles[0][0].lattice.m

    def test_weak_coupling_onset_near_mass_gap(self, ladder_bundles):
        bundle = ladder_bundles[0][-1]
        rep = hvz_gap_probe(bundle)
        assert rep.hvz_onset_estimate is not None
        assert abs(rep.hvz_onset_estimate - (rep.e0 + bundle.lattice.m)) < 0.05

    def test_uncharged_weak_polynomial_onset(self, lat9):
        # lambda = 0, weak polynomial: onset within the finite-size tolerance
        spec = interaction_spec([(2, 0, 0.2), (0, 2, 0.2)], gaussian_potential(0.2, 1.0))
        bundle = assemble(spec, zero_potential(), 0.0, enumerate_basis(lat9, 2), lat9)
        rep = hvz_gap_probe(bundle)
        tau = 0.05
        assert rep.e0 + lat9.m - tau <= rep.hvz_onset_estimate <= rep.e0 + lat9.m + tau

    def test_mismatch_shrinks_under_refinement(self, ladder_bundles):
        mismatches = []
        for bundle in ladder_bundles[0]:
            rep = hvz_gap_probe(bundle)
            mismatches.append(abs(rep.hvz_onset_estimate - (rep.e0 + bundle.lattice.m)))
        assert mismatches[0] > mismatches[1] > mismatches[2]

    def test_report_depth_truncates_output(self, free_ladder_bundles):
        rep = hvz_gap_probe(free_ladder_bundles[0][0], report_depth=1)
        assert len(rep.eigenvalues) == 2

    def test_as_dict_serializes(self, free_ladder_bundles):
        d = hvz_gap_probe(free_ladder_bundles[0][0]).as_dict()
        assert {"e0", "eigenvalues", "gap", "hvz_onset_estimate"} <= set(d)


class TestResolventConvergence:
    def test_identical_lattices_give_zero(self, lat9, gauss_v, quartic_spec):
        basis = enumerate_basis(lat9, 2)
        bundle = assemble(quartic_spec, gauss_v, 0.1, basis, lat9)
        trace = resolvent_convergence([bundle, bundle])
        assert trace.resolvent_gaps[0] == 0.0

    def test_free_case_exact_zero(self, free_ladder_bundles):
        trace = resolvent_convergence(free_ladder_bundles[0])
        assert trace.resolvent_gaps == (0.0, 0.0)

    def test_interacting_gaps_strictly_decrease(self, ladder_bundles):
        trace = resolvent_convergence(ladder_bundles[0])
        assert trace.resolvent_gaps[0] > trace.resolvent_gaps[1] > 0

    def test_shift_policy(self, ladder_bundles):
        bundle = ladder_bundles[0][0]
        beta = default_shift(bundle)
        e0, _ = ground_state(bundle.h)
        assert beta == pytest.approx(1.0 + abs(e0))

    def test_rejects_shift_below_spectrum(self, ladder_bundles):
        with pytest.raises(ParameterError):
            resolvent_convergence(ladder_bundles[0], beta=-10.0)

    def test_needs_two_levels(self, ladder_bundles):
        with pytest.raises(ParameterError):
            resolvent_convergence(ladder_bundles[0][:1])


class TestHigherOrderNorm:
    def test_uniform_across_levels(self, ladder_bundles):
        beta = default_shift(ladder_bundles[0][0])
        norms = [higher_order_norm(b, beta) for b in ladder_bundles[0]]
        assert max(norms) / min(norms) <= 1.1

    def test_free_value_explicit(self, free_ladder_bundles):
        # for H0 and beta: max over states of n / (sum eps + beta) at m = 1 is
        # n_max / (n_max m + beta)
        bundle = free_ladder_bundles[0][0]
        val = higher_order_norm(bundle, 1.0)
        n_max = bundle.basis.n_max
        assert val == pytest.approx(n_max / (n_max * 1.0 + 1.0), rel=1e-10)


class TestRecurrence:
    def test_min_gap_rule(self):
        assert recurrence_time(np.array([0.0, 0.25, 1.0])) == pytest.approx(2 * np.pi / 0.25)

    def test_degenerate_spectrum(self):
        assert math.isinf(recurrence_time(np.array([1.0, 1.0, 1.0])))


@pytest.fixture(scope="module")
def free_bundle():
    lat = build_lattice(2, 2.0, 1.0)
    spec = interaction_spec([(4, 0, 1.0), (0, 4, 1.0)], zero_potential())
    return assemble(spec, zero_potential(), 0.0, enumerate_basis(lat, 2), lat)


class TestHeisenbergProbe:
    def test_free_case_time_independent(self, free_bundle, rng):
        psi = rng.standard_normal(free_bundle.basis.dim) + 1j * rng.standard_normal(free_bundle.basis.dim)
        psi /= np.linalg.norm(psi)
        modes = free_bundle.lattice.modes
        f = np.exp(-((modes - 1.0) ** 2))
        full = np.concatenate([f, np.zeros_like(f)]).astype(complex)
        res = heisenberg_probe(free_bundle, full, [0.0, 4.0, 8.0, 16.0, 32.0], psi)
        vals = np.array(res.values)
        assert np.max(np.abs(vals - vals[0])) < 1e-10

    def test_time_zero_matches_static_expectation(self, desk_bundle):
        from chargedphi2.fock import field_operator

        modes = desk_bundle.lattice.modes
        f = np.exp(-((modes - 0.5) ** 2))
        full = np.concatenate([f, np.zeros_like(f)]).astype(complex)
        e0, psi = ground_state(desk_bundle.h)
        res = heisenberg_probe(desk_bundle, full, [0.0], psi)
        static = field_operator(desk_bundle.basis, None, full).expectation(psi)
        assert res.values[0] == pytest.approx(static, abs=1e-12)

    def test_requires_normalized_state(self, free_bundle):
        full = np.ones(free_bundle.basis.n_slots, dtype=complex)
        with pytest.raises(ParameterError):
            heisenberg_probe(free_bundle, full, [1.0], 2.0 * free_bundle.basis.vacuum())

    def test_dimension_cap(self, free_bundle, monkeypatch):
        import chargedphi2.spectral as spectral

        monkeypatch.setattr(spectral, "DENSE_EIG_LIMIT", 10)
        full = np.ones(free_bundle.basis.n_slots, dtype=complex)
        with pytest.raises(ResourceLimitError):
            heisenberg_probe(free_bundle, full, [1.0])

    def test_trusted_flags(self, free_bundle):
        full = np.ones(free_bundle.basis.n_slots, dtype=complex)
        res = heisenberg_probe(free_bundle, full, [1.0])
        assert res.trusted() == (res.times[0] < res.recurrence_time,)
