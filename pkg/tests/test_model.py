import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coolchain.model import (
    CycleParams,
    LayerAngles,
    Layout,
    PauliTerm,
    SizeExceededError,
    TfimParams,
    dense_hamiltonian,
    ground_energy,
    ground_energy_dense,
    ground_energy_free_fermion,
    ground_state_zz,
    hamiltonian_terms,
    residual_density,
)


class TestTfimParams:
    def test_accepts_even_sizes(self):
        params = TfimParams(4, 0.4, 0.6)
        assert params.n_sys == 4

    @pytest.mark.parametrize("n", [0, 1, 3, 5, -2])
    def test_rejects_odd_or_small_sizes(self, n):
        with pytest.raises(ValueError):
            TfimParams(n, 0.4, 0.6)

    def test_rejects_negative_coupling(self):
        with pytest.raises(ValueError):
            TfimParams(4, -0.1, 0.6)


class TestLayout:
    def test_bath_couples_to_even_sites(self):
        layout = Layout.for_system(8)
        assert layout.n_bath == 4
        assert layout.bath_couplings == ((1, 2), (2, 4), (3, 6), (4, 8))
        assert layout.n_total == 12

    def test_rejects_wrong_bath_count(self):
        with pytest.raises(ValueError):
            Layout(n_sys=4, n_bath=3, bath_couplings=((1, 2), (2, 4), (3, 4)))

    def test_rejects_mismatched_coupling(self):
        with pytest.raises(ValueError):
            Layout(n_sys=4, n_bath=2, bath_couplings=((1, 2), (2, 3)))


class TestLayerAngles:
    def test_holds_four_angles(self):
        layer = LayerAngles(0.1, -0.2, 0.3, 0.4)
        assert layer.alpha == 0.1

    def test_allows_rounded_pi(self):
        # Published tables quote pi rounded to 3.141593, slightly above pi.
        LayerAngles(0.0, 0.0, 3.141593, 0.0)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            LayerAngles(4.0, 0.0, 0.0, 0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            LayerAngles(float("nan"), 0.0, 0.0, 0.0)


class TestCycleParams:
    def test_vector_round_trip(self):
        params = CycleParams.from_rows([(0.1, 0.2, 0.3, 0.4), (0.5, 0.6, 0.7, 0.8)])
        assert params.p == 2
        vec = params.to_vector()
        assert vec.tolist() == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
        assert CycleParams.from_vector(vec) == params

    def test_rejects_bad_vector_length(self):
        with pytest.raises(ValueError):
            CycleParams.from_vector([0.1, 0.2, 0.3])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            CycleParams(())


class TestHamiltonianTerms:
    def test_term_count(self):
        terms = hamiltonian_terms(TfimParams(6, 0.4, 0.6))
        assert len(terms) == 11  # five bonds plus six fields
        zz = [t for t in terms if len(t.factors) == 2]
        assert all(t.coefficient == -0.4 for t in zz)
        x = [t for t in terms if len(t.factors) == 1]
        assert all(t.coefficient == -0.6 for t in x)

    def test_pauli_term_validation(self):
        with pytest.raises(ValueError):
            PauliTerm(1.0, ((1, "Z"), (1, "Z")))
        with pytest.raises(ValueError):
            PauliTerm(1.0, ((1, "Q"),))


class TestGroundEnergy:
    # Published figure-caption values, printed to 4 decimals.  The last entry
    # is truncated rather than rounded in print (true value -18.00148), so the
    # comparison allows a full last-digit of slack.
    CAPTION_VALUES = [
        (4, 0.40, 0.60, -2.6016),
        (6, 0.40, 0.60, -3.9390),
        (6, 0.45, 0.55, -3.7720),
        (28, 0.40, 0.60, -18.6520),
        (28, 0.45, 0.55, -18.0014),
    ]

    @pytest.mark.parametrize("n,j,h,expected", CAPTION_VALUES)
    def test_free_fermion_reproduces_caption_values(self, n, j, h, expected):
        assert ground_energy_free_fermion(TfimParams(n, j, h)) == pytest.approx(
            expected, abs=1e-4
        )

    @pytest.mark.parametrize(
        "n,j,h,expected", [row for row in CAPTION_VALUES if row[0] <= 14]
    )
    def test_dense_reproduces_caption_values(self, n, j, h, expected):
        assert ground_energy_dense(TfimParams(n, j, h)) == pytest.approx(
            expected, abs=1e-4
        )

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.sampled_from([2, 4, 6, 8]),
        j=st.floats(0.0, 1.0),
        h=st.floats(0.0, 1.0),
    )
    def test_solvers_agree(self, n, j, h):
        tfim = TfimParams(n, j, h)
        assert ground_energy_dense(tfim) == pytest.approx(
            ground_energy_free_fermion(tfim), abs=1e-10
        )

    def test_dense_size_guard(self):
        with pytest.raises(SizeExceededError):
            ground_energy_dense(TfimParams(16, 0.4, 0.6))

    def test_dispatch_uses_fermion_for_large_chains(self):
        tfim = TfimParams(28, 0.4, 0.6)
        assert ground_energy(tfim) == ground_energy_free_fermion(tfim)

    def test_trivial_decoupled_chain(self):
        # h=1, J=0: N independent spins in a transverse field.
        assert ground_energy(TfimParams(2, 0.0, 1.0)) == pytest.approx(-2.0)

    def test_hamiltonian_is_hermitian(self):
        ham = dense_hamiltonian(TfimParams(4, 0.4, 0.6))
        assert np.allclose(ham, ham.conj().T)


class TestGroundStateCorrelations:
    def test_classical_ferromagnet(self):
        tfim = TfimParams(4, 1.0, 0.0)
        values = ground_state_zz(tfim, [(1, 2), (1, 4), (2, 2)])
        assert values == pytest.approx([1.0, 1.0, 1.0])

    def test_matches_expectation_against_dense_ground_state(self):
        tfim = TfimParams(4, 0.4, 0.6)
        _, vecs = np.linalg.eigh(dense_hamiltonian(tfim))
        psi = vecs[:, 0]
        z = np.array([1.0, -1.0])
        z1 = np.kron(np.kron(z, np.ones(2)), np.ones(4))
        z3 = np.kron(np.kron(np.ones(4), z), np.ones(2))
        expected = float(np.sum(np.abs(psi) ** 2 * z1 * z3))
        assert ground_state_zz(tfim, [(1, 3)])[0] == pytest.approx(expected, abs=1e-12)

    def test_size_guard(self):
        with pytest.raises(SizeExceededError):
            ground_state_zz(TfimParams(28, 0.4, 0.6), [(1, 2)])


class TestResidualDensity:
    def test_zero_at_ground_energy(self):
        tfim = TfimParams(4, 0.4, 0.6)
        assert residual_density(ground_energy(tfim), tfim) == pytest.approx(0.0)

    def test_per_site_normalization(self):
        tfim = TfimParams(4, 0.4, 0.6)
        e0 = ground_energy(tfim)
        assert residual_density(e0 + 0.4, tfim) == pytest.approx(0.1)
