"""Unit tests for the Hilbert-space substrate."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otoc_thermalize.hilbert import (
    ManyBodySetup,
    Projector,
    UnitarySource,
    conjugate,
    derive_rng,
    embed_isometry,
    evolve,
    gue_hamiltonian,
    sample_haar_state,
    sample_haar_unitary,
    tensor_embed,
)

UNITARITY_TOL = 1e-10  # times the dimension


def test_sample_dim_one_is_pure_phase():
    u = sample_haar_unitary(1, seed=0)
    assert u.shape == (1, 1)
    assert abs(abs(u[0, 0]) - 1.0) <= 1e-14


def test_sampler_deterministic_under_seed():
    a = sample_haar_unitary(8, seed=1234)
    b = sample_haar_unitary(8, seed=1234)
    assert np.array_equal(a, b)


def test_sampler_rejects_bad_dim():
    with pytest.raises(ValueError):
        sample_haar_unitary(0)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=24), st.integers(0, 2 ** 31))
def test_sampler_unitary_any_dim(dim, seed):
    u = sample_haar_unitary(dim, seed=seed)
    assert np.linalg.norm(u.conj().T @ u - np.eye(dim)) <= UNITARITY_TOL * dim


def test_derive_rng_streams_are_independent_and_stable():
    a = derive_rng(7, "stream", 0).standard_normal(4)
    b = derive_rng(7, "stream", 1).standard_normal(4)
    a2 = derive_rng(7, "stream", 0).standard_normal(4)
    assert np.array_equal(a, a2)
    assert not np.array_equal(a, b)


def test_haar_state_normalized():
    v = sample_haar_state(16, seed=3)
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-12


def test_gue_is_hermitian_with_semicircle_scale():
    h = gue_hamiltonian(256, seed=11)
    assert np.linalg.norm(h - h.conj().T) == 0.0
    evals = np.linalg.eigvalsh(h)
    # spectrum concentrates in [-2, 2] for this normalization
    assert evals.min() > -2.5 and evals.max() < 2.5
    assert evals.max() > 1.5


class TestProjector:
    def test_validate_passes_for_true_projector(self):
        Projector.coordinate(8, 3).validate()

    def test_validate_rejects_non_idempotent(self):
        p = Projector(0.5 * np.eye(4), rank=2)
        with pytest.raises(ValueError, match="idempotent"):
            p.validate()

    def test_validate_rejects_wrong_rank(self):
        p = Projector(np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex), rank=3)
        with pytest.raises(ValueError, match="rank"):
            p.validate()

    def test_rejects_nonfinite_entries(self):
        with pytest.raises(ValueError, match="finite"):
            Projector(np.array([[np.nan, 0], [0, 1]]), rank=1)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError, match="square"):
            Projector(np.zeros((2, 3)), rank=0)

    def test_from_isometry(self):
        v = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 2)))[0]
        p = Projector.from_isometry(v)
        assert p.rank == 2
        p.validate()


class TestManyBodySetup:
    def test_derived_dimensions(self):
        s = ManyBodySetup(10, 1, 5, np.array([1.0, 0.0]),
                          np.eye(32)[:, 0].astype(float))
        assert (s.dim, s.d_s, s.d_sigma) == (1024, 2, 32)
        assert s.d_eta == s.d_rho == 32
        assert s.d_env == s.d_r == 512

    def test_rejects_bad_nesting(self):
        with pytest.raises(ValueError, match="n_observed"):
            ManyBodySetup(3, 2, 1, np.eye(4)[:, 0], np.array([1.0, 0.0]))

    def test_rejects_unnormalized_state(self):
        with pytest.raises(ValueError, match="unit-norm"):
            ManyBodySetup(2, 1, 1, np.array([1.0, 1.0]), np.array([1.0, 0.0]))

    def test_rejects_duplicate_sites(self):
        with pytest.raises(ValueError, match="duplicates"):
            ManyBodySetup(3, 2, 2, np.eye(4)[:, 0], np.eye(4)[:, 0],
                          observed_sites=(1, 1))

    def test_rejects_out_of_range_sites(self):
        with pytest.raises(ValueError, match="out of range"):
            ManyBodySetup(3, 1, 1, np.array([1.0, 0.0]), np.array([1.0, 0.0]),
                          core_sites=(3,))


def test_embed_full_register_is_rank_one():
    # N = N_S: no environment factor left over.
    chi = np.zeros(4)
    chi[2] = 1.0
    s = ManyBodySetup(2, 2, 2, chi, chi)
    p = tensor_embed(s, "observable")
    assert p.rank == 1
    np.testing.assert_allclose(p.entries, np.outer(chi, chi), atol=1e-14)


def test_embed_entangled_core_is_projector():
    phi = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
    s = ManyBodySetup(3, 1, 2, np.array([1.0, 0.0]), phi)
    p = tensor_embed(s, "core")
    assert p.rank == 2
    p.validate()
    assert abs(np.trace(p.entries).real - 2.0) <= 1e-12


def test_embed_isometry_columns_orthonormal():
    rng = np.random.default_rng(8)
    psi = sample_haar_state(8, rng=rng)
    s = ManyBodySetup(4, 1, 3, np.array([0.0, 1.0]), psi,
                      observed_sites=(2,), core_sites=(2, 0, 3))
    for which in ("observable", "core"):
        v = embed_isometry(s, which)
        n = v.shape[1]
        assert np.linalg.norm(v.conj().T @ v - np.eye(n)) <= 1e-12


def test_embed_rejects_dimension_over_cap():
    s = ManyBodySetup(6, 1, 1, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="cap"):
        tensor_embed(s, "observable", dim_cap=2 ** 5)


def test_embed_rejects_unknown_factor():
    s = ManyBodySetup(2, 1, 1, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="which"):
        tensor_embed(s, "bath")


class TestEvolve:
    def test_identity_at_time_zero(self):
        src = UnitarySource.hamiltonian(gue_hamiltonian(8, seed=0))
        np.testing.assert_allclose(evolve(src, 0.0), np.eye(8), atol=1e-14)

    def test_diagonal_hamiltonian_phase(self):
        src = UnitarySource.hamiltonian(np.diag([0.0, 1.0]))
        u = evolve(src, np.pi)
        np.testing.assert_allclose(u, np.diag([1.0, -1.0]), atol=1e-12)

    def test_group_law_on_random_time_pairs(self):
        src = UnitarySource.hamiltonian(gue_hamiltonian(12, seed=21))
        rng = np.random.default_rng(0)
        for t1, t2 in rng.uniform(-5, 5, size=(10, 2)):
            lhs = evolve(src, t1) @ evolve(src, t2)
            rhs = evolve(src, t1 + t2)
            assert np.linalg.norm(lhs - rhs) <= UNITARITY_TOL * 12

    def test_rejects_non_hermitian_hamiltonian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            UnitarySource.hamiltonian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_ensemble_sources_need_integer_times(self):
        src = UnitarySource.haar_cue(4, seed=0)
        with pytest.raises(ValueError, match="integer"):
            evolve(src, 0.5)
        with pytest.raises(ValueError, match="integer"):
            evolve(src, -1)

    def test_cue_times_give_independent_unitaries(self):
        src = UnitarySource.haar_cue(8, seed=3)
        u1, u2 = evolve(src, 1), evolve(src, 2)
        assert np.linalg.norm(u1 - u2) > 0.1

    def test_circuit_prefix_consistent_after_cache_advance(self):
        src = UnitarySource.circuit(3, seed=5)
        u3 = evolve(src, 3)
        u2_after = evolve(src, 2)  # earlier time than the cached product
        u2_fresh = evolve(UnitarySource.circuit(3, seed=5), 2)
        assert np.array_equal(u2_after, u2_fresh)
        # consecutive times differ by one unitary brickwork layer
        layer = u3 @ u2_after.conj().T
        assert np.linalg.norm(layer.conj().T @ layer - np.eye(8)) <= 1e-10 * 8

    def test_circuit_unitarity(self):
        src = UnitarySource.circuit(5, seed=7)
        u = evolve(src, 4)
        assert np.linalg.norm(u.conj().T @ u - np.eye(32)) <= UNITARITY_TOL * 32


def test_conjugate_preserves_rank_and_trace():
    rng = np.random.default_rng(17)
    u = sample_haar_unitary(8, rng=rng)
    basis = np.linalg.qr(rng.standard_normal((8, 3))
                         + 1j * rng.standard_normal((8, 3)))[0]
    p = Projector.from_isometry(basis)
    q = conjugate(p, u)
    assert q.rank == 3
    assert abs(np.trace(q.entries) - np.trace(p.entries)) <= 1e-12


def test_conjugate_rejects_dimension_mismatch():
    p = Projector.coordinate(4, 2)
    with pytest.raises(ValueError, match="mismatch"):
        conjugate(p, np.eye(8))
