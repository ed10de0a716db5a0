import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steerdual.errors import DomainError, InvalidInputError
from steerdual.finite import (
    BipartiteState,
    DiscretePovm,
    KrausChannel,
    MeasurementAssemblage,
    StateAssemblage,
    assemblage_from_state,
    channel_to_state,
    eigenbasis,
    heisenberg,
    heisenberg_assemblage,
    hidden_states_from_povm,
    projective_measurement,
    purify,
    state_to_channel,
    steering_equivalent_observables,
    transpose_in_basis,
)

from conftest import random_density, random_povm, random_unitary


def random_state(da, db, rng):
    return BipartiteState(random_density(da * db, rng), da, db)


def random_channel(din, dout, rng, n_kraus=3):
    g = [rng.normal(size=(dout, din)) + 1j * rng.normal(size=(dout, din)) for _ in range(n_kraus)]
    s = sum(k.conj().T @ k for k in g)
    w, v = np.linalg.eigh(s)
    isq = (v / np.sqrt(w)) @ v.conj().T
    return KrausChannel(tuple(k @ isq for k in g))


@pytest.mark.parametrize("da,db", [(2, 2), (3, 3), (2, 4), (4, 2)])
def test_state_channel_round_trip(da, db, rng):
    for _ in range(5):
        rho = random_state(da, db, rng)
        ch = state_to_channel(rho)
        back = channel_to_state(ch, rho.marginal_b())
        assert np.max(np.abs(back.matrix - rho.matrix)) < 1e-8


@pytest.mark.parametrize("din,dout", [(2, 2), (3, 2), (2, 3)])
def test_channel_state_round_trip(din, dout, rng):
    sigma = random_density(din, rng)
    ch = random_channel(din, dout, rng)
    rho = channel_to_state(ch, sigma)
    assert np.allclose(rho.marginal_b(), sigma, atol=1e-10)
    ch2 = state_to_channel(rho)
    # channels agree on every input, even if their Kraus sets differ
    for _ in range(3):
        x = random_density(din, rng)
        assert np.allclose(ch.apply(x), ch2.apply(x), atol=1e-8)


def test_purification_marginals(rng):
    sigma = random_density(3, rng)
    psi = purify(sigma)
    assert np.allclose(psi.marginal_a(), sigma, atol=1e-12)
    assert np.allclose(psi.marginal_b(), sigma, atol=1e-12)
    assert np.linalg.matrix_rank(psi.matrix, tol=1e-10) == 1


def test_eigenbasis_phase_convention(rng):
    s, w = eigenbasis(random_density(4, rng))
    assert np.all(np.diff(s) <= 0)
    idx = np.argmax(np.abs(w), axis=0)
    lead = w[idx, np.arange(4)]
    assert np.allclose(lead.imag, 0) and np.all(lead.real > 0)


def test_assemblage_equals_transposed_heisenberg_image(rng):
    # sigma^{-1/2} sigma_{a|x} sigma^{-1/2} is the W-transpose of T*(A_{a|x})
    rho = random_state(2, 3, rng)
    meas = MeasurementAssemblage((random_povm(2, 3, rng), random_povm(2, 2, rng)))
    se = steering_equivalent_observables(assemblage_from_state(rho, meas))
    ch = state_to_channel(rho)
    _, w = eigenbasis(rho.marginal_b())
    for x, s in enumerate(meas.settings):
        for a, e in enumerate(s.effects):
            direct = transpose_in_basis(heisenberg(ch, e), w)
            assert np.allclose(se[x][a], direct, atol=1e-9)


def test_hidden_states_reproduce_marginal(rng):
    sigma = random_density(3, rng)
    povm = DiscretePovm(tuple(random_povm(3, 4, rng)))
    hs = hidden_states_from_povm(povm, sigma)
    assert np.allclose(sum(hs), sigma, atol=1e-12)


def test_state_to_channel_rejects_rank_deficient_marginal():
    psi = np.zeros(4)
    psi[0] = 1
    with pytest.raises(DomainError):
        state_to_channel(BipartiteState(np.outer(psi, psi), 2, 2))


def test_validation():
    with pytest.raises(InvalidInputError):
        DiscretePovm((np.eye(2), np.eye(2)))
    with pytest.raises(InvalidInputError):
        DiscretePovm((np.diag([1.5, 1]), np.diag([-0.5, 0])))
    with pytest.raises(InvalidInputError):
        KrausChannel((np.eye(2) * 0.5,))
    with pytest.raises(InvalidInputError):
        BipartiteState(np.eye(4), 2, 2)
    with pytest.raises(InvalidInputError):
        StateAssemblage(((np.diag([0.5, 0]), np.diag([0, 0.5])), (np.diag([0.5, 0.5]), np.zeros((2, 2)) + 0.1 * np.eye(2))))


@given(st.integers(2, 4), st.integers(2, 4), st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_assemblage_invariants(d, k, seed):
    rng = np.random.default_rng(seed)
    rho = random_state(2, d, rng)
    meas = MeasurementAssemblage((random_povm(2, k, rng), projective_measurement(random_unitary(2, rng))))
    asm = assemblage_from_state(rho, meas)
    # no-signalling with Bob's marginal, members PSD
    assert np.allclose(asm.marginal, rho.marginal_b(), atol=1e-10)
    assert all(np.linalg.eigvalsh(s)[0] > -1e-10 for row in asm.members for s in row)
    se = steering_equivalent_observables(asm)
    for s in se.settings:
        assert np.allclose(sum(s.effects), np.eye(d), atol=1e-12)


def test_heisenberg_assemblage_is_povm(rng):
    ch = random_channel(3, 2, rng)
    meas = MeasurementAssemblage((random_povm(2, 3, rng),))
    out = heisenberg_assemblage(ch, meas)
    assert out.dim == 3
    assert np.allclose(sum(out[0].effects), np.eye(3))
