import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from steerdual.errors import DomainError, InvalidInputError, UnsupportedError
from steerdual.finite import DiscretePovm
from steerdual.jointmeas import (
    BinaryQubitPovm,
    JointKernel,
    QubitKernelPovm,
    busch_compatible,
    coarse_grain,
    delta_criterion,
    gaussian_moment,
    joint_observable,
)
from steerdual.noon import IntervalPartition, damped_quadrature, truncated_quadrature


@given(st.integers(0, 8), st.floats(-4, 4), st.floats(0, 4))
@settings(max_examples=60, deadline=None)
def test_gaussian_moments_match_quad(k, a, width):
    b = a + width
    ref, _ = quad(lambda q: q**k * math.exp(-q * q), a, b, epsabs=1e-13)
    assert gaussian_moment(k, a, b) == pytest.approx(ref, abs=1e-11)


@pytest.mark.parametrize("k", range(6))
def test_infinite_moments(k):
    ref = 0.0 if k % 2 else math.gamma((k + 1) / 2)
    assert gaussian_moment(k, -np.inf, np.inf) == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_coarse_grain_matches_quad(n):
    povm = damped_quadrature(0.7, n, 0.8)
    part = IntervalPartition(1.4, 6)
    eff = coarse_grain(povm, part).effects
    for (lo, hi), e in zip(part.intervals(), eff):
        for i in range(2):
            for j in range(2):
                re, _ = quad(lambda q: povm.density(q)[i, j].real, lo, hi, epsabs=1e-13)
                im, _ = quad(lambda q: povm.density(q)[i, j].imag, lo, hi, epsabs=1e-13)
                assert e[i, j] == pytest.approx(re + 1j * im, abs=1e-10)
    assert np.allclose(sum(eff), np.eye(2), atol=1e-12)


def test_truncated_quadrature_is_rank_one():
    p = truncated_quadrature(0.3, 2)
    dets = np.linalg.det(p.matrix(np.linspace(-5, 5, 101)))
    assert np.max(np.abs(dets)) < 1e-10


def test_damped_determinant():
    r = 0.6
    p = damped_quadrature(1.1, 1, r)
    q = np.linspace(-3, 3, 31)
    assert np.allclose(np.linalg.det(p.density(q)).real, (1 - r * r) * np.exp(-2 * q * q) / np.pi)


def test_kernel_validation():
    with pytest.raises(InvalidInputError):
        QubitKernelPovm(np.zeros((2, 2, 1)))
    bad = np.zeros((2, 2, 2), dtype=complex)
    bad[0, 0, 0] = bad[1, 1, 0] = 1
    bad[0, 1, 1] = 1
    with pytest.raises(InvalidInputError):
        QubitKernelPovm(bad)


def test_partition_input_forms():
    p = damped_quadrature(0.0, 1, 0.5)
    a = coarse_grain(p, [-np.inf, 0.0, np.inf])
    b = coarse_grain(p, [(-np.inf, 0.0), (0.0, np.inf)])
    c = coarse_grain(p, IntervalPartition(1.0, 2))
    assert np.allclose(a.effects, b.effects) and np.allclose(b.effects, c.effects)
    with pytest.raises(InvalidInputError):
        coarse_grain(p, [(-np.inf, 0.0), (0.5, np.inf)])
    with pytest.raises(InvalidInputError):
        coarse_grain(p, [-1.0, 0.0, np.inf])


def test_delta_criterion_threshold():
    # Delta = 2(1 - r^2) - 1 for two kernels of N = 1: JM iff r^2 <= 1/2
    for r2 in (0.3, 0.49, 0.51, 0.9):
        pair = [damped_quadrature(t, 1, math.sqrt(r2)) for t in (0.0, math.pi / 2)]
        assert delta_criterion(pair) == pytest.approx(1 - 2 * r2, abs=1e-9)


def test_joint_observable_marginals_match_quad():
    r = 0.7
    pair = [damped_quadrature(t, 1, r) for t in (0.0, math.pi / 2)]
    joint = joint_observable(pair)
    for q in (-1.3, 0.0, 0.4, 2.2):
        for i in range(2):
            other = 1 - i
            ref = np.zeros((2, 2), dtype=complex)
            for a in range(2):
                for b in range(2):
                    def f(t, a=a, b=b):
                        args = [None, None]
                        args[i], args[other] = q, t
                        return joint.density(*args)[a, b]

                    re, _ = quad(lambda t: f(t).real, -np.inf, np.inf, epsabs=1e-13)
                    im, _ = quad(lambda t: f(t).imag, -np.inf, np.inf, epsabs=1e-13)
                    ref[a, b] = re + 1j * im
            assert np.allclose(ref, pair[i].density(q), atol=1e-10)
            assert np.allclose(joint.marginal(i, q), pair[i].density(q), atol=1e-12)


def test_joint_density_is_psd():
    pair = [damped_quadrature(t, 1, 0.7) for t in (0.0, math.pi / 2)]
    j = JointKernel(pair)
    b1, b2 = np.meshgrid(np.linspace(-3, 3, 25), np.linspace(-3, 3, 25))
    assert np.linalg.eigvalsh(j.density(b1, b2)).min() > -1e-14


def test_joint_observable_refuses_incompatible():
    pair = [damped_quadrature(t, 1, 0.9) for t in (0.0, math.pi / 2)]
    with pytest.raises(DomainError, match="grid point"):
        joint_observable(pair)


def test_single_povm_is_its_own_joint():
    p = damped_quadrature(0.0, 1, 0.9)
    assert joint_observable([p]) is p


def test_discrete_delta_criterion():
    e = np.diag([0.6, 0.4])
    # det ratios 0.4/0.6 and 0.6/0.4; a single POVM gives its smallest ratio
    assert delta_criterion([DiscretePovm((e, np.eye(2) - e))]) == pytest.approx(2 / 3)


def test_busch():
    def pov(v):
        return BinaryQubitPovm(0.0, v)

    s = 1 / math.sqrt(2)
    assert busch_compatible(pov((s, 0, 0)), pov((0, 0, s)))
    assert not busch_compatible(pov((s + 1e-3, 0, 0)), pov((0, 0, s + 1e-3)))
    assert busch_compatible(pov((1, 0, 0)), pov((1, 0, 0)))
    with pytest.raises(UnsupportedError):
        busch_compatible(BinaryQubitPovm(0.1, (0.5, 0, 0)), pov((0, 0, 0.5)))
    with pytest.raises(InvalidInputError):
        BinaryQubitPovm(0.0, (1.1, 0, 0))


@given(st.floats(-0.4, 0.4), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
@settings(max_examples=50, deadline=None)
def test_binary_round_trip(g, x, y, z):
    n = np.array([x, y, z])
    if np.linalg.norm(n) > 1 - abs(g):
        n = n * (1 - abs(g)) / (np.linalg.norm(n) + 1e-9)
    p = BinaryQubitPovm(g, n)
    q = BinaryQubitPovm.from_effect(p.effects()[0])
    assert q.bias == pytest.approx(g, abs=1e-12)
    assert np.allclose(q.bloch, p.bloch, atol=1e-12)
