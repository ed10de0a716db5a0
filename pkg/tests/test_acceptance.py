"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Tolerances are the stated ones.  Criteria that the implementation does not
meet fail here on purpose.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from steerdual.dynamics import LorentzianBath, damping_factor, steerable_region
from steerdual.finite import (
    BipartiteState,
    MeasurementAssemblage,
    assemblage_from_state,
    channel_to_state,
    projective_measurement,
    state_to_channel,
    steering_equivalent_observables,
)
from steerdual.gaussian import (
    gaussian_channel_to_state,
    gaussian_lhs,
    gaussian_state_to_channel,
    random_bipartite,
    steering_verdicts,
    steering_witness,
    uncertainty_gap,
)
from steerdual.jointmeas import joint_observable
from steerdual.noon import (
    critical_eta,
    damped_quadrature,
    eta_lower_bound,
    eta_upper_bound_binarized,
    noon_assemblage,
    table1_pipeline,
)
from steerdual.robustness import consistent_steering_robustness, incompatibility_robustness

from conftest import random_density, random_unitary

TABLE1_TARGET = {4: 0.742, 6: 0.698, 8: 0.684, 10: 0.678, 12: 0.675, 14: 0.674, 16: 0.673, 18: 0.672, 20: 0.671}
HERE = Path(__file__).parent


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def test_criterion_1_table1(report):
    t0 = time.perf_counter()
    rows = table1_pipeline(list(TABLE1_TARGET), theta=math.pi / 2, n=1, c=1.4, tol=1e-3)
    elapsed = time.perf_counter() - t0
    errs = {r.n_int: r.eta_c - TABLE1_TARGET[r.n_int] for r in rows}
    bad = {k: round(v, 4) for k, v in errs.items() if not abs(v) <= 0.01}
    detail = ", ".join(f"{r.n_int}:{r.eta_c:.4f}" for r in rows) + f"; off by >0.01 at {bad}; {elapsed:.1f}s"
    report(1, not bad and elapsed <= 1800, detail)


def test_criterion_2_lower_bound(report):
    exact = eta_lower_bound(2) == 2 / 3
    ir = incompatibility_robustness(noon_assemblage(0.66, math.pi / 2, 1, 1.4, 20))
    r = math.sqrt(0.49)
    pair = [damped_quadrature(t, 1, r) for t in (0.0, math.pi / 2)]
    joint = joint_observable(pair)
    q = np.linspace(-5, 5, 201)
    resid = max(np.max(np.abs(joint.marginal(i, q) - pair[i].density(q))) for i in range(2))
    report(2, exact and ir <= 1e-6 and resid < 1e-8, f"2/3 exact={exact}, IR(0.66)={ir:.2e}, marginal residual={resid:.2e}")


def test_criterion_3_binarized_bound(report):
    ref = 2 * math.pi / (4 + math.pi)
    closed = eta_upper_bound_binarized(math.pi / 2)
    sdp, _ = critical_eta(math.pi / 2, 1, 1.4, 2, tol=1e-4)
    ok = abs(closed - ref) <= 1e-12 and abs(sdp - ref) <= 1e-3
    report(3, ok, f"closed form {closed:.15f} vs {ref:.15f}; SDP {sdp:.5f}")


def test_criterion_4_noon_six(report):
    eta, _ = critical_eta(math.pi / 2, 6, 1.4, 16)
    alt, _ = critical_eta(math.pi / 12, 6, 1.4, 16)
    report(4, abs(eta - 0.89) <= 0.02, f"eta_c(N=6, theta=pi/2, N_int=16) = {eta:.4f} (theta=pi/12 gives {alt:.4f})")


def test_criterion_5_duality_round_trips(report):
    rng = np.random.default_rng(5)
    worst_f = 0.0
    for da, db in [(2, 2), (3, 3), (2, 4)]:
        for _ in range(10):
            rho = BipartiteState(random_density(da * db, rng), da, db)
            back = channel_to_state(state_to_channel(rho), rho.marginal_b())
            worst_f = max(worst_f, np.max(np.abs(back.matrix - rho.matrix)))
    worst_g = 0.0
    for _ in range(50):
        rho = random_bipartite(rng)
        back = gaussian_channel_to_state(gaussian_state_to_channel(rho), rho.marginal_b())
        worst_g = max(worst_g, np.max(np.abs(back.V - rho.V)), np.max(np.abs(back.r - rho.r)))
    report(5, worst_f < 1e-8 and worst_g < 1e-8, f"finite residual {worst_f:.2e}, Gaussian residual {worst_g:.2e}")


def test_criterion_6_ir_equals_csr(report):
    rng = np.random.default_rng(6)
    worst = 0.0
    for k in range(24):
        rho = BipartiteState(random_density(4, rng, rank=1 + k % 4), 2, 2)
        meas = MeasurementAssemblage(tuple(projective_measurement(random_unitary(2, rng)) for _ in range(2 + k % 2)))
        asm = assemblage_from_state(rho, meas)
        worst = max(worst, abs(incompatibility_robustness(steering_equivalent_observables(asm)) - consistent_steering_robustness(asm)))
    report(6, worst < 1e-4, f"max |IR - CSR| over 24 instances = {worst:.2e}")


def test_criterion_7_gaussian_consistency(report):
    rng = np.random.default_rng(7)
    mismatch, n_steer, min_margin, min_gap = 0, 0, np.inf, np.inf
    for _ in range(150):
        rho = random_bipartite(rng)
        v = steering_verdicts(rho)
        mismatch += v.steerable != v.channel_steerable
        if v.steerable:
            n_steer += 1
            min_margin = min(min_margin, steering_witness(rho).margin)
        else:
            min_gap = min(min_gap, uncertainty_gap(gaussian_lhs(rho).V_lambda))
    ok = mismatch == 0 and min_margin > 0 and min_gap >= -1e-9 and 0 < n_steer < 150
    report(7, ok, f"150 instances, {n_steer} steerable, mismatches {mismatch}, min witness margin {min_margin:.2e}, min LHS gap {min_gap:.2e}")


def test_criterion_8_dynamics(report):
    t = np.linspace(0, 20, 20001)
    reg = steerable_region([0.1, 10.0], t, 1 / math.sqrt(2))
    weak, strong = reg.windows[0], reg.windows[1]
    tt = np.linspace(0, 20, 401)
    jump = max(
        np.max(np.abs(damping_factor(LorentzianBath(0.5 + d), tt) - damping_factor(LorentzianBath(0.5), tt)))
        for d in (1e-13, -1e-13)
    )
    ok = strong >= 2 and weak <= 1 and jump < 1e-9
    report(8, ok, f"windows at u=10: {strong}, at u=0.1: {weak}, continuity across u=1/2: {jump:.1e}")


def test_criterion_9_property_suites(report):
    files = sorted(str(p) for p in HERE.glob("test_*.py") if p.name != "test_acceptance.py")
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *files], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(9, proc.returncode == 0 and elapsed < 300, f"{tail} ({elapsed:.1f}s)")
