"""Numbered acceptance criteria, each timed against its runtime budget.

A one-line PASS/FAIL verdict per criterion is printed in the terminal
summary of the pytest run.
"""

import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from qdiscord.channels import MarkovDephasing, RTNDephasing
from qdiscord.correlations import (BellDiagonalState, bell_diagonal_correlations,
                                   discord_bruteforce, random_bell_diagonal,
                                   relative_entropy_discord)
from qdiscord.dephasing import (DephasingProfile, OhmicSpectrum, PulseSequence,
                                controlled_gamma, controlled_gamma_frequency, has_negative_rate)
from qdiscord.phenomena import (asymptotic_boundary, detect_transitions,
                                scan_time_invariant_region, simulate_trajectory)

from conftest import ACCEPTANCE_RESULTS

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(number, title, budget):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_RESULTS.append(f"criterion {number:>2} FAIL {elapsed:8.3f}s  {title}: "
                                  f"{type(exc).__name__}")
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget
    ACCEPTANCE_RESULTS.append(f"criterion {number:>2} {'PASS' if ok else 'FAIL'} "
                              f"{elapsed:8.3f}s  {title} (budget {budget:g}s)")
    assert ok, f"runtime {elapsed:.2f}s exceeds budget {budget}s"


def test_criterion_01_sudden_change_markov():
    with criterion(1, "sudden change and Q > C window under Markovian dephasing", 1.0):
        ch = MarkovDephasing()
        p_grid = np.linspace(0, 0.99, 2000)
        traj = simulate_trajectory(BellDiagonalState(0.06, 0.42, 0.30), ch, "both",
                                   [ch.time_for_p(p) for p in p_grid])
        report = detect_transitions(traj)
        assert len(report.sudden_changes) == 1
        assert abs(ch.p(report.sudden_changes[0]) - 0.1548) <= 0.005
        p = np.array([ch.p(t) for t in traj.times])
        above = np.nonzero(traj.discord > traj.classical)[0]
        assert np.all(np.diff(above) == 1), "Q > C must hold on a single interval"
        first, last = above[0], above[-1]
        assert p[first] <= 0.10 and p[last] >= 0.19
        # the true endpoints lie between the last excluded and first included samples
        assert p[first - 1] >= 0.08 and p[last + 1] <= 0.21


def test_criterion_02_frozen_discord_markov():
    with criterion(2, "frozen discord and transition time under Markovian dephasing", 1.0):
        traj = simulate_trajectory(BellDiagonalState(1, -0.6, 0.6), MarkovDephasing(1.0), "both",
                                   np.linspace(0, 2, 2000))
        report = detect_transitions(traj)
        t_tilde = report.transition_time
        assert abs(t_tilde - 0.2554) <= 1e-4
        before = traj.times < t_tilde
        assert np.all(np.abs(traj.discord[before] - 0.2781) <= 1e-4)
        after = traj.times > t_tilde
        c_after = traj.classical[after]
        assert np.max(np.abs(c_after - c_after[0])) <= 1e-8


def test_criterion_03_bruteforce_oracle():
    with criterion(3, "brute-force discord equals the closed form on 200 states", 60.0):
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(200):
            state = random_bell_diagonal(rng)
            q = bell_diagonal_correlations(state).discord
            worst = max(worst, abs(discord_bruteforce(state.to_matrix()).discord - q))
        assert worst <= 1e-6


def test_criterion_04_relative_entropy_identity():
    with criterion(4, "relative entropy to the closest classical state equals Q", 10.0):
        rng = np.random.default_rng(4)
        for _ in range(100):
            state = random_bell_diagonal(rng)
            assert abs(relative_entropy_discord(state)
                       - bell_diagonal_correlations(state).discord) <= 1e-8


def test_criterion_05_telegraph_noise_transitions():
    with criterion(5, "multiple sudden transitions under telegraph noise", 5.0):
        ch = RTNDephasing(1.0, 5.0)
        grid = np.linspace(0, ch.time_for_nu(3.0), 2000)
        frozen = detect_transitions(simulate_trajectory(BellDiagonalState(1, -0.6, 0.6), ch,
                                                        "both", grid))
        assert len(frozen.sudden_changes) >= 2
        reentries = [i for i in frozen.frozen_intervals if i.start > 0]
        assert reentries, "discord must freeze again after re-entry"
        for interval in reentries:
            assert interval.start in frozen.sudden_changes
            assert interval.end in frozen.sudden_changes
        plain = detect_transitions(simulate_trajectory(BellDiagonalState(0.35, -0.3, 0.1), ch,
                                                       "both", grid))
        assert plain.sudden_changes and not plain.frozen_intervals


def test_criterion_06_non_markovian_thresholds():
    with criterion(6, "negative dephasing rate iff s > 2 (T = 0) and s > 3 (high T)", 5.0):
        for s in (1.5, 2.0, 2.01, 2.5, 3.0, 3.01, 3.5):
            assert has_negative_rate(OhmicSpectrum(s)) == (s > 2)
            assert has_negative_rate(OhmicSpectrum(s, temperature="high")) == (s > 3)


def test_criterion_07_time_invariant_boundary():
    with criterion(7, "time-invariant region boundary at zero temperature", 120.0):
        dc = 0.005
        c_grid = np.round(np.arange(1, 200) * dc, 3)
        scan = scan_time_invariant_region([1.0, 2.2, 2.5, 2.8], c_grid)
        assert not scan.invariant_mask()[0].any()
        for i, s in enumerate(scan.s_grid[1:], start=1):
            c_star = asymptotic_boundary(s)
            row = scan.invariant_mask()[i]
            mismatched = c_grid[row != (c_grid < c_star)]
            assert np.all(np.abs(mismatched - c_star) <= dc)
            assert abs(scan.boundary(i) - c_star) <= dc


def test_criterion_08_decoupling_recursion():
    with criterion(8, "pulsed decoherence recursion matches filter-function quadrature", 60.0):
        for s in (0.5, 1.0, 2.5):
            spec = OhmicSpectrum(s)
            for interval in (0.3, 3.0):
                seq = PulseSequence.periodic(interval, 25.0)
                for n in (1, 2, 5):
                    for frac in (0.25, 0.5, 0.9):
                        t = (n + frac) * interval
                        direct = controlled_gamma_frequency(t, spec, seq)
                        assert abs(controlled_gamma(t, spec, seq) - direct) <= 1e-6 * abs(direct)
                profile = DephasingProfile(spec, seq)
                for n, tn in enumerate(seq.instants, start=1):
                    assert abs(profile.branch_rate(tn, n) + profile.branch_rate(tn, n - 1)) \
                        <= 1e-10


def test_criterion_09_pulsed_regions():
    with criterion(9, "pulsed time-invariant regions for short and long intervals", 300.0):
        s_grid = np.round(np.arange(1, 51) * 0.1, 2)
        c_grid = np.round(np.arange(1, 20) * 0.05, 2)
        i, j = int(np.argmin(np.abs(s_grid - 0.5))), int(np.argmin(np.abs(c_grid - 0.8)))
        for side in ("both", "B"):
            short = scan_time_invariant_region(s_grid, c_grid,
                                               pulses=PulseSequence.periodic(0.3, 25.0),
                                               side=side, workers=4)
            assert short.flags[i, j] == "invariant"
            long = scan_time_invariant_region(s_grid, c_grid,
                                              pulses=PulseSequence.periodic(3.0, 25.0),
                                              side=side, workers=4)
            assert not long.invariant_mask().any()


PROPERTY_SELECTION = " or ".join([
    "test_unitary_invariance", "test_no_signalling", "test_nonnegative_on_random_pairs",
    "test_linear_and_trace_preserving", "test_trace_and_positivity", "test_bell_form_preserved",
    "test_decomposition", "test_semigroup", "test_sign_flip_and_continuity",
    "test_relative_entropy_identity", "test_continuity_at_critical_damping",
])


def test_criterion_10_property_suites():
    with criterion(10, "property suites pass with zero failures", 300.0):
        tests = Path(__file__).parent
        files = [str(tests / f"test_{m}.py")
                 for m in ("qops", "correlations", "channels", "dephasing", "phenomena")]
        proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                               "-k", PROPERTY_SELECTION, *files],
                              capture_output=True, text=True, cwd=tests.parent)
        assert proc.returncode == 0, proc.stdout[-2000:]
        summary = proc.stdout.strip().splitlines()[-1]
        assert "passed" in summary and "failed" not in summary
