import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdiscord import qops
from qdiscord.channels import (MarkovDephasing, NoiseSide, RTNDephasing, SpectralDephasing,
                               apply_channel_matrix, apply_kraus_general, apply_markov,
                               apply_rtn, apply_spectral, decoherence_factor, rtn_lambda)
from qdiscord.correlations import BellDiagonalState
from qdiscord.dephasing import DephasingProfile, OhmicSpectrum, PulseSequence
from qdiscord.errors import InvalidChannelError

from conftest import bell_states, random_density_matrix

CHANNELS = [
    MarkovDephasing(0.7),
    RTNDephasing(1.0, 5.0),
    RTNDephasing(0.02, 5.0),
    SpectralDephasing(DephasingProfile(OhmicSpectrum(2.5))),
    SpectralDephasing(DephasingProfile(OhmicSpectrum(0.5), PulseSequence.periodic(0.3, 5))),
]


class TestNoiseSide:
    @pytest.mark.parametrize("alias,side", [("both", NoiseSide.BOTH), ("two-sided", NoiseSide.BOTH),
                                            ("A", NoiseSide.A), ("one-sided", NoiseSide.B)])
    def test_aliases(self, alias, side):
        assert NoiseSide.parse(alias) is side

    def test_unknown(self):
        with pytest.raises(ValueError):
            NoiseSide.parse("left")


class TestMarkov:
    def test_identity_at_zero(self):
        state = BellDiagonalState(0.06, 0.42, 0.30)
        assert apply_markov(state, MarkovDephasing(), 0.0) == state

    def test_sudden_change_point(self):
        ch = MarkovDephasing()
        out = apply_markov(BellDiagonalState(0.06, 0.42, 0.30), ch, ch.time_for_p(0.15))
        assert out.c2 == pytest.approx(0.42 * 0.85 ** 2, abs=1e-15)
        assert out.c2 == pytest.approx(0.3035, abs=1e-4)

    def test_one_sided_halves_exponent(self):
        out = apply_markov(BellDiagonalState(0.5, 0.2, 0.1), MarkovDephasing(2.0), 0.3, "B")
        assert out.c1 == pytest.approx(0.5 * np.exp(-0.6), abs=1e-15)
        assert out.c3 == 0.1

    def test_long_time_fixed_point(self):
        out = apply_markov(BellDiagonalState(0.5, 0.2, 0.1), MarkovDephasing(), 100.0)
        assert abs(out.c1) < 1e-80 and out.c3 == 0.1

    def test_negative_time(self):
        with pytest.raises(ValueError):
            apply_markov(BellDiagonalState(0, 0, 0), MarkovDephasing(), -1.0)

    def test_invalid_rate(self):
        with pytest.raises(InvalidChannelError):
            MarkovDephasing(0.0)

    def test_p_round_trip(self):
        ch = MarkovDephasing(1.3)
        assert ch.p(ch.time_for_p(0.37)) == pytest.approx(0.37, abs=1e-15)

    @given(st.floats(0, 5), st.floats(0, 5))
    def test_semigroup(self, t1, t2):
        ch, state = MarkovDephasing(), BellDiagonalState(0.3, -0.4, 0.2)
        rho = state.to_matrix()
        twice = apply_channel_matrix(apply_channel_matrix(rho, ch, t1), ch, t2)
        np.testing.assert_allclose(twice, apply_channel_matrix(rho, ch, t1 + t2), atol=1e-12)


class TestRTN:
    def test_identity_at_zero(self):
        assert rtn_lambda(0.0, 1.0, 5.0) == 1.0

    def test_mu(self):
        assert RTNDephasing(1.0, 5.0).mu == pytest.approx(np.sqrt(399))

    def test_oscillation_crosses_zero(self):
        lam = RTNDephasing(1.0, 5.0).lam(np.linspace(0, 3, 3001))
        assert np.count_nonzero(np.diff(np.sign(lam))) >= 2

    def test_first_zero(self):
        ch = RTNDephasing(1.0, 5.0)
        # root of tan(mu nu) = -mu, refined in 30-digit arithmetic
        t0 = 0.811423505900969586
        assert ch.decoherence_factor(t0) == pytest.approx(0.0, abs=1e-14)
        assert ch.decoherence_factor(t0 - 1e-3, signed=True) > 0 > \
            ch.decoherence_factor(t0 + 1e-3, signed=True)

    def test_bounded(self):
        for a, tau in [(1.0, 5.0), (0.01, 5.0), (0.05, 5.0)]:
            assert np.all(np.abs(rtn_lambda(np.linspace(0, 20, 5001), a, tau)) <= 1.0 + 1e-15)

    @pytest.mark.parametrize("nu", [0.1, 1.0, 4.0])
    def test_continuity_at_critical_damping(self, nu):
        tau = 5.0
        critical = np.exp(-nu) * (1 + nu)
        for eps in (1e-9, -1e-9):
            a = (1.0 + eps) / (4 * tau)
            assert rtn_lambda(nu, a, tau) == pytest.approx(critical, abs=1e-8)
        assert rtn_lambda(nu, 1 / (4 * tau), tau) == pytest.approx(critical, abs=1e-14)

    def test_two_sided_squares(self):
        ch = RTNDephasing(1.0, 5.0)
        lam = ch.signed_factor(0.5)
        out = apply_rtn(BellDiagonalState(1, -0.6, 0.6), ch, 0.5)
        assert out.c1 == pytest.approx(lam ** 2, abs=1e-15)

    def test_one_sided_first_power_keeps_sign(self):
        ch = RTNDephasing(1.0, 5.0)
        t = 1.2  # Lambda is negative here
        assert ch.signed_factor(t) < 0
        out = apply_rtn(BellDiagonalState(0.5, -0.3, 0.1), ch, t, "B")
        assert out.c1 == pytest.approx(0.5 * ch.signed_factor(t), abs=1e-15)

    def test_extremum_times_are_turning_points(self):
        ch = RTNDephasing(1.0, 5.0)
        for t in ch.extremum_times(30.0):
            h = 1e-6
            d = (abs(ch.signed_factor(t + h)) - abs(ch.signed_factor(t - h))) / (2 * h)
            assert abs(d) < 1e-4

    def test_invalid(self):
        with pytest.raises(InvalidChannelError):
            RTNDephasing(-1.0, 5.0)


class TestSpectral:
    def test_identity_at_zero(self):
        ch = SpectralDephasing(DephasingProfile(OhmicSpectrum(2.5)))
        assert decoherence_factor(ch, 0.0) == 1.0

    def test_long_time_factor(self):
        ch = SpectralDephasing(DephasingProfile(OhmicSpectrum(2.5)))
        # exp(-Gamma_E(1.5)) = exp(-sqrt(pi)/2)
        assert decoherence_factor(ch, 1e6) == pytest.approx(0.412208114266963708, abs=1e-6)

    def test_apply(self):
        ch = SpectralDephasing(DephasingProfile(OhmicSpectrum(1.0)))
        out = apply_spectral(BellDiagonalState(1, -0.1, 0.1), ch, 3.0)
        # Gamma = ln(10)/2 at t = 3 for s = 1, so exp(-2 Gamma) = 1/10
        assert out.c1 == pytest.approx(0.1, abs=1e-14)


class TestKraus:
    def test_identity_set(self, rng):
        rho = random_density_matrix(rng)
        np.testing.assert_allclose(apply_kraus_general(rho, [np.eye(2)], [np.eye(2)]), rho,
                                   atol=1e-15)

    def test_incomplete_set(self):
        with pytest.raises(InvalidChannelError):
            apply_kraus_general(np.eye(4) / 4, [0.9 * np.eye(2)], [np.eye(2)])

    def test_markov_half_dephasing(self):
        ch = MarkovDephasing()
        out = apply_channel_matrix(qops.bell_projector("phi+"), ch, ch.time_for_p(0.5))
        assert out[0, 3] == pytest.approx(0.5 * 0.5 ** 2, abs=1e-15)

    def test_markov_one_side_coherence(self):
        ch = MarkovDephasing()
        out = apply_channel_matrix(qops.bell_projector("phi+"), ch, ch.time_for_p(0.5), "A")
        assert out[0, 3] == pytest.approx(0.5 * 0.5, abs=1e-15)

    def test_full_dephasing_is_diagonal(self, rng):
        z = np.sqrt(0.5)
        kraus = [z * np.eye(2), z * qops.SZ]
        out = apply_kraus_general(random_density_matrix(rng), kraus, kraus)
        np.testing.assert_allclose(out - np.diag(np.diag(out)), 0, atol=1e-15)

    @settings(max_examples=40)
    @pytest.mark.parametrize("channel", CHANNELS, ids=lambda c: type(c).__name__)
    @given(state=bell_states(), t=st.floats(0, 8), side=st.sampled_from(["both", "A", "B"]))
    def test_bell_form_preserved(self, channel, state, t, side):
        rho = apply_channel_matrix(state.to_matrix(), channel, t, side)
        direct = channel.evolve(state, t, side)
        np.testing.assert_allclose(rho, direct.to_matrix(), atol=1e-12)

    @settings(max_examples=40)
    @pytest.mark.parametrize("channel", CHANNELS, ids=lambda c: type(c).__name__)
    @given(seed=st.integers(0, 2**31), t=st.floats(0, 8))
    def test_trace_and_positivity(self, channel, seed, t):
        rho = apply_channel_matrix(random_density_matrix(np.random.default_rng(seed)), channel, t)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(rho).min() >= -1e-12

    def test_vectorised_matches_scalar(self):
        for channel in CHANNELS:
            times = np.linspace(0, 4, 17)
            state = BellDiagonalState(0.5, -0.3, 0.1)
            block = channel.evolve_coefficients(state.coefficients, times, "B")
            for k, t in enumerate(times):
                np.testing.assert_allclose(block[:, k], channel.evolve(state, t, "B").coefficients,
                                           atol=1e-15)

    def test_rtn_not_divisible(self):
        ch = RTNDephasing(1.0, 5.0)
        rho = BellDiagonalState(1, -0.6, 0.6).to_matrix()
        twice = apply_channel_matrix(apply_channel_matrix(rho, ch, 1.0), ch, 1.0)
        assert np.max(np.abs(twice - apply_channel_matrix(rho, ch, 2.0))) > 1e-3
