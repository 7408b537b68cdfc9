import itertools
import math
from dataclasses import replace

import numpy as np
import pytest

from nlaqkd.gaussian import (
    ChannelParams,
    CovarianceMatrix,
    direct_sum,
    entropy_g,
    symplectic_eigenvalues,
    tmsv_covariance,
    vacuum,
)
from nlaqkd.nla import NlaConfig, equivalent_params, normal_form_abc
from nlaqkd.protocols import (
    DIRECT,
    EIM,
    HETERODYNE,
    HOMODYNE,
    RELAY,
    REVERSE,
    ProtocolSpec,
    build_covariance,
    default_relay_gains,
    eim_covariance,
    holevo_bound,
    key_rate,
    mutual_information,
    relay_covariance,
)
from nlaqkd.gaussian import epr_parameter

from conftest import random_channel, symplectic_spectrum_oracle

V_OP, BETA_OP, EPS_OP = 1.7, 0.948, 0.002  # headline operating point


def eim_spec(det_a, det_b, rec, T, nla=NlaConfig(), v=V_OP, beta=BETA_OP, eps=EPS_OP):
    ch = ChannelParams(T, eps)
    return ProtocolSpec(
        kind=EIM,
        channel_alice=ch,
        channel_bob=ch,
        v_alice=v,
        detection_alice=det_a,
        detection_bob=det_b,
        reconciliation=rec,
        beta=beta,
        nla=nla,
    )


class TestEimCovariance:
    def test_perfect_channels_pass_the_source_through(self):
        cov = eim_covariance(1.7, ChannelParams(1.0, 0.0), ChannelParams(1.0, 0.0))
        assert np.allclose(cov.m, tmsv_covariance(1.7).m, atol=1e-14)

    def test_25km_arithmetic(self):
        T = 10**-0.5
        cov = eim_covariance(1.7, ChannelParams(T, 0.002), ChannelParams(T, 0.002))
        a, b, c = normal_form_abc(cov.m)
        assert a == pytest.approx(T * 0.702 + 1, abs=1e-12)
        assert b == pytest.approx(a)
        assert c == pytest.approx(T * math.sqrt(1.89), abs=1e-12)

    def test_always_physical(self, rng):
        for _ in range(1000):
            v = rng.uniform(1.0, 10.0)
            cov = eim_covariance(v, random_channel(rng, 0.01), random_channel(rng, 0.01))
            assert cov.is_physical()


class TestDefaultRelayGains:
    def test_vanish_at_unit_variance(self):
        g_a, g_b = default_relay_gains(1.0, ChannelParams(0.5, 0.01), ChannelParams(0.9, 0.0))
        assert g_a == 0.0
        assert g_b == 0.0

    def test_symmetric_channels_give_equal_gains(self):
        ch = ChannelParams(0.7, 0.002)
        g_a, g_b = default_relay_gains(1.7, ch, ch)
        assert g_a == pytest.approx(g_b)

    def test_cancellation_form(self):
        # g = sqrt(T (V^2 - 1)) / (sqrt(2) * (T (V - 1 + eps) + 1)); at T = 1,
        # eps = 0.002 this is sqrt(1.89)/(sqrt(2) * 1.702)
        ch = ChannelParams(1.0, 0.002)
        g_a, _ = default_relay_gains(1.7, ch, ch)
        assert g_a == pytest.approx(math.sqrt(1.89) / (math.sqrt(2) * 1.702), abs=1e-12)

    def test_gains_cancel_relay_outcome_noise_when_symmetric(self, rng):
        # with equal arms the default gains equal the exact-cancellation value
        # c/(sqrt(2) w), so the displaced covariance is the outcome-conditioned
        # one and perturbing either gain can only add noise
        for _ in range(20):
            ch = random_channel(rng)
            v = rng.uniform(1.05, 3.0)
            g_a, g_b = default_relay_gains(v, ch, ch)
            base = relay_covariance(v, v, ch, ch, g_a, g_b).m[0, 0]
            for bump in (0.9, 1.1):
                assert relay_covariance(v, v, ch, ch, g_a * bump, g_b).m[0, 0] >= base - 1e-12

    def test_per_side_form_for_unequal_arms(self):
        # each gain is built from its own arm only: sqrt(T_i (V^2 - 1)) over
        # sqrt(2) * (T_i (V - 1 + eps_i) + 1)
        ch1, ch2 = ChannelParams(1.0, 0.002), ChannelParams(0.25, 0.01)
        g_a, g_b = default_relay_gains(1.7, ch1, ch2)
        assert g_a == pytest.approx(math.sqrt(1.89) / (math.sqrt(2) * 1.702), abs=1e-12)
        w2 = 0.25 * (0.7 + 0.01) + 1
        assert g_b == pytest.approx(math.sqrt(0.25 * 1.89) / (math.sqrt(2) * w2), abs=1e-12)


class TestRelayCovariance:
    def test_zero_gain_disables_swapping(self):
        ch = ChannelParams(0.8, 0.01)
        cov = relay_covariance(1.7, 1.7, ch, ch, 0.0, 0.0)
        assert np.allclose(cov.m, 1.7 * np.eye(4), atol=1e-12)

    def test_lossless_swap_is_pure_epr(self):
        # swapping two equal pure pairs with exact cancellation yields the
        # EPR state of squeezing lam^2: a = (V^2+1)/(2V), c = (V^2-1)/(2V)
        ch = ChannelParams(1.0, 0.0)
        g_a, g_b = default_relay_gains(1.7, ch, ch)
        cov = relay_covariance(1.7, 1.7, ch, ch, g_a, g_b)
        a, b, c = normal_form_abc(cov.m)
        assert a == pytest.approx((1.7**2 + 1) / (2 * 1.7), abs=1e-12)
        assert b == pytest.approx(a, abs=1e-12)
        assert c == pytest.approx((1.7**2 - 1) / (2 * 1.7), abs=1e-12)
        assert np.allclose(symplectic_eigenvalues(cov), [1.0, 1.0], atol=1e-12)

    def test_structural_invariant_symmetric(self, rng):
        for _ in range(50):
            ch = random_channel(rng)
            v = rng.uniform(1.05, 3.0)
            g_a, g_b = default_relay_gains(v, ch, ch)
            a, b, c = normal_form_abc(relay_covariance(v, v, ch, ch, g_a, g_b).m)
            assert abs(a - b) < 1e-9
            assert c > 0.0

    def test_output_always_physical(self, rng):
        for _ in range(50):
            cov = relay_covariance(
                rng.uniform(1.0, 3.0),
                rng.uniform(1.0, 3.0),
                random_channel(rng),
                random_channel(rng),
                rng.uniform(0.0, 2.0),
                rng.uniform(0.0, 2.0),
            )
            assert cov.is_physical()

    def test_short_symmetric_link_has_positive_key(self):
        # total 1.6 km, 0.8 km per arm, default gains
        T = 10 ** (-0.2 * 0.8 / 10)
        ch = ChannelParams(T, EPS_OP)
        spec = ProtocolSpec(
            kind=RELAY,
            channel_alice=ch,
            channel_bob=ch,
            v_alice=V_OP,
            detection_alice=HETERODYNE,
            detection_bob=HETERODYNE,
            reconciliation=DIRECT,
            beta=BETA_OP,
        )
        assert key_rate(spec).key_rate_raw > 0.0

    def test_relay_requires_heterodyne(self):
        ch = ChannelParams(0.9, 0.0)
        with pytest.raises(ValueError, match="heterodyne"):
            ProtocolSpec(
                kind=RELAY,
                channel_alice=ch,
                channel_bob=ch,
                detection_alice=HOMODYNE,
                detection_bob=HETERODYNE,
            )


class TestMutualInformation:
    def test_uncorrelated_state_carries_nothing(self):
        cov = direct_sum(CovarianceMatrix(1.8 * np.eye(2)), CovarianceMatrix(1.3 * np.eye(2)))
        for da, db in itertools.product((HOMODYNE, HETERODYNE), repeat=2):
            assert mutual_information(cov, da, db) == pytest.approx(0.0, abs=1e-14)

    def test_tmsv_homodyne_closed_form(self):
        for v in (1.3, 1.7, 3.0):
            got = mutual_information(tmsv_covariance(v), HOMODYNE, HOMODYNE)
            assert got == pytest.approx(math.log2(v), abs=1e-12)

    def test_symmetry_under_party_swap(self, rng):
        # I(A:B) formulas must agree when detections swap on a symmetric state
        T = rng.uniform(0.2, 1.0)
        cov = eim_covariance(1.9, ChannelParams(T, 0.01), ChannelParams(T, 0.01))
        assert mutual_information(cov, HETERODYNE, HOMODYNE) == pytest.approx(
            mutual_information(cov, HOMODYNE, HETERODYNE), abs=1e-12
        )

    def test_against_gaussian_sampling_oracle(self, rng):
        # het(A)-hom(B) at the 25 km operating point, estimated from 1e7
        # samples of the generative model (x_A, x_B) + vacuum mixing
        T = 10**-0.5
        cov = eim_covariance(V_OP, ChannelParams(T, EPS_OP), ChannelParams(T, EPS_OP))
        a, b, c = normal_form_abc(cov.m)
        analytic = mutual_information(cov, HETERODYNE, HOMODYNE)

        sigma = np.array([[a, c], [c, b]])
        chol = np.linalg.cholesky(sigma)
        n_total, chunk = 10_000_000, 2_500_000
        s_xx = s_yy = s_xy = 0.0
        for _ in range(n_total // chunk):
            z = rng.standard_normal((chunk, 2)) @ chol.T
            x_a = (z[:, 0] + rng.standard_normal(chunk)) / math.sqrt(2)  # het x-port
            x_b = z[:, 1]
            s_xx += float(np.dot(x_a, x_a))
            s_yy += float(np.dot(x_b, x_b))
            s_xy += float(np.dot(x_a, x_b))
        var_a, var_b, cov_ab = s_xx / n_total, s_yy / n_total, s_xy / n_total
        estimate = 0.5 * math.log2(var_b / (var_b - cov_ab**2 / var_a))
        assert estimate == pytest.approx(analytic, abs=1e-3)

    def test_nonpositive_conditional_variance_rejected(self):
        bad = CovarianceMatrix(np.array([
            [1.0, 0.0, 1.2, 0.0],
            [0.0, 1.0, 0.0, -1.2],
            [1.2, 0.0, 1.0, 0.0],
            [0.0, -1.2, 0.0, 1.0],
        ]))
        with pytest.raises(ValueError):
            mutual_information(bad, HOMODYNE, HOMODYNE)


class TestHolevoBound:
    def test_pure_state_leaks_nothing(self):
        chi = holevo_bound(tmsv_covariance(1.7), HETERODYNE, DIRECT)
        assert chi == 0.0

    def test_product_state_additivity(self):
        # conditioning cannot touch an uncorrelated mode: chi = S(A's mode)
        va, vb = 2.4, 1.9
        cov = direct_sum(CovarianceMatrix(va * np.eye(2)), CovarianceMatrix(vb * np.eye(2)))
        chi = holevo_bound(cov, HETERODYNE, DIRECT)
        assert chi == pytest.approx(entropy_g((va - 1) / 2), abs=1e-12)

    def test_dual_path_oracle_at_25km(self):
        # independent route: raw spectra of the joint and conditioned matrices
        T = 10**-0.5
        cov = eim_covariance(V_OP, ChannelParams(T, EPS_OP), ChannelParams(T, EPS_OP))
        a, b, c = normal_form_abc(cov.m)
        nus = symplectic_spectrum_oracle(cov.m)
        cond = np.diag([a - c * c / b, a])  # x-homodyne on Bob, RR
        nu_cond = symplectic_spectrum_oracle(cond)[0]

        def g(x):
            return (x + 1) * math.log2(x + 1) - x * math.log2(x) if x > 0 else 0.0

        expected = g((nus[0] - 1) / 2) + g((nus[1] - 1) / 2) - g((nu_cond - 1) / 2)
        assert holevo_bound(cov, HOMODYNE, REVERSE) == pytest.approx(expected, abs=1e-12)

    def test_direction_selects_conditioned_side(self):
        cov = eim_covariance(1.9, ChannelParams(0.9, 0.0), ChannelParams(0.4, 0.05))
        assert holevo_bound(cov, HOMODYNE, DIRECT) != pytest.approx(
            holevo_bound(cov, HOMODYNE, REVERSE)
        )


class TestKeyRate:
    def test_zero_reconciliation_efficiency_gives_zero(self):
        spec = eim_spec(HETERODYNE, HOMODYNE, DIRECT, 0.9, beta=0.0)
        res = key_rate(spec)
        assert res.key_rate_raw == 0.0
        assert res.key_rate_effective == 0.0
        assert res.physical

    def test_rates_never_negative(self, rng):
        for _ in range(100):
            spec = eim_spec(
                rng.choice([HOMODYNE, HETERODYNE]),
                rng.choice([HOMODYNE, HETERODYNE]),
                rng.choice([DIRECT, REVERSE]),
                rng.uniform(0.05, 1.0),
                eps=rng.uniform(0.0, 0.1),
            )
            res = key_rate(spec)
            assert res.key_rate_raw >= 0.0
            assert res.key_rate_effective <= res.key_rate_raw + 1e-15

    def test_unphysical_amplification_comes_back_flagged(self):
        spec = eim_spec(HETERODYNE, HOMODYNE, DIRECT, 1.0, nla=NlaConfig(1.6, 1.6), eps=0.0)
        res = key_rate(spec)
        assert not res.physical
        assert res.key_rate_raw == 0.0
        assert res.p_total == 0.0

    def test_success_probability_uses_paper_exponents(self):
        # N_A is Alice's marginal variance T(V-1+eps)+1; N_{B|A} is Bob's
        # marginal after Alice's amplifier alone, T(V'-1+eps)+1 with V' the
        # equivalent source variance at g2 = 1
        T, g = 0.5, 1.3
        spec = eim_spec(HETERODYNE, HOMODYNE, DIRECT, T, nla=NlaConfig(g, g))
        res = key_rate(spec)
        n_a = T * (V_OP - 1 + EPS_OP) + 1
        eq = equivalent_params(epr_parameter(V_OP), T, EPS_OP, NlaConfig(g, 1.0))
        n_b = T * (eq.equivalent_epr_variance - 1 + EPS_OP) + 1
        expected = g ** (-2 * n_a) * g ** (-2 * n_b)
        assert res.p_total == pytest.approx(expected, rel=1e-10)

    def test_relay_success_probability_uses_photon_numbers(self):
        T = 10 ** (-0.2 * 0.5 / 10)
        ch = ChannelParams(T, EPS_OP)
        spec = ProtocolSpec(
            kind=RELAY, channel_alice=ch, channel_bob=ch, v_alice=V_OP,
            detection_alice=HETERODYNE, detection_bob=HETERODYNE,
            reconciliation=DIRECT, beta=BETA_OP, nla=NlaConfig(1.8, 1.0),
        )
        cov, _ = build_covariance(spec)
        n_a = (cov.mode_variance(0) - 1) / 2
        assert key_rate(spec).p_total == pytest.approx(1.8 ** (-2 * n_a), rel=1e-10)

    def test_relay_gains_echoed(self):
        ch = ChannelParams(0.95, EPS_OP)
        spec = ProtocolSpec(
            kind=RELAY, channel_alice=ch, channel_bob=ch, v_alice=V_OP,
            detection_alice=HETERODYNE, detection_bob=HETERODYNE,
        )
        res = key_rate(spec)
        assert res.relay_gains == pytest.approx(default_relay_gains(V_OP, ch, ch))
        explicit = replace(spec, relay_gains=(0.3, 0.4))
        assert key_rate(explicit).relay_gains == (0.3, 0.4)

    def test_diagnostics_carry_the_spectra(self):
        spec = eim_spec(HETERODYNE, HOMODYNE, DIRECT, 0.8)
        res = key_rate(spec)
        cov = eim_covariance(V_OP, spec.channel_alice, spec.channel_bob)
        nus = symplectic_eigenvalues(cov)
        assert res.diagnostics[0] == pytest.approx(nus[0])
        assert res.diagnostics[1] == pytest.approx(nus[1])


class TestVariantGroups:
    def test_four_group_collapse_on_symmetric_channels(self, rng):
        # (detA, detB, DR) pairs with (detB, detA, RR): 8 variants, 4 rates
        for _ in range(50):
            T = rng.uniform(0.3, 1.0)
            eps = rng.uniform(0.0, 0.05)
            v = rng.uniform(1.1, 2.5)
            beta = rng.uniform(0.8, 1.0)
            g = 1.0 if rng.random() < 0.5 else rng.uniform(1.0, 1.2)
            nla = NlaConfig(g, g)
            for det_a, det_b in itertools.product((HOMODYNE, HETERODYNE), repeat=2):
                kd = key_rate(eim_spec(det_a, det_b, DIRECT, T, nla=nla, v=v, beta=beta, eps=eps))
                kr = key_rate(eim_spec(det_b, det_a, REVERSE, T, nla=nla, v=v, beta=beta, eps=eps))
                assert kd.key_rate_raw == pytest.approx(kr.key_rate_raw, abs=1e-9)
                assert kd.key_rate_effective == pytest.approx(kr.key_rate_effective, abs=1e-9)
