"""Key rates for the two entanglement-based CV-QKD protocols.

Both protocols end with Alice and Bob sharing a two-mode Gaussian state in
normal form; an eavesdropper holding the purification limits the key through
the Holevo bound.  The source-in-the-middle protocol distributes one EPR pair
through two attacked channels.  The untrusted-relay protocol swaps
entanglement: both parties send one EPR arm to a relay whose Bell-type
measurement (50:50 beamsplitter, x and p homodyne) is broadcast and undone by
local displacements, after which both parties heterodyne.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import (
    ChannelParams,
    CovarianceMatrix,
    DegenerateMeasurementError,
    PhysicalityError,
    beamsplitter,
    direct_sum,
    entangling_cloner_channel,
    entropy_g,
    heterodyne_condition,
    homodyne_condition,
    symplectic_eigenvalues,
    tmsv_covariance,
    von_neumann_entropy,
)
from .nla import NlaConfig, SuccessProbability, UnphysicalAmplificationError, cov_after_nla, normal_form_abc

EIM = "entanglement_in_middle"
RELAY = "untrusted_relay"
HOMODYNE = "homodyne"
HETERODYNE = "heterodyne"
DIRECT = "DR"
REVERSE = "RR"


@dataclass(frozen=True)
class ProtocolSpec:
    """Full description of one protocol run.

    For the relay protocol both detections must be heterodyne and
    `relay_gains` optionally overrides the displacement gains (defaults to
    the noise-cancelling choice of `default_relay_gains`).  `v_bob` is only
    meaningful for the relay; the middle-source protocol has a single source
    of variance `v_alice`.
    """

    kind: str
    channel_alice: ChannelParams
    channel_bob: ChannelParams
    v_alice: float = 1.7
    v_bob: float | None = None
    detection_alice: str = HETERODYNE
    detection_bob: str = HOMODYNE
    reconciliation: str = DIRECT
    beta: float = 0.948
    nla: NlaConfig = field(default_factory=NlaConfig)
    relay_gains: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in (EIM, RELAY):
            raise ValueError(f"unknown protocol kind {self.kind!r}")
        for det in (self.detection_alice, self.detection_bob):
            if det not in (HOMODYNE, HETERODYNE):
                raise ValueError(f"unknown detection {det!r}")
        if self.reconciliation not in (DIRECT, REVERSE):
            raise ValueError(f"unknown reconciliation {self.reconciliation!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"reconciliation efficiency must be in [0, 1], got {self.beta}")
        if self.v_alice < 1.0 or (self.v_bob is not None and self.v_bob < 1.0):
            raise ValueError("source variances must be >= 1")
        if self.kind == RELAY and (self.detection_alice, self.detection_bob) != (HETERODYNE, HETERODYNE):
            raise ValueError("the relay protocol measures with heterodyne detection on both sides")

    @property
    def v_b(self) -> float:
        return self.v_alice if self.v_bob is None else self.v_bob


@dataclass(frozen=True)
class KeyRateResult:
    """Outcome of one key-rate evaluation.

    Rates are in bits per protocol use; `key_rate_effective` is the raw rate
    scaled by the total NLA success probability.  When `physical` is False
    (amplification outside the admissible region, or a degenerate conditional
    state) rates and p_total are reported as 0.  `diagnostics` holds the
    symplectic eigenvalues (nu1, nu2) of the shared state and the conditioned
    eigenvalue used in the Holevo term.
    """

    mutual_info: float
    holevo: float
    key_rate_raw: float
    p_total: float
    key_rate_effective: float
    physical: bool
    diagnostics: tuple[float, ...] = ()
    relay_gains: tuple[float, float] | None = None


def eim_covariance(V: float, ch1: ChannelParams, ch2: ChannelParams) -> CovarianceMatrix:
    """Shared state of the middle-source protocol: EPR pair, one cloner per arm.

    Normal form with a = T1(V - 1 + eps1) + 1, b likewise, and
    c = sqrt(T1 T2 (V^2 - 1)).
    """
    cov = tmsv_covariance(V)
    cov = entangling_cloner_channel(cov, 0, ch1)
    cov = entangling_cloner_channel(cov, 1, ch2)
    return cov


def default_relay_gains(
    V: float, ch1: ChannelParams, ch2: ChannelParams, v_bob: float | None = None
) -> tuple[float, float]:
    """Displacement gains that cancel the broadcast outcome from each mode.

    g_A = sqrt(T1 (V_A^2 - 1)) / (sqrt(2) w_A) with w_A the variance of
    Alice's arm at the relay, and likewise for Bob: each side scales the
    announced (x_C, p_D) by its own arm's correlation-to-variance ratio, which
    removes the announcement noise from its kept mode.  In the symmetric case
    this cancellation is exact and the swapped state of two lossless arms is
    the pure EPR state of squeezing lam_A * lam_B.
    """
    vb = V if v_bob is None else v_bob
    w1 = ch1.transmittance * (V - 1.0 + ch1.excess_noise) + 1.0
    w2 = ch2.transmittance * (vb - 1.0 + ch2.excess_noise) + 1.0
    g_a = math.sqrt(ch1.transmittance * (V * V - 1.0)) / (math.sqrt(2.0) * w1)
    g_b = math.sqrt(ch2.transmittance * (vb * vb - 1.0)) / (math.sqrt(2.0) * w2)
    return g_a, g_b


def relay_covariance(
    v_alice: float,
    v_bob: float,
    ch1: ChannelParams,
    ch2: ChannelParams,
    g_a: float,
    g_b: float,
) -> CovarianceMatrix:
    """Displaced two-mode state (A3, B3) of the untrusted-relay protocol.

    Pipeline: two EPR pairs, the sent arms through their channels, a 50:50
    beamsplitter turning them into modes C = (A1' - B1')/sqrt(2) and
    D = (A1' + B1')/sqrt(2), then the classical feedforward

        x_A3 = x_A2 - g_a * x_C,   p_A3 = p_A2 + g_a * p_D,
        x_B3 = x_B2 + g_b * x_C,   p_B3 = p_B2 + g_b * p_D,

    whose second moments are returned.  The output is always a valid state
    (it is the covariance of a physically displaced ensemble).
    """
    # mode order (A2, A1, B1, B2): EPR pairs are (A2, A1) and (B1, B2)
    full = direct_sum(tmsv_covariance(v_alice), tmsv_covariance(v_bob))
    full = entangling_cloner_channel(full, 1, ch1)
    full = entangling_cloner_channel(full, 2, ch2)
    full = beamsplitter(full, 1, 2, 0.5)  # mode 1 -> C, mode 2 -> D
    ff = np.zeros((4, 8))
    ff[0, 0] = 1.0
    ff[0, 2] = -g_a
    ff[1, 1] = 1.0
    ff[1, 5] = g_a
    ff[2, 6] = 1.0
    ff[2, 2] = g_b
    ff[3, 7] = 1.0
    ff[3, 5] = g_b
    return CovarianceMatrix(ff @ full.m @ ff.T)


def mutual_information(cov: CovarianceMatrix, detection_alice: str, detection_bob: str) -> float:
    """Classical mutual information of the measurement data, in bits.

    Heterodyne mixes in one vacuum unit, so its conditional variances carry
    v + 1; homodyne keeps a single quadrature, hence the 1/2 prefactor
    whenever at least one side homodynes.
    """
    a, b, c = normal_form_abc(cov.m)
    c2 = c * c
    if detection_alice == HOMODYNE and detection_bob == HOMODYNE:
        cond = a - c2 / b
        pre, num = 0.5, a
    elif detection_alice == HETERODYNE and detection_bob == HOMODYNE:
        cond = b - c2 / (a + 1.0)
        pre, num = 0.5, b
    elif detection_alice == HOMODYNE and detection_bob == HETERODYNE:
        cond = a - c2 / (b + 1.0)
        pre, num = 0.5, a
    else:
        cond = a + 1.0 - c2 / (b + 1.0)
        pre, num = 1.0, a + 1.0
    if cond <= 0.0:
        raise PhysicalityError(f"nonpositive conditional variance {cond}")
    return pre * math.log2(num / cond)


def holevo_bound(cov: CovarianceMatrix, reference_detection: str, direction: str) -> float:
    """Eavesdropper's Holevo information against the reference side's data.

    Direct reconciliation conditions on Alice's measurement, reverse on
    Bob's; an eavesdropper purifying the shared state then holds
    S(gamma_AB) - S(gamma_cond) bits about the reference data.  Homodyne
    conditions on the x quadrature (the p case is symmetric after sifting).
    Clamped at 0: a pure shared state leaks nothing.
    """
    if direction not in (DIRECT, REVERSE):
        raise ValueError(f"unknown reconciliation direction {direction!r}")
    mode = 0 if direction == DIRECT else 1
    if reference_detection == HOMODYNE:
        conditioned = homodyne_condition(cov, mode, "x")
    elif reference_detection == HETERODYNE:
        conditioned = heterodyne_condition(cov, mode)
    else:
        raise ValueError(f"unknown detection {reference_detection!r}")
    chi = von_neumann_entropy(cov) - von_neumann_entropy(conditioned)
    return max(chi, 0.0)


def build_covariance(spec: ProtocolSpec) -> tuple[CovarianceMatrix, tuple[float, float] | None]:
    """Pre-amplifier shared state of a protocol, plus the relay gains used."""
    if spec.kind == EIM:
        return eim_covariance(spec.v_alice, spec.channel_alice, spec.channel_bob), None
    gains = spec.relay_gains
    if gains is None:
        gains = default_relay_gains(spec.v_alice, spec.channel_alice, spec.channel_bob, spec.v_b)
    cov = relay_covariance(spec.v_alice, spec.v_b, spec.channel_alice, spec.channel_bob, gains[0], gains[1])
    return cov, gains


def _success_exponents(spec: ProtocolSpec, cov: CovarianceMatrix) -> tuple[float, float]:
    """(N_A, N_{B|A}) driving the success probabilities p = g^(-2N).

    Alice's exponent comes from her marginal of the pre-amplifier state; the
    conditional Bob exponent is taken after Alice's amplifier alone succeeded
    (g2 = 1), matching the sequential success rule.  The middle-source
    protocol uses the marginal variance itself as the exponent, T(V-1+eps)+1;
    the relay uses the marginal mean photon number (v - 1)/2.
    """
    v_a = cov.mode_variance(0)
    if spec.nla.g1 > 1.0:
        after_alice = cov_after_nla(cov, NlaConfig(spec.nla.g1, 1.0))
        v_b = after_alice.mode_variance(1)
    else:
        v_b = cov.mode_variance(1)
    if spec.kind == EIM:
        return v_a, v_b
    return max((v_a - 1.0) / 2.0, 0.0), max((v_b - 1.0) / 2.0, 0.0)


def _flagged(relay_gains) -> KeyRateResult:
    return KeyRateResult(
        mutual_info=0.0,
        holevo=0.0,
        key_rate_raw=0.0,
        p_total=0.0,
        key_rate_effective=0.0,
        physical=False,
        diagnostics=(),
        relay_gains=relay_gains,
    )


def key_rate(spec: ProtocolSpec) -> KeyRateResult:
    """Secret key rate K = beta*I - chi of one protocol configuration.

    Negative rates clamp to zero; configurations whose amplified state leaves
    the physical region come back flagged rather than raising, so parameter
    sweeps can record them as "no key" points.
    """
    cov, gains = build_covariance(spec)
    if spec.nla.active:
        try:
            p = _success_exponents(spec, cov)
            cov = cov_after_nla(cov, spec.nla)
        except UnphysicalAmplificationError:
            return _flagged(gains)
        prob = SuccessProbability(
            p_alice=spec.nla.g1 ** (-2.0 * p[0]),
            p_bob_given_alice=spec.nla.g2 ** (-2.0 * p[1]),
        )
        p_total = prob.p_total
    else:
        p_total = 1.0
    ref_det = spec.detection_alice if spec.reconciliation == DIRECT else spec.detection_bob
    try:
        info = mutual_information(cov, spec.detection_alice, spec.detection_bob)
        chi = holevo_bound(cov, ref_det, spec.reconciliation)
    except (PhysicalityError, DegenerateMeasurementError):
        return _flagged(gains)
    raw = max(spec.beta * info - chi, 0.0)
    nus = symplectic_eigenvalues(cov)
    mode = 0 if spec.reconciliation == DIRECT else 1
    cond = (
        homodyne_condition(cov, mode, "x") if ref_det == HOMODYNE else heterodyne_condition(cov, mode)
    )
    nu_cond = symplectic_eigenvalues(cond)[0]
    return KeyRateResult(
        mutual_info=info,
        holevo=chi,
        key_rate_raw=raw,
        p_total=p_total,
        key_rate_effective=p_total * raw,
        physical=True,
        diagnostics=(nus[0], nus[1], nu_cond),
        relay_gains=gains,
    )
