"""Noiseless-linear-amplifier action on two-mode Gaussian states.

A successful NLA of gain g maps coherent amplitudes alpha -> g*alpha without
adding noise.  On a two-mode covariance matrix in normal form the action is
multiplicative in the Husimi domain: Gamma = (gamma + I)^{-1} transforms block
by block, and inverting back gives the amplified covariance.  An equivalent
description replaces the amplified system by a fictitious unamplified one with
a stronger EPR source and rescaled channel parameters; both routes must agree,
which is the module's main self-consistency check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import SIGMA_Z, CovarianceMatrix, PhysicalityError

NORMAL_FORM_TOL = 1e-9


class UnphysicalAmplificationError(PhysicalityError):
    """Requested gains push the amplified state outside the physical region."""


class NormalFormError(ValueError):
    """Matrix is not of the form [[a*I2, c*sigma_z], [c*sigma_z, b*I2]]."""


@dataclass(frozen=True)
class NlaConfig:
    """Gains of the amplifiers at Alice's (g1) and Bob's (g2) side; 1 = absent."""

    g1: float = 1.0
    g2: float = 1.0

    def __post_init__(self):
        if self.g1 < 1.0 or self.g2 < 1.0:
            raise ValueError(f"NLA gains must be >= 1, got ({self.g1}, {self.g2})")

    @property
    def active(self) -> bool:
        return self.g1 > 1.0 or self.g2 > 1.0


@dataclass(frozen=True)
class EquivalentSystem:
    """Unamplified source/channel parameters reproducing an amplified state.

    varsigma is the equivalent EPR parameter, (eta1, eps1_g) and (eta2, eps2_g)
    the equivalent per-side transmittances and excess noises.  `physical` is
    False where the parameters leave the physical region (varsigma >= 1,
    eta outside [0, 1] or negative excess noise); callers are expected to treat
    such points as "no key" rather than errors.  `generalized` marks parameter
    sets produced by the per-side extension for asymmetric channels.
    """

    varsigma: float
    eta1: float
    eps1_g: float
    eta2: float
    eps2_g: float
    physical: bool
    generalized: bool = False

    @property
    def equivalent_epr_variance(self) -> float:
        """V' = (1 + varsigma^2)/(1 - varsigma^2) of the equivalent source."""
        s = self.varsigma
        return (1.0 + s * s) / (1.0 - s * s)


@dataclass(frozen=True)
class SuccessProbability:
    """Per-side and total NLA success probabilities, p_total = p_A * p_{B|A}."""

    p_alice: float
    p_bob_given_alice: float

    @property
    def p_total(self) -> float:
        return self.p_alice * self.p_bob_given_alice


def normal_form_abc(m: np.ndarray, tol: float = NORMAL_FORM_TOL):
    """Extract (a, b, c) from [[a*I2, c*sigma_z], [c*sigma_z, b*I2]].

    Raises NormalFormError when the matrix deviates from that structure by
    more than `tol` (absolute, relative to the largest entry).
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise NormalFormError(f"expected a 4x4 matrix, got shape {m.shape}")
    a = 0.5 * (m[0, 0] + m[1, 1])
    b = 0.5 * (m[2, 2] + m[3, 3])
    c = 0.5 * (m[0, 2] - m[1, 3])
    model = np.zeros((4, 4))
    model[0:2, 0:2] = a * np.eye(2)
    model[2:4, 2:4] = b * np.eye(2)
    model[0:2, 2:4] = c * SIGMA_Z
    model[2:4, 0:2] = c * SIGMA_Z
    scale = max(np.abs(m).max(), 1.0)
    if np.abs(m - model).max() > tol * scale:
        raise NormalFormError("matrix is not in two-mode normal form")
    return a, b, c


def normal_form_matrix(a: float, b: float, c: float) -> np.ndarray:
    m = np.zeros((4, 4))
    m[0:2, 0:2] = a * np.eye(2)
    m[2:4, 2:4] = b * np.eye(2)
    m[0:2, 2:4] = c * SIGMA_Z
    m[2:4, 0:2] = c * SIGMA_Z
    return m


def husimi_gamma(cov: CovarianceMatrix) -> np.ndarray:
    """Husimi-domain matrix Gamma = (gamma + I)^{-1} of a two-mode state.

    For a physical state gamma + I is strictly positive definite, so the
    inverse always exists; the vacuum maps to I/2.
    """
    if cov.n_modes != 2:
        raise ValueError(f"expected a two-mode state, got {cov.n_modes} modes")
    return np.linalg.inv(cov.m + np.eye(4))


def apply_nla_gamma(gamma_h: np.ndarray, nla: NlaConfig) -> np.ndarray:
    """Amplify a normal-form Husimi matrix.

    Diagonal parameters map A -> g1^2 (A - 1/2) + 1/2 and B -> g2^2 (B - 1/2)
    + 1/2 (1/2 is the vacuum fixed point), the off-diagonal C -> g1*g2*C.
    """
    A, B, C = normal_form_abc(gamma_h)
    A2 = nla.g1 * nla.g1 * (A - 0.5) + 0.5
    B2 = nla.g2 * nla.g2 * (B - 0.5) + 0.5
    C2 = nla.g1 * nla.g2 * C
    return normal_form_matrix(A2, B2, C2)


def cov_after_nla(cov: CovarianceMatrix, nla: NlaConfig) -> CovarianceMatrix:
    """Covariance matrix after both NLAs succeed: (Gamma_NLA)^{-1} - I.

    Raises UnphysicalAmplificationError when the gains exceed the maximal
    physical amplification for the input state (the resulting matrix stops
    being a valid quantum state).
    """
    gamma_h = husimi_gamma(cov)
    gamma_h_nla = apply_nla_gamma(gamma_h, nla)
    try:
        out = np.linalg.inv(gamma_h_nla) - np.eye(4)
    except np.linalg.LinAlgError as exc:
        raise UnphysicalAmplificationError(f"gains {nla} make the Husimi matrix singular") from exc
    result = CovarianceMatrix(out)
    if not result.is_physical():
        raise UnphysicalAmplificationError(
            f"gains ({nla.g1}, {nla.g2}) exceed the physical amplification region"
        )
    return result


def _per_side_lines(g: float, T: float, eps: float):
    """One side's equivalent transmittance and excess noise."""
    g2m1 = g * g - 1.0
    eta = 4.0 * T * g * g / (T * g2m1 * (g2m1 * (eps - 2.0) * eps * T - 4.0 * (eps - 1.0)) + 4.0)
    eps_g = eps - 0.5 * g2m1 * (eps - 2.0) * eps * T
    return eta, eps_g


def _varsigma(lam: float, g1: float, g2: float, T1: float, e1: float, T2: float, e2: float):
    num = ((g1 * g1 - 1.0) * (e1 - 2.0) * T1 - 2.0) * ((g2 * g2 - 1.0) * (e2 - 2.0) * T2 - 2.0)
    den = ((g1 * g1 - 1.0) * e1 * T1 - 2.0) * ((g2 * g2 - 1.0) * e2 * T2 - 2.0)
    if den == 0.0 or num / den < 0.0:
        return math.nan
    return lam * math.sqrt(num / den)


def _classify(varsigma: float, eta1: float, eps1_g: float, eta2: float, eps2_g: float) -> bool:
    return (
        not math.isnan(varsigma)
        and 0.0 <= varsigma < 1.0
        and 0.0 <= eta1 <= 1.0
        and 0.0 <= eta2 <= 1.0
        and eps1_g >= 0.0
        and eps2_g >= 0.0
    )


def equivalent_params(lam: float, T: float, eps: float, nla: NlaConfig) -> EquivalentSystem:
    """Equivalent no-NLA system for an EPR source through two identical channels.

    The amplified state of an EPR parameter lam sent through two channels
    (T, eps) equals the unamplified state of EPR parameter varsigma through
    channels (eta1, eps1_g) and (eta2, eps2_g).  Unphysical parameter regions
    are reported through the `physical` flag, never as exceptions, so sweeps
    can record "no key" points.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"EPR parameter must be in [0, 1), got {lam}")
    varsigma = _varsigma(lam, nla.g1, nla.g2, T, eps, T, eps)
    eta1, eps1_g = _per_side_lines(nla.g1, T, eps)
    eta2, eps2_g = _per_side_lines(nla.g2, T, eps)
    return EquivalentSystem(
        varsigma=varsigma,
        eta1=eta1,
        eps1_g=eps1_g,
        eta2=eta2,
        eps2_g=eps2_g,
        physical=_classify(varsigma, eta1, eps1_g, eta2, eps2_g),
    )


def equivalent_params_asymmetric(
    lam: float, T1: float, eps1: float, T2: float, eps2: float, nla: NlaConfig
) -> EquivalentSystem:
    """Per-side generalization of equivalent_params to unequal channels.

    Each side's lines use its own (T, eps, g); the varsigma line takes one
    factor per side.  Validated against the covariance-level transform only in
    the symmetric case, hence flagged `generalized`.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"EPR parameter must be in [0, 1), got {lam}")
    varsigma = _varsigma(lam, nla.g1, nla.g2, T1, eps1, T2, eps2)
    eta1, eps1_g = _per_side_lines(nla.g1, T1, eps1)
    eta2, eps2_g = _per_side_lines(nla.g2, T2, eps2)
    return EquivalentSystem(
        varsigma=varsigma,
        eta1=eta1,
        eps1_g=eps1_g,
        eta2=eta2,
        eps2_g=eps2_g,
        physical=_classify(varsigma, eta1, eps1_g, eta2, eps2_g),
        generalized=not (T1 == T2 and eps1 == eps2),
    )


def lambda_bound(T: float, eps: float, nla: NlaConfig) -> float:
    """Largest admissible source EPR parameter for given channel and gains.

    Product of per-side square roots; equals 1 when both gains are 1 (any
    source is admissible).  A negative radicand means no admissible source,
    reported as 0.
    """
    bound = 1.0
    for g in (nla.g1, nla.g2):
        num = (g * g - 1.0) * eps * T - 2.0
        den = (g * g - 1.0) * (eps - 2.0) * T - 2.0
        if den == 0.0 or num / den < 0.0:
            return 0.0
        bound *= math.sqrt(num / den)
    return bound


def g_max(T: float, eps: float) -> float:
    """Maximal per-side NLA gain keeping the equivalent channel physical.

    Root of eta(g) = 1: beyond it the equivalent transmittance exceeds unity.
    Unbounded (returns inf) for eps = 0 or eps >= 2, where no finite
    constraint arises.
    """
    if not 0.0 < T <= 1.0:
        raise ValueError(f"transmittance must be in (0, 1], got {T}")
    if eps < 0.0:
        raise ValueError(f"excess noise must be >= 0, got {eps}")
    if eps == 0.0 or eps >= 2.0:
        return math.inf
    s = T * (eps - 2.0) + 2.0
    g2 = (eps * s - 2.0 * math.sqrt(eps * s)) / (T * eps * (eps - 2.0))
    return math.sqrt(g2)


def success_probability(nla: NlaConfig, n_alice: float, n_bob_given_alice: float) -> SuccessProbability:
    """Success probabilities p = g^(-2N) for each amplifier and their product.

    N is the mean-photon-number-like exponent of the amplifier's input
    ensemble; an absent amplifier (g = 1) succeeds with certainty.
    """
    if n_alice < 0.0 or n_bob_given_alice < 0.0:
        raise ValueError("photon-number exponents must be >= 0")
    p_a = nla.g1 ** (-2.0 * n_alice)
    p_b = nla.g2 ** (-2.0 * n_bob_given_alice)
    return SuccessProbability(p_alice=p_a, p_bob_given_alice=p_b)
