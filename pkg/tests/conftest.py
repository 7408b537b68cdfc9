"""Shared oracles and random-state builders for the test suite.

The oracles here deliberately re-derive results through routes independent of
the package internals (generic Schur complements, brute-force symplectic
spectra, extended-precision entropy) so the main code paths are checked
against something other than themselves.
"""

import math

import numpy as np
import pytest

from nlaqkd.gaussian import ChannelParams, CovarianceMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_channel(rng, t_min=0.05) -> ChannelParams:
    return ChannelParams(rng.uniform(t_min, 1.0), rng.uniform(0.0, 0.1))


def random_normal_form_state(rng) -> CovarianceMatrix:
    """Physical two-mode normal-form state: EPR pair through two channels."""
    from nlaqkd.protocols import eim_covariance

    v = rng.uniform(1.0, 4.0)
    return eim_covariance(v, random_channel(rng), random_channel(rng))


def schur_condition_oracle(m: np.ndarray, mode: int, projector: np.ndarray) -> np.ndarray:
    """Generic Gaussian conditioning: A - C (Pi B Pi)^+ C^T via numpy pinv."""
    n = m.shape[0] // 2
    keep = [k for k in range(2 * n) if k not in (2 * mode, 2 * mode + 1)]
    meas = [2 * mode, 2 * mode + 1]
    A = m[np.ix_(keep, keep)]
    B = m[np.ix_(meas, meas)]
    C = m[np.ix_(keep, meas)]
    core = np.linalg.pinv(projector @ B @ projector, rcond=1e-10)
    return A - C @ core @ C.T


def symplectic_spectrum_oracle(m: np.ndarray) -> np.ndarray:
    """Moduli of eig(i Omega gamma), paired down to one value per mode."""
    n = m.shape[0] // 2
    omega = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    mods = np.sort(np.abs(np.linalg.eigvals(1j * omega @ m)))
    return mods[::2][::-1].copy()


def entropy_oracle_bits(m: np.ndarray) -> float:
    """Plain-math re-implementation of the entropy from the raw spectrum."""

    def g(x):
        if x <= 0:
            return 0.0
        return (x + 1) * math.log2(x + 1) - x * math.log2(x)

    return sum(g((max(nu, 1.0) - 1.0) / 2.0) for nu in symplectic_spectrum_oracle(m))


def entropy_oracle_mpmath(m: np.ndarray, dps: int = 40) -> float:
    """Extended-precision entropy: mpmath eigenvalues of i Omega gamma."""
    import mpmath

    with mpmath.workdps(dps):
        n = m.shape[0] // 2
        omega = mpmath.zeros(2 * n)
        for k in range(n):
            omega[2 * k, 2 * k + 1] = mpmath.mpf(1)
            omega[2 * k + 1, 2 * k] = mpmath.mpf(-1)
        gamma = mpmath.matrix([[mpmath.mpf(float(x)) for x in row] for row in m])
        ev, _ = mpmath.eig(mpmath.mpc(0, 1) * omega * gamma)
        mods = sorted(abs(e) for e in ev)
        nus = mods[::2]
        total = mpmath.mpf(0)
        for nu in nus:
            x = (nu - 1) / 2
            if x > 0:
                total += (x + 1) * mpmath.log(x + 1, 2) - x * mpmath.log(x, 2)
        return float(total)
