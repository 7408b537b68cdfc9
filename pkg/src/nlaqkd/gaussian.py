"""Gaussian-state linear algebra on quadrature covariance matrices.

All states live in shot-noise units: the vacuum covariance matrix is the
identity, quadratures are ordered (x1, p1, ..., xn, pn), and a state is
physical iff every symplectic eigenvalue is >= 1.  Everything here is a pure
function of dense numpy arrays; the systems of interest never exceed four
modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Tolerances shared across the package.
SYMMETRY_RTOL = 1e-12        # relative symmetry tolerance for covariance input
PHYSICALITY_TOL = 1e-9       # symplectic eigenvalues may undershoot 1 by this
DEGENERATE_VARIANCE = 1e-12  # homodyne conditioning refuses variances below this

SIGMA_Z = np.diag([1.0, -1.0])


class PhysicalityError(ValueError):
    """Covariance matrix is not a valid quantum state (some nu < 1)."""


class DegenerateMeasurementError(ValueError):
    """Measured quadrature variance too small to condition on."""


@dataclass(frozen=True)
class ChannelParams:
    """One-mode Gaussian channel: transmittance T and input-referred excess noise.

    The channel maps a variance v to T*(v - 1 + excess_noise) + 1 and scales
    cross-correlations by sqrt(T), i.e. the excess noise enters additively as
    T*eps at the output.
    """

    transmittance: float
    excess_noise: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.transmittance <= 1.0:
            raise ValueError(f"transmittance must be in (0, 1], got {self.transmittance}")
        if self.excess_noise < 0.0:
            raise ValueError(f"excess noise must be >= 0, got {self.excess_noise}")


class CovarianceMatrix:
    """2n x 2n real symmetric quadrature covariance matrix.

    Thin wrapper that validates shape/symmetry once and hands out the raw
    ndarray via ``.m`` for the linear algebra.
    """

    __slots__ = ("m",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 != 0 or m.shape[0] == 0:
            raise ValueError(f"covariance matrix must be 2n x 2n, got shape {m.shape}")
        scale = max(np.abs(m).max(), 1.0)
        if np.abs(m - m.T).max() > SYMMETRY_RTOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        self.m = 0.5 * (m + m.T)  # kill round-off asymmetry

    @property
    def n_modes(self) -> int:
        return self.m.shape[0] // 2

    def mode_block(self, i: int) -> np.ndarray:
        """2x2 diagonal block of mode i."""
        return self.m[2 * i : 2 * i + 2, 2 * i : 2 * i + 2]

    def mode_variance(self, i: int) -> float:
        """Mean quadrature variance of mode i (tr of its block / 2)."""
        return float(np.trace(self.mode_block(i))) / 2.0

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        # gamma must be positive definite for the symplectic spectrum to mean
        # anything; the moduli of eig(i Omega gamma) cannot see the sign.
        if np.linalg.eigvalsh(self.m).min() <= 0.0:
            return False
        return symplectic_eigenvalues(self)[-1] >= 1.0 - tol

    def __repr__(self):
        return f"CovarianceMatrix(n_modes={self.n_modes})"


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form Omega with blocks [[0, 1], [-1, 0]]."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def vacuum(n_modes: int) -> CovarianceMatrix:
    return CovarianceMatrix(np.eye(2 * n_modes))


def tmsv_covariance(V: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum of quadrature variance V >= 1.

    Diagonal blocks V*I2, off-diagonal sqrt(V^2 - 1)*sigma_z; pure for all V.
    The squeezing parameter lam in [0, 1) relates by V = (1 + lam^2)/(1 - lam^2).
    """
    if V < 1.0:
        raise ValueError(f"TMSV variance must be >= 1, got {V}")
    cv = np.sqrt(V * V - 1.0)
    m = np.zeros((4, 4))
    m[0:2, 0:2] = V * np.eye(2)
    m[2:4, 2:4] = V * np.eye(2)
    m[0:2, 2:4] = cv * SIGMA_Z
    m[2:4, 0:2] = cv * SIGMA_Z
    return CovarianceMatrix(m)


def epr_parameter(V: float) -> float:
    """lam = sqrt((V - 1)/(V + 1)), the EPR parameter of a TMSV of variance V."""
    if V < 1.0:
        raise ValueError(f"TMSV variance must be >= 1, got {V}")
    return np.sqrt((V - 1.0) / (V + 1.0))


def epr_variance(lam: float) -> float:
    """Inverse of epr_parameter: V = (1 + lam^2)/(1 - lam^2)."""
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"EPR parameter must be in [0, 1), got {lam}")
    return (1.0 + lam * lam) / (1.0 - lam * lam)


def direct_sum(*covs: CovarianceMatrix) -> CovarianceMatrix:
    """Tensor product of states = block-diagonal sum of covariance matrices."""
    dim = sum(c.m.shape[0] for c in covs)
    m = np.zeros((dim, dim))
    k = 0
    for c in covs:
        d = c.m.shape[0]
        m[k : k + d, k : k + d] = c.m
        k += d
    return CovarianceMatrix(m)


def entangling_cloner_channel(cov: CovarianceMatrix, mode: int, ch: ChannelParams) -> CovarianceMatrix:
    """Send one mode through a lossy, noisy Gaussian channel.

    The mode's own block becomes T*(block - I) + T*eps*I + I and every
    cross-correlation with the other modes scales by sqrt(T).  This is the
    covariance-level action of a beamsplitter of transmittance T fed with one
    arm of an EPR pair of variance W = 1 + T*eps/(1 - T) (the entangling
    cloner), after the ancillas are traced out.
    """
    n = cov.n_modes
    if not 0 <= mode < n:
        raise IndexError(f"mode {mode} out of range for {n}-mode state")
    T, eps = ch.transmittance, ch.excess_noise
    s = slice(2 * mode, 2 * mode + 2)
    m = cov.m.copy()
    block = m[s, s].copy()
    m[s, :] *= np.sqrt(T)
    m[:, s] *= np.sqrt(T)
    m[s, s] = T * (block - np.eye(2)) + T * eps * np.eye(2) + np.eye(2)
    return CovarianceMatrix(m)


def beamsplitter_symplectic(n_modes: int, i: int, j: int, tau: float) -> np.ndarray:
    """Symplectic matrix mixing modes i, j with transmittance tau.

    Output mode i gets sqrt(tau)*i - sqrt(1-tau)*j; output mode j gets
    sqrt(1-tau)*i + sqrt(tau)*j.  At tau = 1/2 this is the relay convention
    C = (i - j)/sqrt(2), D = (i + j)/sqrt(2).
    """
    if i == j:
        raise ValueError("beamsplitter needs two distinct modes")
    if not (0 <= i < n_modes and 0 <= j < n_modes):
        raise IndexError(f"mode indices ({i}, {j}) out of range for {n_modes} modes")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"transmittance must be in [0, 1], got {tau}")
    t, r = np.sqrt(tau), np.sqrt(1.0 - tau)
    S = np.eye(2 * n_modes)
    si, sj = slice(2 * i, 2 * i + 2), slice(2 * j, 2 * j + 2)
    S[si, si] = t * np.eye(2)
    S[si, sj] = -r * np.eye(2)
    S[sj, si] = r * np.eye(2)
    S[sj, sj] = t * np.eye(2)
    return S


def beamsplitter(cov: CovarianceMatrix, i: int, j: int, tau: float) -> CovarianceMatrix:
    """Symplectic congruence gamma -> S gamma S^T for a two-mode beamsplitter."""
    S = beamsplitter_symplectic(cov.n_modes, i, j, tau)
    return CovarianceMatrix(S @ cov.m @ S.T)


def _split_out_mode(cov: CovarianceMatrix, mode: int):
    """Partition gamma into (rest, measured block, cross) for conditioning."""
    n = cov.n_modes
    idx = [k for k in range(2 * n) if k not in (2 * mode, 2 * mode + 1)]
    mk = [2 * mode, 2 * mode + 1]
    A = cov.m[np.ix_(idx, idx)]
    B = cov.m[np.ix_(mk, mk)]
    C = cov.m[np.ix_(idx, mk)]
    return A, B, C


def homodyne_condition(cov: CovarianceMatrix, mode: int, quadrature: str = "x") -> CovarianceMatrix:
    """Condition on a homodyne measurement of one quadrature of one mode.

    Gaussian conditioning: gamma_rest - C (Pi B Pi)^+ C^T with Pi the projector
    onto the measured quadrature; for a single quadrature the pseudo-inverse is
    just 1/v on the measured variance v.  The result does not depend on the
    measurement outcome.
    """
    if quadrature not in ("x", "p"):
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    n = cov.n_modes
    if not 0 <= mode < n:
        raise IndexError(f"mode {mode} out of range for {n}-mode state")
    A, B, C = _split_out_mode(cov, mode)
    q = 0 if quadrature == "x" else 1
    v = B[q, q]
    if v < DEGENERATE_VARIANCE:
        raise DegenerateMeasurementError(f"measured variance {v} below {DEGENERATE_VARIANCE}")
    col = C[:, q : q + 1]
    return CovarianceMatrix(A - (col @ col.T) / v)


def heterodyne_condition(cov: CovarianceMatrix, mode: int) -> CovarianceMatrix:
    """Condition on a heterodyne (both-quadrature) measurement of one mode.

    Gaussian rule gamma_rest - C (B + I)^{-1} C^T; B + I is always invertible
    for a physical state.
    """
    n = cov.n_modes
    if not 0 <= mode < n:
        raise IndexError(f"mode {mode} out of range for {n}-mode state")
    A, B, C = _split_out_mode(cov, mode)
    inv = np.linalg.inv(B + np.eye(2))
    return CovarianceMatrix(A - C @ inv @ C.T)


def symplectic_eigenvalues(cov: CovarianceMatrix) -> np.ndarray:
    """Symplectic spectrum: the n distinct-by-pairing moduli of eig(i Omega gamma).

    The eigenvalues of i*Omega*gamma come in +/- pairs; sorting the moduli and
    keeping every other one yields the n symplectic eigenvalues, returned in
    descending order.
    """
    n = cov.n_modes
    omega = symplectic_form(n)
    ev = np.linalg.eigvals(1j * omega @ cov.m)
    mods = np.sort(np.abs(ev))
    nus = mods[::2]  # one representative per +/- pair
    return nus[::-1].copy()


def entropy_g(x: float) -> float:
    """g(x) = (x + 1) log2(x + 1) - x log2 x, the thermal-state entropy kernel."""
    if x <= 0.0:
        return 0.0
    return float((x + 1.0) * np.log2(x + 1.0) - x * np.log2(x))


def von_neumann_entropy(cov: CovarianceMatrix, tol: float = PHYSICALITY_TOL) -> float:
    """Von Neumann entropy in bits: sum of g((nu_i - 1)/2) over the spectrum.

    Eigenvalues within `tol` below 1 are clamped to 1 to absorb round-off;
    anything lower raises PhysicalityError.
    """
    if not cov.is_physical(tol):
        nus = symplectic_eigenvalues(cov)
        raise PhysicalityError(f"state is unphysical: min symplectic eigenvalue {nus[-1]:.12g}")
    return sum(entropy_g((max(nu, 1.0) - 1.0) / 2.0) for nu in symplectic_eigenvalues(cov))
