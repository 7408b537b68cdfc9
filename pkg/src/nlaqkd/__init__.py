"""Key-rate engine for entanglement-based CV-QKD with noiseless linear amplifiers."""

from .gaussian import (
    ChannelParams,
    CovarianceMatrix,
    DegenerateMeasurementError,
    PhysicalityError,
    beamsplitter,
    entangling_cloner_channel,
    entropy_g,
    epr_parameter,
    epr_variance,
    heterodyne_condition,
    homodyne_condition,
    symplectic_eigenvalues,
    symplectic_form,
    tmsv_covariance,
    vacuum,
    von_neumann_entropy,
)
from .nla import (
    EquivalentSystem,
    NlaConfig,
    SuccessProbability,
    UnphysicalAmplificationError,
    apply_nla_gamma,
    cov_after_nla,
    equivalent_params,
    equivalent_params_asymmetric,
    g_max,
    husimi_gamma,
    lambda_bound,
    success_probability,
)
from .protocols import (
    DIRECT,
    EIM,
    HETERODYNE,
    HOMODYNE,
    RELAY,
    REVERSE,
    KeyRateResult,
    ProtocolSpec,
    default_relay_gains,
    eim_covariance,
    holevo_bound,
    key_rate,
    mutual_information,
    relay_covariance,
)
from .sweep import (
    DistanceGrid,
    MaxDistanceResult,
    SweepRow,
    distance_to_transmittance,
    max_distance,
    optimize_gain,
    rows_to_csv,
    spec_at_distance,
    sweep,
)

__version__ = "0.1.0"
