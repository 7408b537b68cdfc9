"""Parameter studies over fibre distance: rate curves, maximal reach, gains.

Distances convert to transmittance through T = 10^(-a d / 10) with a the
fibre loss coefficient in dB/km.  For the middle-source protocol the swept
distance is the length of each of the two (equal) channels; for the relay it
is the total Alice-Bob distance, divided between the two arms by a split
ratio.  A split of exactly 0 leaves Alice's channel lossless while keeping
its excess noise.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .gaussian import ChannelParams
from .nla import NlaConfig, g_max
from .protocols import EIM, ProtocolSpec, key_rate

DEFAULT_LOSS_DB_PER_KM = 0.2
SCAN_LIMIT_KM = 200.0
GAIN_SEARCH_CAP = 10.0  # only reached when g_max is unbounded (eps = 0)


@dataclass(frozen=True)
class DistanceGrid:
    """Uniform grid of distances with the loss coefficient used to convert them.

    start == stop is a one-point grid; stop < start is an empty (zero-length)
    grid, useful for header-only CSV output.
    """

    start_km: float
    stop_km: float
    step_km: float
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM

    def __post_init__(self):
        if self.start_km < 0:
            raise ValueError("start_km must be >= 0")
        if self.step_km <= 0:
            raise ValueError("step_km must be > 0")
        if self.loss_db_per_km <= 0:
            raise ValueError("loss coefficient must be > 0")

    def points(self) -> np.ndarray:
        if self.stop_km < self.start_km:
            return np.empty(0)
        n = int(math.floor((self.stop_km - self.start_km) / self.step_km + 1e-9)) + 1
        return self.start_km + self.step_km * np.arange(n)


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a sweep; l_ac/l_bc are filled for the relay only."""

    distance_km: float
    key_rate_raw: float
    key_rate_effective: float
    p_total: float
    physical: bool
    l_ac_km: float | None = None
    l_bc_km: float | None = None


def distance_to_transmittance(d_km: float, loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM) -> float:
    """T = 10^(-a d / 10); exactly 1 at zero distance."""
    if d_km < 0:
        raise ValueError(f"distance must be >= 0, got {d_km}")
    return 10.0 ** (-loss_db_per_km * d_km / 10.0)


def spec_at_distance(
    template: ProtocolSpec,
    d_km: float,
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM,
    relay_split: float | None = None,
) -> ProtocolSpec:
    """Template with its channel transmittances set for one grid point.

    Excess noises are kept from the template's channels.  For the relay,
    `relay_split` = L_AC / L_AB (default 1/2).
    """
    e1 = template.channel_alice.excess_noise
    e2 = template.channel_bob.excess_noise
    if template.kind == EIM:
        t = distance_to_transmittance(d_km, loss_db_per_km)
        ch1, ch2 = ChannelParams(t, e1), ChannelParams(t, e2)
    else:
        split = 0.5 if relay_split is None else relay_split
        if not 0.0 <= split <= 1.0:
            raise ValueError(f"relay split must be in [0, 1], got {split}")
        t1 = distance_to_transmittance(split * d_km, loss_db_per_km)
        t2 = distance_to_transmittance((1.0 - split) * d_km, loss_db_per_km)
        ch1, ch2 = ChannelParams(t1, e1), ChannelParams(t2, e2)
    return replace(template, channel_alice=ch1, channel_bob=ch2)


def sweep(
    template: ProtocolSpec,
    grid: DistanceGrid,
    relay_split: float | None = None,
) -> list[SweepRow]:
    """Evaluate the key rate on every grid point, ordered by distance."""
    rows = []
    for d in grid.points():
        spec = spec_at_distance(template, float(d), grid.loss_db_per_km, relay_split)
        res = key_rate(spec)
        if template.kind == EIM:
            l_ac = l_bc = None
        else:
            split = 0.5 if relay_split is None else relay_split
            l_ac, l_bc = split * float(d), (1.0 - split) * float(d)
        rows.append(
            SweepRow(
                distance_km=float(d),
                key_rate_raw=res.key_rate_raw,
                key_rate_effective=res.key_rate_effective,
                p_total=res.p_total,
                physical=res.physical,
                l_ac_km=l_ac,
                l_bc_km=l_bc,
            )
        )
    return rows


@dataclass(frozen=True)
class MaxDistanceResult:
    """Largest distance with a positive effective rate, plus the sign bracket."""

    distance_km: float
    found: bool
    rate_inside: float = 0.0
    rate_outside: float = 0.0


def max_distance(
    template: ProtocolSpec,
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM,
    tol_km: float = 0.05,
    relay_split: float | None = None,
    scan_limit_km: float = SCAN_LIMIT_KM,
) -> MaxDistanceResult:
    """Largest d with key_rate_effective > 0, to tol_km.

    A 1 km coarse scan locates the last sign change (the effective rate need
    not be monotone once the success probability scales it), then bisection
    refines the bracket.  Returns 0 with found=False when no grid point is
    positive.
    """

    def rate(d: float) -> float:
        res = key_rate(spec_at_distance(template, d, loss_db_per_km, relay_split))
        return res.key_rate_effective if res.physical else 0.0

    ds = np.arange(0.0, scan_limit_km + 1.0, 1.0)
    ks = np.array([rate(float(d)) for d in ds])
    pos = np.where(ks > 0.0)[0]
    if len(pos) == 0:
        return MaxDistanceResult(0.0, False)
    last = pos[-1]
    if last == len(ds) - 1:
        return MaxDistanceResult(float(ds[-1]), True, rate_inside=float(ks[-1]))
    lo, hi = float(ds[last]), float(ds[last + 1])
    k_lo, k_hi = float(ks[last]), float(ks[last + 1])
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        k_mid = rate(mid)
        if k_mid > 0.0:
            lo, k_lo = mid, k_mid
        else:
            hi, k_hi = mid, k_mid
    return MaxDistanceResult(lo, True, rate_inside=k_lo, rate_outside=k_hi)


def optimize_gain(
    template: ProtocolSpec,
    d_km: float,
    gain_step: float = 0.05,
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM,
    relay_split: float | None = None,
) -> tuple[float, float, float]:
    """Grid search over (g1, g2) maximizing the effective rate at one distance.

    Each gain ranges over [1, g_max] for its side's channel (capped when
    unbounded); ties break toward smaller gains, which the row-major scan
    from (1, 1) upward guarantees.
    """
    if gain_step <= 0:
        raise ValueError("gain step must be > 0")
    spec0 = spec_at_distance(template, d_km, loss_db_per_km, relay_split)

    def axis(ch: ChannelParams) -> np.ndarray:
        cap = min(g_max(ch.transmittance, ch.excess_noise), GAIN_SEARCH_CAP)
        n = int(math.floor((cap - 1.0) / gain_step + 1e-12)) + 1
        return 1.0 + gain_step * np.arange(n)

    best = (1.0, 1.0, -math.inf)
    for g1 in axis(spec0.channel_alice):
        for g2 in axis(spec0.channel_bob):
            res = key_rate(replace(spec0, nla=NlaConfig(float(g1), float(g2))))
            k = res.key_rate_effective if res.physical else 0.0
            if k > best[2]:
                best = (float(g1), float(g2), k)
    return best


def format_csv_value(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if x is None:
        return ""
    return f"{x:.9g}"


def rows_to_csv(curves: dict[str, list[SweepRow]], relay: bool) -> str:
    """Render sweep rows as CSV with 9 significant digits.

    Single-curve sweeps omit the curve column; relay sweeps add the per-arm
    lengths.  Rows are newline-terminated and ordered by curve then distance.
    """
    buf = io.StringIO()
    multi = len(curves) > 1
    cols = ["distance_km"]
    if relay:
        cols += ["l_ac_km", "l_bc_km"]
    cols += ["key_rate_raw", "key_rate_effective", "p_total", "physical"]
    if multi:
        cols = ["curve"] + cols
    buf.write(",".join(cols) + "\n")
    for label, rows in curves.items():
        for r in rows:
            vals = [r.distance_km]
            if relay:
                vals += [r.l_ac_km, r.l_bc_km]
            vals += [r.key_rate_raw, r.key_rate_effective, r.p_total, r.physical]
            rendered = [format_csv_value(v) for v in vals]
            if multi:
                rendered = [label] + rendered
            buf.write(",".join(rendered) + "\n")
    return buf.getvalue()
