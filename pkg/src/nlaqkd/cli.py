"""Command-line front end.

Subcommands: `rate` (single point), `sweep` (distance grid to CSV, optionally
rendered to a figure), `max-distance` (largest reach with positive rate) and
`optimize` (gain grid search).  Runs are configured by a line-oriented
`key = value` text file (`#` comments allowed, unknown keys rejected) and/or
a `--figure` preset; explicit config keys override preset values.

Exit codes: 0 success, 2 configuration error, 3 output I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .gaussian import ChannelParams
from .nla import NlaConfig, g_max
from .protocols import (
    DIRECT,
    EIM,
    HETERODYNE,
    HOMODYNE,
    RELAY,
    REVERSE,
    ProtocolSpec,
    key_rate,
)
from .sweep import (
    DEFAULT_LOSS_DB_PER_KM,
    DistanceGrid,
    max_distance,
    optimize_gain,
    rows_to_csv,
    spec_at_distance,
    sweep,
)

CURVE_LABELS = ("no_nla", "nla_alice", "nla_bob", "nla_both")


class ConfigError(Exception):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_curves(s: str) -> tuple[str, ...]:
    if not s.strip():
        return ()
    labels = tuple(t.strip() for t in s.split(","))
    for lab in labels:
        if lab not in CURVE_LABELS:
            raise ValueError(f"unknown curve {lab!r}; choose from {', '.join(CURVE_LABELS)}")
    return labels


_CHOICE_KEYS = {
    "protocol": ("eim", "relay"),
    "detection_alice": (HOMODYNE, HETERODYNE),
    "detection_bob": (HOMODYNE, HETERODYNE),
    "reconciliation": (DIRECT, REVERSE),
}

_FLOAT_KEYS = (
    "v",
    "v_bob",
    "beta",
    "excess_noise",
    "excess_noise_alice",
    "excess_noise_bob",
    "transmittance_alice",
    "transmittance_bob",
    "g1",
    "g2",
    "nla_gain",
    "relay_gain_alice",
    "relay_gain_bob",
    "relay_split",
    "distance_km",
    "start_km",
    "stop_km",
    "step_km",
    "loss_db_per_km",
    "gain_step",
    "tol_km",
)

_STRING_KEYS = ("output",)

DEFAULTS = {
    "protocol": "eim",
    "detection_alice": HETERODYNE,
    "detection_bob": HOMODYNE,
    "reconciliation": DIRECT,
    "v": 1.7,
    "beta": 0.948,
    "excess_noise": 0.002,
    "g1": 1.0,
    "g2": 1.0,
    "loss_db_per_km": DEFAULT_LOSS_DB_PER_KM,
    "relay_split": 0.5,
    "gain_step": 0.05,
    "tol_km": 0.05,
}

PRESETS = {
    "fig4-left": {
        "protocol": "eim", "detection_alice": HOMODYNE, "detection_bob": HOMODYNE,
        "reconciliation": DIRECT, "start_km": 0.0, "stop_km": 40.0, "step_km": 0.25,
        "nla_gain": 1.4, "curves": CURVE_LABELS,
    },
    "fig4-right": {
        "protocol": "eim", "detection_alice": HETERODYNE, "detection_bob": HOMODYNE,
        "reconciliation": DIRECT, "start_km": 0.0, "stop_km": 40.0, "step_km": 0.25,
        "nla_gain": 1.4, "curves": CURVE_LABELS,
    },
    "fig5-left": {
        "protocol": "eim", "detection_alice": HOMODYNE, "detection_bob": HETERODYNE,
        "reconciliation": DIRECT, "start_km": 0.0, "stop_km": 40.0, "step_km": 0.25,
        "nla_gain": 1.4, "curves": CURVE_LABELS,
    },
    "fig5-right": {
        "protocol": "eim", "detection_alice": HETERODYNE, "detection_bob": HETERODYNE,
        "reconciliation": DIRECT, "start_km": 0.0, "stop_km": 40.0, "step_km": 0.25,
        "nla_gain": 1.4, "curves": CURVE_LABELS,
    },
    "fig7-a": {
        "protocol": "relay", "detection_alice": HETERODYNE, "detection_bob": HETERODYNE,
        "reconciliation": DIRECT, "relay_split": 0.5, "start_km": 0.0, "stop_km": 8.0,
        "step_km": 0.05, "nla_gain": 1.8, "curves": CURVE_LABELS,
    },
    "fig7-b": {
        "protocol": "relay", "detection_alice": HETERODYNE, "detection_bob": HETERODYNE,
        "reconciliation": DIRECT, "relay_split": 0.0, "start_km": 0.0, "stop_km": 30.0,
        "step_km": 0.25, "nla_gain": 1.8, "curves": CURVE_LABELS,
    },
}


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines; raises ConfigError with the offending line."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _CHOICE_KEYS:
                if value not in _CHOICE_KEYS[key]:
                    raise ValueError(f"must be one of {', '.join(_CHOICE_KEYS[key])}")
                cfg[key] = value
            elif key in _FLOAT_KEYS:
                cfg[key] = float(value)
            elif key in _STRING_KEYS:
                cfg[key] = value
            elif key == "curves":
                cfg[key] = _parse_curves(value)
            else:
                raise ValueError("unknown key")
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    return cfg


def dump_config(cfg: dict) -> str:
    lines = []
    for key in sorted(cfg):
        value = cfg[key]
        if key == "curves":
            value = ",".join(value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def effective_config(args) -> dict:
    cfg = dict(DEFAULTS)
    figure = getattr(args, "figure", None)
    if figure:
        cfg.update(PRESETS[figure])
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        cfg.update(parse_config_text(text))
    if getattr(args, "output", None):
        cfg["output"] = args.output
    return cfg


def _channels(cfg: dict) -> tuple[float, float]:
    e1 = cfg.get("excess_noise_alice", cfg["excess_noise"])
    e2 = cfg.get("excess_noise_bob", cfg["excess_noise"])
    return e1, e2


def build_spec(cfg: dict, t1: float, t2: float, nla: NlaConfig) -> ProtocolSpec:
    e1, e2 = _channels(cfg)
    kind = EIM if cfg["protocol"] == "eim" else RELAY
    relay_gains = None
    if "relay_gain_alice" in cfg or "relay_gain_bob" in cfg:
        if not ("relay_gain_alice" in cfg and "relay_gain_bob" in cfg):
            raise ConfigError("relay_gain_alice and relay_gain_bob must be given together")
        relay_gains = (cfg["relay_gain_alice"], cfg["relay_gain_bob"])
    try:
        return ProtocolSpec(
            kind=kind,
            channel_alice=ChannelParams(t1, e1),
            channel_bob=ChannelParams(t2, e2),
            v_alice=cfg["v"],
            v_bob=cfg.get("v_bob"),
            detection_alice=cfg["detection_alice"],
            detection_bob=cfg["detection_bob"],
            reconciliation=cfg["reconciliation"],
            beta=cfg["beta"],
            nla=nla,
            relay_gains=relay_gains,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def template_spec(cfg: dict, nla: NlaConfig) -> ProtocolSpec:
    """Spec with unit transmittance; sweeps fill the per-distance channels."""
    return build_spec(cfg, 1.0, 1.0, nla)


def _nla_from_cfg(cfg: dict) -> NlaConfig:
    try:
        return NlaConfig(cfg["g1"], cfg["g2"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _curve_gains(label: str, g: float) -> NlaConfig:
    return {
        "no_nla": NlaConfig(1.0, 1.0),
        "nla_alice": NlaConfig(g, 1.0),
        "nla_bob": NlaConfig(1.0, g),
        "nla_both": NlaConfig(g, g),
    }[label]


def write_output(text: str, path: str | None) -> None:
    """Write to stdout, or atomically to `path` (exit code 3 on failure)."""
    if path is None:
        sys.stdout.write(text)
        return
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _require(cfg: dict, keys, what: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"{what} requires config keys: {', '.join(missing)}")


def cmd_rate(args) -> int:
    cfg = effective_config(args)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    nla = _nla_from_cfg(cfg)
    if "transmittance_alice" in cfg or "transmittance_bob" in cfg:
        _require(cfg, ["transmittance_alice", "transmittance_bob"], "rate with explicit channels")
        spec = build_spec(cfg, cfg["transmittance_alice"], cfg["transmittance_bob"], nla)
    else:
        _require(cfg, ["distance_km"], "rate")
        template = template_spec(cfg, nla)
        spec = spec_at_distance(template, cfg["distance_km"], cfg["loss_db_per_km"], cfg["relay_split"])
    res = key_rate(spec)
    out = [
        f"I_AB_bits           = {res.mutual_info:.9g}",
        f"holevo_bits         = {res.holevo:.9g}",
        f"key_rate_raw        = {res.key_rate_raw:.9g}",
        f"p_total             = {res.p_total:.9g}",
        f"key_rate_effective  = {res.key_rate_effective:.9g}",
        f"physical            = {'true' if res.physical else 'false'}",
    ]
    if res.relay_gains is not None:
        out.append(f"relay_gain_alice    = {res.relay_gains[0]:.9g}")
        out.append(f"relay_gain_bob      = {res.relay_gains[1]:.9g}")
    print("\n".join(out))
    return 0


def cmd_sweep(args) -> int:
    cfg = effective_config(args)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    _require(cfg, ["start_km", "stop_km", "step_km"], "sweep")
    grid = _grid_from_cfg(cfg)
    labels = cfg.get("curves", ())
    curves: dict[str, list] = {}
    if labels:
        g = cfg.get("nla_gain")
        if g is None:
            raise ConfigError("curve sweeps need nla_gain")
        for label in labels:
            template = template_spec(cfg, _curve_gains(label, g))
            curves[label] = sweep(template, grid, cfg["relay_split"])
    else:
        template = template_spec(cfg, _nla_from_cfg(cfg))
        curves["sweep"] = sweep(template, grid, cfg["relay_split"])
    csv_text = rows_to_csv(curves, relay=cfg["protocol"] == "relay")
    write_output(csv_text, cfg.get("output"))
    if args.plot:
        from .plotting import render_sweep_plot

        render_sweep_plot(curves, args.plot, title=getattr(args, "figure", None))
    return 0


def _grid_from_cfg(cfg: dict) -> DistanceGrid:
    try:
        return DistanceGrid(cfg["start_km"], cfg["stop_km"], cfg["step_km"], cfg["loss_db_per_km"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_max_distance(args) -> int:
    cfg = effective_config(args)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    template = template_spec(cfg, _nla_from_cfg(cfg))
    res = max_distance(
        template,
        loss_db_per_km=cfg["loss_db_per_km"],
        tol_km=cfg["tol_km"],
        relay_split=cfg["relay_split"],
    )
    lines = [
        f"max_distance_km     = {res.distance_km:.9g}",
        f"positive_rate_found = {'true' if res.found else 'false'}",
        f"rate_inside         = {res.rate_inside:.9g}",
        f"rate_outside        = {res.rate_outside:.9g}",
    ]
    print("\n".join(lines))
    return 0


def cmd_optimize(args) -> int:
    cfg = effective_config(args)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    _require(cfg, ["distance_km"], "optimize")
    template = template_spec(cfg, NlaConfig())
    g1, g2, k = optimize_gain(
        template,
        cfg["distance_km"],
        gain_step=cfg["gain_step"],
        loss_db_per_km=cfg["loss_db_per_km"],
        relay_split=cfg["relay_split"],
    )
    spec0 = spec_at_distance(template, cfg["distance_km"], cfg["loss_db_per_km"], cfg["relay_split"])
    gm1 = g_max(spec0.channel_alice.transmittance, spec0.channel_alice.excess_noise)
    gm2 = g_max(spec0.channel_bob.transmittance, spec0.channel_bob.excess_noise)
    print(
        "\n".join(
            [
                f"g1_opt              = {g1:.9g}",
                f"g2_opt              = {g2:.9g}",
                f"key_rate_effective  = {k:.9g}",
                f"g_max_alice         = {gm1:.9g}",
                f"g_max_bob           = {gm2:.9g}",
            ]
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlaqkd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, figure=False, plot=False):
        sp.add_argument("--config", metavar="PATH", help="key = value config file")
        sp.add_argument("--output", metavar="PATH", help="write result here instead of stdout")
        sp.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
        if figure:
            sp.add_argument("--figure", choices=sorted(PRESETS), help="preset reproducing one published panel")
        if plot:
            sp.add_argument("--plot", metavar="PATH", help="also render the curves to this image file")

    sp = sub.add_parser("rate", help="single key-rate evaluation")
    common(sp)
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("sweep", help="key rate over a distance grid, as CSV")
    common(sp, figure=True, plot=True)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("max-distance", help="largest distance with positive rate")
    common(sp)
    sp.set_defaults(func=cmd_max_distance)

    sp = sub.add_parser("optimize", help="grid search over NLA gains at one distance")
    common(sp)
    sp.set_defaults(func=cmd_optimize)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
