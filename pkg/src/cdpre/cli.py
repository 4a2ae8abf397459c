"""Command-line front end.

Every subcommand takes its settings as flags and/or a JSON file
(``--config``); flags win over the file, the file wins over built-in
defaults.  Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 a check failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from . import analysis, estimate, fixtures, osss
from .env import ConstraintDist
from .lattice import block_geometry
from .output import csv_text, emit, json_text, read_csv, stamp
from .replicates import default_threads

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "theta": dict(model="bernoulli", rho="0,0,0,1", t=0.5, n="1,2,4,8", reps=1000, pad=None, seed=0),
    "dominance": dict(rho="0,0,0,1", t="0.3,0.6,0.9", n=16, reps=1000, seed=0, allow_rho0=False),
    "oracle-check": dict(t="0.2,0.5,0.8", reps=100_000, seed=0),
    "mzone": dict(m=7, t=1.0, reps=10_000, seed=0),
    "covariance": dict(m=6, n=16, w="12,0", t=0.45, reps=2000, model="cdpre", rho="0,0,0,1", pad=8, seed=0),
    "susceptibility": dict(model="bernoulli", rho="0,0,0,1", t=0.3, n=8, reps=1000, pad=None, seed=0),
    "reveal": dict(t=0.45, n=8, reps=1000, seed=0),
    "influence": dict(t=0.45, n=8, reps=1000, resamples=1, seed=0),
    "osss": dict(t=0.45, n=8, k="4", reps=1000, seed=0),
    "scan": dict(model="bernoulli", rho="0,0,0,1", n=64, t_grid="0.40,0.45,0.50,0.55,0.60,0.65,0.70",
                 reps=400, pad=None, seed=0),
    "blocks": dict(r="0", s="0"),
    "fit": dict(input=None, family="pure_exponential", epsilon=0.0, range=None),
}


def _ints(x) -> list[int]:
    if isinstance(x, (list, tuple)):
        return [int(v) for v in x]
    if isinstance(x, int):
        return [x]
    return [int(v) for v in str(x).split(",") if v.strip()]


def _floats(x) -> list[float]:
    if isinstance(x, (list, tuple)):
        return [float(v) for v in x]
    if isinstance(x, (int, float)):
        return [float(x)]
    return [float(v) for v in str(x).split(",") if v.strip()]


def _rho(x) -> ConstraintDist:
    if isinstance(x, (list, tuple)):
        return ConstraintDist(tuple(x))
    return ConstraintDist.parse(str(x))


def _positive(cfg, key):
    if int(cfg[key]) < 1:
        raise ConfigError(f"{key} must be at least 1")
    return int(cfg[key])


def _model(cfg):
    if cfg["model"] not in ("cdpre", "intermediate", "bernoulli"):
        raise ConfigError(f"unknown model {cfg['model']!r}")
    return cfg["model"], (_rho(cfg["rho"]) if cfg["model"] == "cdpre" else None)


# ---------------------------------------------------------------------------
# subcommands: each returns (text, exit code)


def cmd_theta(cfg):
    model, dist = _model(cfg)
    n_list = _ints(cfg["n"])
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigError("n list must be strictly increasing")
    tab = estimate.theta_table(model, dist, float(cfg["t"]), n_list, _positive(cfg, "reps"),
                               cfg["pad"], int(cfg["seed"]), cfg["threads"])
    return csv_text(tab.records(), stamp(cfg)), EXIT_OK


def cmd_dominance(cfg):
    dist = _rho(cfg["rho"])
    if dist.rho0 > 0 and not cfg["allow_rho0"]:
        raise ConfigError("rho_0 > 0 breaks the cdpre <= intermediate link; pass --allow-rho0 to run anyway")
    reports = estimate.dominance_check(dist, int(cfg["n"]), _floats(cfg["t"]), _positive(cfg, "reps"),
                                       int(cfg["seed"]), cfg["threads"], bool(cfg["allow_rho0"]))
    code = EXIT_OK if all(r.violations == 0 for r in reports) else EXIT_CHECK
    return csv_text([r.record() for r in reports], stamp(cfg)), code


def cmd_oracle_check(cfg):
    rows = fixtures.oracle_check(_floats(cfg["t"]), _positive(cfg, "reps"), int(cfg["seed"]))
    code = EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK
    return csv_text([r.record() for r in rows], stamp(cfg)), code


def cmd_mzone(cfg):
    est = analysis.mzone_escape_frequency(_positive(cfg, "m"), float(cfg["t"]), _positive(cfg, "reps"),
                                          int(cfg["seed"]), cfg["threads"])
    return csv_text([est.row()], stamp(cfg)), EXIT_OK


def cmd_covariance(cfg):
    model = cfg["model"]
    dist = _rho(cfg["rho"]) if model == "cdpre" else None
    est = analysis.covariance_pair(int(cfg["m"]), int(cfg["n"]), tuple(_ints(cfg["w"])), float(cfg["t"]),
                                   _positive(cfg, "reps"), int(cfg["seed"]), model, dist,
                                   int(cfg["pad"]), cfg["threads"])
    return csv_text([est.row()], stamp(cfg)), EXIT_OK


def cmd_susceptibility(cfg):
    model, dist = _model(cfg)
    est = estimate.susceptibility(model, dist, float(cfg["t"]), _positive(cfg, "n"), _positive(cfg, "reps"),
                                  int(cfg["seed"]), cfg["pad"], cfg["threads"])
    return csv_text([asdict(est)], stamp(cfg)), EXIT_OK


def cmd_reveal(cfg):
    rep = osss.revealment_table(float(cfg["t"]), _positive(cfg, "n"), _positive(cfg, "reps"),
                                int(cfg["seed"]), cfg["threads"])
    meta = {**stamp(cfg), "s_n": repr(rep.s_n), "mismatches": rep.mismatches}
    return csv_text(rep.records(), meta), EXIT_OK if rep.mismatches == 0 else EXIT_CHECK


def cmd_influence(cfg):
    rep = osss.influence_table(float(cfg["t"]), _positive(cfg, "n"), _positive(cfg, "reps"),
                               _positive(cfg, "resamples"), int(cfg["seed"]), cfg["threads"])
    return csv_text(rep.records(), stamp(cfg)), EXIT_OK


def cmd_osss(cfg):
    n = _positive(cfg, "n")
    ks = _ints(cfg["k"]) if cfg["k"] not in (None, "", "all") else None
    if ks and any(not 1 <= k <= n for k in ks):
        raise ConfigError("every k must satisfy 1 <= k <= n")
    checks = osss.osss_check(float(cfg["t"]), n, _positive(cfg, "reps"), int(cfg["seed"]), ks, cfg["threads"])
    payload = {"checks": {str(k): c.as_dict() for k, c in sorted(checks.items())}}
    code = EXIT_OK if all(c.holds for c in checks.values()) else EXIT_CHECK
    return json_text(payload, stamp(cfg)), code


def cmd_scan(cfg):
    model, dist = _model(cfg)
    res = estimate.threshold_scan(model, dist, _positive(cfg, "n"), _floats(cfg["t_grid"]),
                                  _positive(cfg, "reps"), int(cfg["seed"]), cfg["pad"], cfg["threads"])
    meta = {**stamp(cfg), "crossing": repr(res.crossing)}
    return csv_text(res.records(), meta), EXIT_OK


def cmd_blocks(cfg):
    blocks = [block_geometry(r, s).as_dict() for r in _ints(cfg["r"]) for s in _ints(cfg["s"])]
    return json_text({"blocks": blocks}, stamp(cfg)), EXIT_OK


def cmd_fit(cfg):
    if not cfg["input"]:
        raise ConfigError("fit needs --input, a theta CSV")
    rows = read_csv(cfg["input"])
    if not rows:
        raise ConfigError("input table is empty")
    table = estimate.ThetaTable(
        rows[0]["model"], float(rows[0]["t"]),
        tuple(
            estimate.ThetaRow(int(r["n"]), float(r["theta_hat"]), float(r["stderr"]),
                              int(r["replicates"]), int(r["pad"]), float(r["theta_hat"]))
            for r in rows
        ),
    )
    rng = tuple(_ints(cfg["range"])) if cfg["range"] else None
    fit = estimate.decay_fit(table, cfg["family"], float(cfg["epsilon"]), rng)
    return json_text({"fit": asdict(fit)}, stamp(cfg)), EXIT_OK


COMMANDS = {
    "theta": cmd_theta, "dominance": cmd_dominance, "oracle-check": cmd_oracle_check,
    "mzone": cmd_mzone, "covariance": cmd_covariance, "susceptibility": cmd_susceptibility,
    "reveal": cmd_reveal, "influence": cmd_influence, "osss": cmd_osss, "scan": cmd_scan,
    "blocks": cmd_blocks, "fit": cmd_fit,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdpre", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with settings (flags override it)")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--threads", type=int)
        for key, val in defaults.items():
            flag = "--" + key.replace("_", "-")
            if key == "reps":
                sp.add_argument(flag, "--replicates", dest=key)
            elif isinstance(val, bool):
                sp.add_argument(flag, dest=key, action="store_const", const=True)
            else:
                sp.add_argument(flag, dest=key)
    return p


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        unknown = set(from_file) - set(cfg) - {"out", "threads"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(from_file)
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            cfg[key] = val
    for key in ("pad",):
        if key in cfg and cfg[key] not in (None, ""):
            cfg[key] = int(cfg[key])
    cfg.setdefault("out", None)
    cfg["threads"] = int(cfg.get("threads") or default_threads())
    cfg["command"] = args.command
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        text, code = COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"cdpre {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"cdpre {args.command}: runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME
    emit(text, cfg["out"])
    return code


if __name__ == "__main__":
    sys.exit(main())
