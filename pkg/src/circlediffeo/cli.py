"""Command-line driver: construct, certify, dimension, lemmas, rho-table."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import circle_maps as cm
from .certify import build_certificate, geometry_report, lemma_oracles
from .construction import (
    DEFAULT_CAP,
    DEFAULT_SAFETY,
    RELAXED,
    STRICT,
    ConstructionState,
    LemmaConstants,
    build,
    estimate_constants,
)
from .errors import (
    BudgetExceededError,
    DepthExhaustedError,
    EnclosureTooWideError,
    EpsilonBelowResolutionError,
    IndeterminatePrecisionError,
    MalformedCertificateError,
    OverflowGuardError,
    ScheduleInfeasibleError,
    TruncationInsufficientError,
)
from .measure import (
    calibration_measure,
    certificate_family,
    family_mass,
    lower_box_dimension,
    pushforward_lebesgue,
)
from .number_theory import alpha_from_config

log = logging.getLogger("circlediffeo")

EXIT_OK, EXIT_CHECKS, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2, 3

# "could not compute" -> exit 2
COMPUTE_ERRORS = (
    ScheduleInfeasibleError, DepthExhaustedError, OverflowGuardError, BudgetExceededError,
    EnclosureTooWideError, EpsilonBelowResolutionError, TruncationInsufficientError,
    IndeterminatePrecisionError,
)


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    alpha: dict
    r: int = 1
    mode: str = RELAXED
    stages: int = 1
    q_overrides: Optional[list] = None
    grid: int = 1024
    bins: int = 2 ** 16
    epsilons: Optional[list] = None
    mass_thresholds: list = field(default_factory=lambda: [0.9])
    seed: int = 0
    cap: Optional[int] = DEFAULT_CAP
    safety: float = DEFAULT_SAFETY
    truncation: Optional[int] = None
    constants: object = "builtin"
    r_max: int = 4
    samples: int = 1000
    seeds: list = field(default_factory=lambda: [1, 2, 3])

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known - {"schema_version"}
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            cfg = cls(**{k: v for k, v in d.items() if k in known})
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def validate(self):
        def need(ok, msg):
            if not ok:
                raise ConfigError(msg)

        need(isinstance(self.alpha, dict), "alpha must be an object")
        try:
            alpha_from_config(self.alpha)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad alpha: {exc}") from None
        need(isinstance(self.r, int) and self.r >= 1, "r must be an integer >= 1")
        need(self.mode in (STRICT, RELAXED), "mode must be strict or relaxed")
        need(isinstance(self.stages, int) and self.stages >= 1, "stages must be >= 1")
        if self.q_overrides is not None:
            need(all(isinstance(q, int) and q >= 1 for q in self.q_overrides),
                 "q_overrides must be positive integers")
        need(isinstance(self.grid, int) and self.grid >= 16, "grid must be >= 16")
        need(isinstance(self.bins, int) and self.bins >= 4, "bins must be >= 4")
        need(all(0 < t < 1 for t in self.mass_thresholds), "mass thresholds must lie in (0, 1)")
        need(isinstance(self.r_max, int) and 0 <= self.r_max <= 8, "r_max must be in 0..8")
        need(isinstance(self.samples, int) and self.samples >= 100, "samples must be >= 100")
        need(self.cap is None or (isinstance(self.cap, int) and self.cap >= 1), "bad cap")
        need(self.safety >= 1, "safety must be >= 1")


def load_config(path) -> RunConfig:
    if path is None:
        raise ConfigError("--config is required")
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return RunConfig.from_dict(data)


def load_state(path) -> ConstructionState:
    if path is None:
        raise ConfigError("--state is required")
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return ConstructionState.from_json(data)
    except OSError as exc:
        raise ConfigError(f"cannot read state {path}: {exc}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"state {path} is malformed: {exc}") from None


def constants_for(cfg: RunConfig) -> LemmaConstants:
    c = cfg.constants
    if c == "builtin":
        return LemmaConstants.builtin()
    if c == "estimate":
        return estimate_constants(cfg.r_max, cfg.samples, seed=cfg.seed)
    if isinstance(c, (int, float)) and not isinstance(c, bool):
        # one value for every constant and order
        table = {r: float(c) for r in range(cfg.r_max + 1)}
        return LemmaConstants(table, dict(table), dict(table))
    if isinstance(c, dict):
        try:
            if "scale" in c:
                return LemmaConstants.builtin().scaled(float(c["scale"]))
            return LemmaConstants.from_json(c)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad constants: {exc}") from None
    raise ConfigError(f"bad constants setting {c!r}")


def write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return str(o)


def _out_dir(args) -> Path:
    p = Path(args.out or ".")
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# commands

def cmd_construct(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    alpha = alpha_from_config(cfg.alpha)
    state = build(alpha, cfg.r, cfg.stages, cfg.mode, cfg.q_overrides,
                  consts=constants_for(cfg), grid=cfg.grid, safety=cfg.safety, cap=cfg.cap)
    write_json(out / "state.json", state.to_json())
    with open(out / "contraction.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "measured", "bound", "pass"])
        for e in state.contraction_log:
            w.writerow([e["n"], repr(float(e["measured"])), repr(float(e["bound"])),
                        str(bool(e["pass"])).lower()])
    log.info("built %d stage(s) into %s", state.depth, out)
    return EXIT_OK


def cmd_certify(args) -> int:
    state = load_state(args.state)
    out = _out_dir(args)
    n = args.stage
    cert = build_certificate(state, n, truncation=args.truncation)
    geo = geometry_report(state, n, cert)
    write_json(out / f"certificate_{n}.json", cert.to_json())
    write_json(out / f"geometry_{n}.json", geo.to_json())
    log.info("certificate for n=%d: %s", n, cert.flags)
    return EXIT_OK


def cmd_dimension(args) -> int:
    out = _out_dir(args)
    cfg = load_config(args.config) if args.config else None
    bins = args.bins or (cfg.bins if cfg else 2 ** 16)
    thresholds = cfg.mass_thresholds if cfg else [0.9]
    epsilons = cfg.epsilons if cfg else None
    if args.calibration:
        mu = calibration_measure(args.calibration, bins)
        tag = args.calibration
        state = None
    else:
        state = load_state(args.state)
        n = args.stage
        mu = pushforward_lebesgue(state.H(n), bins)
        tag = str(n)
    ests = [lower_box_dimension(mu, t, epsilons) for t in thresholds]
    mu.to_csv(out / f"measure_{tag}.csv")
    write_json(out / f"dimension_{tag}.json", {
        "schema_version": 1,
        "measure": "calibration:" + args.calibration if args.calibration else f"mu_f_{tag}",
        "bins": bins,
        "estimates": [e.to_json() for e in ests],
    })
    if state is not None:
        n = args.stage
        cert = build_certificate(state, n)
        target = 1.0 - 2.0 ** -n
        record = {"schema_version": 1, "n": n, "target": target,
                  "flags": {k: cert.flags.get(k) for k in ("a", "b", "c", "d", "e")}}
        try:
            m = family_mass(mu, certificate_family(cert))
            record.update(family_valid=True, mass=m, meets_target=bool(m >= target))
        except MalformedCertificateError as exc:
            record.update(family_valid=False, mass=None, meets_target=None, reason=str(exc))
        record["applicable"] = cert.flags.get("d") == "pass" and cert.flags.get("e") == "pass"
        write_json(out / f"mass_I{n}.json", record)
    return EXIT_OK


def cmd_lemmas(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    consts = constants_for(cfg)
    seeds = [args.seed] if args.seed is not None else list(cfg.seeds)
    reports = [lemma_oracles(consts, cfg.r_max, cfg.samples, seed=s, grid=cfg.grid)
               for s in seeds]
    total = sum(r["violations"] for r in reports)
    write_json(out / "constants.json", {"schema_version": 1, **consts.to_json()})
    write_json(out / "lemma_report.json", {"schema_version": 1, "violations": total,
                                           "runs": reports})
    log.info("lemma oracles: %d violation(s)", total)
    return EXIT_OK if total == 0 else EXIT_CHECKS


def cmd_rho_table(args) -> int:
    out = Path(args.out or "rho_table.csv")
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "rho_table.csv"
    lo, hi, count = args.a_min, args.a_max, args.count
    if not (0 < lo < hi < 1) or count < 2:
        raise ConfigError("need 0 < a_min < a_max < 1 and count >= 2")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "rho"])
        for a in np.linspace(lo, hi, count):
            w.writerow([repr(float(a)), repr(float(cm.rho(float(a))))])
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circlediffeo",
                                description="Circle diffeomorphisms by conjugation of rotations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build construction stages")
    c.add_argument("--config", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    c = sub.add_parser("certify", help="certificate and interval geometry for stage n")
    c.add_argument("--state", required=True)
    c.add_argument("--stage", type=int, required=True)
    c.add_argument("--truncation", type=int, default=None)
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    c = sub.add_parser("dimension", help="invariant-measure histogram and dimension estimate")
    c.add_argument("--state")
    c.add_argument("--stage", type=int)
    c.add_argument("--config")
    c.add_argument("--bins", type=int)
    c.add_argument("--calibration", choices=["uniform", "atomic", "cantor"])
    c.add_argument("--out")
    c.set_defaults(func=cmd_dimension)

    c = sub.add_parser("lemmas", help="sampled lemma inequality oracles")
    c.add_argument("--config", required=True)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_lemmas)

    c = sub.add_parser("rho-table", help="CSV of (a, rho(a))")
    c.add_argument("--out")
    c.add_argument("--a-min", type=float, default=0.5)
    c.add_argument("--a-max", type=float, default=0.999)
    c.add_argument("--count", type=int, default=100)
    c.set_defaults(func=cmd_rho_table)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "dimension" and not args.calibration:
        if args.state is None or args.stage is None:
            print("error: dimension needs --state and --stage (or --calibration)",
                  file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OverflowGuardError as exc:
        print(f"error: overflow guard, N={exc.N}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except COMPUTE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except MalformedCertificateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        # parameter outside its documented range
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
