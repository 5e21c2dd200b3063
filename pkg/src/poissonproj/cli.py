"""Command-line driver: simulate, fit, benchmark, bands, rates.

Exit codes: 0 success, 2 usage or validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Dict, Optional

import numpy as np

from .basis import BasisFamily, default_collection
from .bench import (
    DEFAULT_SEED,
    BenchmarkConfig,
    quantile_bands,
    rate_study,
    run_benchmark,
)
from .sampler import (
    CovariateKind,
    CovariateProcessSpec,
    Sample,
    intensity_from_id,
    simulate_dataset,
)
from .selection import PenaltySpec, PenaltyVariant, select_model


class UsageError(Exception):
    """Bad flags, config or input data (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


FAMILIES = {"trig": BasisFamily.TRIGONOMETRIC, "hist": BasisFamily.DYADIC_HISTOGRAM}

# key -> converter; every config key must appear here
CONFIG_KEYS = {
    "n": int,
    "replicates": int,
    "design": str,
    "ar_coefficient": float,
    "noise_sd": float,
    "intensity": str,
    "family": str,
    "penalty": str,
    "xi": float,
    "kappa": float,
    "cells": int,
    "strict_partition": lambda v: _parse_bool(v),
    "log_base": lambda v: math.e if str(v).strip() == "e" else float(v),
    "seed": int,
    "panels": int,
    "models": lambda v: _parse_int_list(v),
    "grid": int,
    "ns": lambda v: _parse_int_list(v),
    "oracle": lambda v: _parse_bool(v),
    "threads": int,
    "out": str,
}

BENCH_DEFAULTS = {
    "replicates": 500,
    "design": "iid",
    "intensity": "paper",
    "family": "hist",
    "penalty": "practical",
    "xi": 10.0,
    "kappa": 0.09,
    "log_base": 2.0,
    "seed": DEFAULT_SEED,
    "panels": 4096,
}


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_int_list(value):
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in str(value).replace(" ", "").split(",") if v)


def load_config(path: str) -> Dict[str, object]:
    """Read a flat ``key = value`` file (``#`` comments) or a JSON object."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid JSON config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("JSON config must be an object")
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in raw:
                raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value
    return _convert(raw)


def _convert(raw: Dict[str, object]) -> Dict[str, object]:
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for key, value in raw.items():
        if value is None:
            continue
        try:
            out[key] = CONFIG_KEYS[key](value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key}: {value!r} ({exc})") from None
    return out


def _covariates(opts) -> CovariateProcessSpec:
    kw = {}
    if opts.get("ar_coefficient") is not None:
        kw["ar_coefficient"] = opts["ar_coefficient"]
    if opts.get("noise_sd") is not None:
        kw["noise_sd"] = opts["noise_sd"]
    try:
        return CovariateProcessSpec(CovariateKind(opts.get("design", "iid")), **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _family(name) -> BasisFamily:
    if name not in FAMILIES:
        raise UsageError(f"unknown family {name!r} (expected trig or hist)")
    return FAMILIES[name]


def _penalty(opts) -> PenaltySpec:
    try:
        variant = PenaltyVariant(opts.get("penalty"))
    except ValueError:
        raise UsageError(f"unknown penalty {opts.get('penalty')!r}") from None
    fields = {
        PenaltyVariant.KNOWN_XI: ("xi",),
        PenaltyVariant.PLUGIN: ("cells", "strict_partition"),
        PenaltyVariant.DEPENDENT: ("cells", "strict_partition"),
        PenaltyVariant.PRACTICAL: ("xi", "kappa", "log_base"),
    }[variant]
    kw = {k: opts[k] for k in fields if opts.get(k) is not None}
    try:
        return PenaltySpec(variant, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write(path: Optional[str], text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _collect(args, keys) -> Dict[str, object]:
    opts = load_config(args.config) if getattr(args, "config", None) else {}
    inline = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    opts.update(_convert(inline))
    return opts


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    try:
        truth = intensity_from_id(args.intensity)
        if not 0 <= args.seed < 2**64:
            raise ValueError("--seed must be a 64-bit unsigned integer")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    spec = _covariates(vars(args))
    sample = simulate_dataset(truth, spec, args.n, args.seed)
    lines = ["x,y"]
    lines += [f"{format(float(x), '.17g')},{int(y)}" for x, y in zip(sample.xs, sample.ys)]
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def read_dataset(path: str) -> Sample:
    """Parse an ``x,y`` CSV written by ``simulate`` (header required)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["x", "y"]:
        raise UsageError(f"{path}: expected header 'x,y'")
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != 2:
            raise UsageError(f"{path}:{lineno}: expected two columns")
        try:
            x = float(row[0])
            y = float(row[1])
        except ValueError:
            raise UsageError(f"{path}:{lineno}: non-numeric value") from None
        if y != int(y):
            raise UsageError(f"{path}:{lineno}: y must be an integer")
        xs.append(x)
        ys.append(int(y))
    if not xs:
        raise UsageError(f"{path}: no observations")
    try:
        return Sample(np.array(xs), np.array(ys, dtype=np.int64))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_fit(args) -> int:
    sample = read_dataset(args.data)
    opts = _convert(
        {
            k: getattr(args, k)
            for k in ("penalty", "xi", "kappa", "cells", "strict_partition", "log_base")
            if getattr(args, k) is not None
        }
    )
    spec = _penalty(opts)
    family = _family(args.family)
    collection = default_collection(family, sample.n)
    try:
        result = select_model(sample, collection, spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = {
        "n": sample.n,
        "family": family.value,
        "penalty": spec.variant.value,
        "chosen_index": result.chosen_index,
        "chosen_dimension": result.chosen_dimension,
        "coefficients": [float(c) for c in result.estimate.coefficients],
        "mu_hat": result.mu_hat,
        "table": [row.__dict__ for row in result.table],
    }
    _write(args.out, json.dumps(report, indent=2) + "\n")
    return 0


def _bench_config(opts) -> BenchmarkConfig:
    merged = {**BENCH_DEFAULTS, **opts}
    if "n" not in merged:
        raise UsageError("n is required (--n or config key)")
    penalty_opts = dict(merged)
    if merged["penalty"] != "practical":
        # paper defaults only apply to the practical penalty
        for key in ("xi", "kappa", "log_base"):
            if key not in opts:
                penalty_opts.pop(key, None)
    try:
        return BenchmarkConfig(
            n=merged["n"],
            replicates=merged["replicates"],
            covariates=_covariates(merged),
            intensity=merged["intensity"],
            family=_family(merged["family"]),
            penalty=_penalty(penalty_opts),
            master_seed=merged["seed"],
            panels=merged["panels"],
            model_indices=merged.get("models"),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _threads(opts) -> Optional[int]:
    threads = opts.get("threads")
    if threads is not None and threads < 1:
        raise UsageError("--threads must be >= 1")
    return threads


BENCH_FLAGS = (
    "n", "replicates", "design", "ar_coefficient", "noise_sd", "intensity", "family",
    "penalty", "xi", "kappa", "cells", "strict_partition", "log_base", "seed", "panels",
    "models", "threads", "out",
)


def cmd_benchmark(args) -> int:
    opts = _collect(args, BENCH_FLAGS)
    opts.pop("grid", None)
    config = _bench_config({k: v for k, v in opts.items() if k not in ("threads", "out", "ns", "oracle")})
    report = run_benchmark(config, _threads(opts))
    _write(opts.get("out"), report.to_json())
    return 0


def cmd_bands(args) -> int:
    opts = _collect(args, BENCH_FLAGS + ("grid",))
    opts.setdefault("replicates", 100)
    grid = opts.get("grid", 513)
    config = _bench_config({k: v for k, v in opts.items() if k not in ("threads", "out", "grid", "ns", "oracle")})
    try:
        band = quantile_bands(config, grid, _threads(opts))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(opts.get("out"), band.to_csv())
    return 0


def cmd_rates(args) -> int:
    opts = _collect(args, BENCH_FLAGS + ("ns", "oracle"))
    ns = opts.get("ns")
    if not ns:
        raise UsageError("ns is required (--ns or config key)")
    opts.setdefault("replicates", 200)
    base = {k: v for k, v in opts.items() if k not in ("threads", "out", "ns", "oracle")}
    base["n"] = ns[0]
    config = _bench_config(base)
    try:
        study = rate_study(
            config.family,
            config.intensity,
            ns,
            config.replicates,
            config.penalty,
            oracle=bool(opts.get("oracle", False)),
            model_indices=config.model_indices,
            covariates=config.covariates,
            master_seed=config.master_seed,
            workers=_threads(opts),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(opts.get("out"), study.to_json())
    return 0


def _add_bench_flags(p, bands=False, rates=False):
    p.add_argument("--config", help="key = value file or JSON object")
    p.add_argument("--n", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--design", choices=["iid", "mixing"])
    p.add_argument("--ar-coefficient", dest="ar_coefficient", type=float)
    p.add_argument("--noise-sd", dest="noise_sd", type=float)
    p.add_argument("--intensity", help="paper, smooth or const:<c>")
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("--penalty", choices=[v.value for v in PenaltyVariant])
    p.add_argument("--xi", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--cells", type=int)
    p.add_argument("--strict-partition", dest="strict_partition", action="store_const", const=True)
    p.add_argument("--log-base", dest="log_base")
    p.add_argument("--seed", type=int)
    p.add_argument("--panels", type=int)
    p.add_argument("--models", help="comma-separated model indices")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    if bands:
        p.add_argument("--grid", type=int)
    if rates:
        p.add_argument("--ns", help="comma-separated sample sizes")
        p.add_argument("--oracle", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="poissonproj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a simulated x,y dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--design", choices=["iid", "mixing"], default="iid")
    p.add_argument("--ar-coefficient", dest="ar_coefficient", type=float)
    p.add_argument("--noise-sd", dest="noise_sd", type=float)
    p.add_argument("--intensity", default="paper")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="select a model for an x,y dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--family", choices=sorted(FAMILIES), default="hist")
    p.add_argument("--penalty", choices=[v.value for v in PenaltyVariant], required=True)
    p.add_argument("--xi", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--cells", type=int)
    p.add_argument("--strict-partition", dest="strict_partition", action="store_const", const=True)
    p.add_argument("--log-base", dest="log_base")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("benchmark", help="Monte Carlo error table cell (JSON)")
    _add_bench_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("bands", help="pointwise quantile bands (CSV)")
    _add_bench_flags(p, bands=True)
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("rates", help="empirical rate of convergence (JSON)")
    _add_bench_flags(p, rates=True)
    p.set_defaults(func=cmd_rates)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"poissonproj: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"poissonproj: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
