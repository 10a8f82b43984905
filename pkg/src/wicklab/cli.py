"""Command-line front end: ``wicklab <command> [--key value ...]``.

Every command writes CSV (header row, LF endings) to stdout or to ``--out``;
with ``--out`` a JSON manifest ``<out>.manifest.json`` records the merged
configuration, package version, timestamp and output checksums.  Parameters
come from flags, then a ``key=value`` file given by ``--config``, then
defaults.  Errors print one ``error code=... key=... message=...`` line on
stderr; exit status is 0 on success, 2 for invalid input, 3 for
non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import ValidationError, WicklabError

FLOAT_FORMAT = ".16e"


def _int(lo: int | None = None, hi: int | None = None):
    def conv(key: str, raw: Any) -> int:
        try:
            v = int(raw)
        except (TypeError, ValueError):
            raise ValidationError(key, f"expected an integer, got {raw!r}") from None
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ValidationError(key, f"must lie in [{lo}, {hi}], got {v}")
        return v

    return conv


def _float(lo: float | None = None, hi: float | None = None, open_lo: bool = False, open_hi: bool = False):
    def conv(key: str, raw: Any) -> float:
        try:
            v = float(raw)
        except (TypeError, ValueError):
            raise ValidationError(key, f"expected a number, got {raw!r}") from None
        bad = not math.isfinite(v)
        if lo is not None:
            bad |= v <= lo if open_lo else v < lo
        if hi is not None:
            bad |= v >= hi if open_hi else v > hi
        if bad:
            left, right = "(" if open_lo else "[", ")" if open_hi else "]"
            raise ValidationError(key, f"must lie in {left}{lo}, {hi}{right}, got {raw}")
        return v

    return conv


def _exponent(key: str, raw: Any):
    s = str(raw).strip().lower()
    if s in ("inf", "infinity"):
        return math.inf
    if s in ("1", "2"):
        return int(s)
    raise ValidationError(key, f"must be one of 1, 2, inf, got {raw!r}")


def _int_list(lo: int, hi: int):
    def conv(key: str, raw: Any) -> tuple[int, ...]:
        parts = [p for p in str(raw).replace(" ", "").split(",") if p]
        if not parts:
            raise ValidationError(key, "expected a comma-separated list of integers")
        return tuple(_int(lo, hi)(key, p) for p in parts)

    return conv


def _text(key: str, raw: Any) -> str:
    return str(raw)


def _gamma(key: str, raw: Any) -> float:
    v = _float()(key, raw)
    if not v * v < 8 * math.pi:
        raise ValidationError(key, f"gamma^2 must be below 8 pi (|gamma| < {math.sqrt(8 * math.pi):.6g}), got {v}")
    return v


@dataclass(frozen=True)
class Param:
    default: Any
    convert: Callable[[str, Any], Any]
    help: str = ""


SEED = Param(0, _int(0, 2**63 - 1), "master seed")

COMMANDS: dict[str, dict[str, Param]] = {
    "hermite-check": {
        "kmax": Param(10, _int(0, 30), "largest degree"),
        "points": Param(61, _int(2, 10_000), "x grid points on [-3, 3]"),
        "c_max": Param(4.0, _float(0.0, 100.0), "largest variance parameter"),
    },
    "simulate": {
        "n": Param(4, _int(0, 64), "Galerkin truncation"),
        "kmax": Param(3, _int(1, 8), "largest Wick power"),
        "replicas": Param(4, _int(1, 100_000), "independent replicas"),
        "seed": SEED,
        "dt": Param(0.01, _float(0.0, None, open_lo=True), "time step"),
        "steps": Param(10, _int(0, 100_000), "number of steps"),
        "track_radius": Param(1, _int(0, 16), "tracked modes |p| <= radius"),
    },
    "wick-cov": {
        "n": Param(2, _int(1, 16), "Galerkin truncation"),
        "kmax": Param(3, _int(1, 6), "largest Wick power"),
        "replicas": Param(2000, _int(2, 1_000_000), "independent replicas"),
        "seed": SEED,
        "dt": Param(0.0, _float(0.0, None), "time lag"),
        "track_radius": Param(1, _int(0, 8), "tracked modes |p| <= radius"),
    },
    "besov": {
        "field": Param(None, _text, "SpectralField JSON file"),
        "alpha": Param(-0.5, _float(-10.0, 10.0), "regularity index"),
        "p": Param(math.inf, _exponent, "integrability exponent"),
        "q": Param(math.inf, _exponent, "summability exponent"),
    },
    "kernel-decay": {
        "n_list": Param((2, 4, 8, 16, 32), _int_list(1, 256), "truncations"),
        "k": Param(1, _int(1, 4), "first star power"),
        "l": Param(1, _int(1, 4), "second star power"),
        "alpha": Param(0.4, _float(0.0, 1.0, open_lo=True), "block weight exponent"),
        "ratio": Param(2, _int(1, 8), "M / n"),
    },
    "match-moments": {
        "N": Param(2, _int(1, 4), "matched order"),
        "a0": Param(0.05, _float(0.0, 0.05, open_lo=True), "smoothing parameter"),
        "tol": Param(1e-8, _float(0.0, 1.0, open_lo=True), "residual bound"),
    },
    "support-demo": {
        "n_list": Param((4, 8, 16), _int_list(3, 64), "truncations"),
        "M_ratio": Param(4, _int(1, 8), "M / n"),
        "R": Param(0.3, _float(0.0, None), "target variance"),
        "kmax": Param(3, _int(1, 6), "largest Wick power"),
        "alpha": Param(0.4, _float(0.0, 1.0, open_lo=True), "negative regularity"),
        "seeds": Param(32, _int(1, 10_000), "replicas averaged"),
        "seed": SEED,
        "N": Param(2, _int(1, 4), "moment-matching order"),
        "a0": Param(0.05, _float(0.0, 0.05, open_lo=True), "smoothing parameter"),
    },
    "gmc-demo": {
        "n": Param(4, _int(0, 32), "truncation"),
        "gamma": Param(1.0, _gamma, "intermittency"),
        "beta": Param(0.5, _float(0.0, 1.0, open_lo=True, open_hi=True), "H^{-beta} index"),
        "replicas": Param(1000, _int(2, 1_000_000), "Monte Carlo replicas"),
        "seed": SEED,
        "gap_list": Param((2, 4, 8), _int_list(1, 32), "inner truncations N (M = 2N)"),
    },
}


@dataclass
class RunConfig:
    command: str
    params: dict
    out: str | None = None
    sources: dict = field(default_factory=dict)


def _norm_key(k: str) -> str:
    return k.strip().lstrip("-").replace("-", "_")


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError("config", f"line {lineno} is not key=value: {line!r}")
        k, v = line.split("=", 1)
        values[_norm_key(k)] = v.strip()
    return values


def parse_config(command: str, flags: dict | None = None, file_values: dict | None = None, out: str | None = None) -> RunConfig:
    """Merge flag > file > default for ``command`` and validate every parameter."""
    if command not in COMMANDS:
        raise ValidationError("command", f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    spec = COMMANDS[command]
    flags = {_norm_key(k): v for k, v in (flags or {}).items() if v is not None}
    file_values = {_norm_key(k): v for k, v in (file_values or {}).items()}
    for k in list(flags) + list(file_values):
        if k not in spec:
            raise ValidationError(k, f"unknown key for {command}; allowed: {', '.join(spec)}")
    params, sources = {}, {}
    for k, p in spec.items():
        if k in flags:
            raw, src = flags[k], "flag"
        elif k in file_values:
            raw, src = file_values[k], "file"
        else:
            params[k], sources[k] = p.default, "default"
            continue
        params[k], sources[k] = p.convert(k, raw), src
    _joint_checks(command, params)
    return RunConfig(command=command, params=params, out=out, sources=sources)


def _joint_checks(command: str, p: dict) -> None:
    if command == "gmc-demo":
        lo = p["gamma"] ** 2 / (8 * math.pi)
        if not lo < p["beta"] < 1:
            raise ValidationError("beta", f"must lie in ({lo:.6g}, 1) for gamma={p['gamma']}, got {p['beta']}")
    if command == "besov" and not p["field"]:
        raise ValidationError("field", "a SpectralField JSON path is required")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), FLOAT_FORMAT)
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# Commands return (csv text, extra files {name: text}).


def _cmd_hermite_check(p):
    from .identities import hermite_identity_report

    rep = hermite_identity_report(p["kmax"], p["points"], p["c_max"])
    return to_csv(["identity", "max_relative_residual"], list(rep.items())), {}


def _cmd_simulate(p):
    from .she import simulate

    rows = simulate(p["n"], p["kmax"], p["replicas"], p["seed"], p["dt"], p["steps"], p["track_radius"])
    return to_csv(["replica", "t", "k", "p1", "p2", "re", "im"], rows), {}


def _cmd_wick_cov(p):
    from .parallel import MeanVar, chunks, ordered_map
    from .she import evolve, min_wick_resolution, stationary_sample, wick_mode_coefficients, wick_mode_covariance, wick_powers

    n, kmax, r, dt = p["n"], p["kmax"], p["track_radius"], p["dt"]
    P = max(min_wick_resolution(n, kmax), 2 * r + 1)

    def work(span):
        lo, hi = span
        st = stationary_sample(n, p["seed"], hi - lo, lo)
        a = np.stack([wick_mode_coefficients(wick_powers(st, kmax, P), k, r) for k in range(1, kmax + 1)], axis=1)
        if dt > 0:
            evolve(st, dt)
            b = np.stack([wick_mode_coefficients(wick_powers(st, kmax, P), k, r) for k in range(1, kmax + 1)], axis=1)
        else:
            b = a
        return (a * np.conj(b)).real

    acc = MeanVar((kmax, 2 * r + 1, 2 * r + 1))
    for batch in ordered_map(work, chunks(p["replicas"], 500)):
        acc.add_batch(batch)
    rows = []
    for k in range(1, kmax + 1):
        for p1 in range(-r, r + 1):
            for p2 in range(-r, r + 1):
                if p1 * p1 + p2 * p2 > r * r:
                    continue
                i, j = p1 + r, p2 + r
                rows.append((k, p1, p2, acc.mean[k - 1, i, j], acc.stderr[k - 1, i, j], wick_mode_covariance(n, k, dt, (p1, p2))))
    return to_csv(["k", "p1", "p2", "mc_mean", "mc_stderr", "analytic"], rows), {}


def _cmd_besov(p):
    from .besov import besov_norm
    from .fourier import SpectralField

    try:
        text = Path(p["field"]).read_text()
    except OSError as e:
        raise ValidationError("field", f"cannot read {p['field']}: {e.strerror}") from None
    try:
        f = SpectralField.from_json(text)
    except (ValueError, KeyError, TypeError) as e:
        raise ValidationError("field", f"not a SpectralField JSON document: {e}") from None
    value = besov_norm(f, p["alpha"], p["p"], p["q"])
    return f"{value:.12g}\n", {}


def _cmd_kernel_decay(p):
    from .lattice import kernel_decay_table

    rows, slope = kernel_decay_table(list(p["n_list"]), p["k"], p["l"], p["alpha"], p["ratio"])
    return to_csv(["n", "gap", "fitted_slope"], [(n, g, slope) for n, g in rows]), {}


def _cmd_match_moments(p):
    from .support import match_moments

    prof = match_moments(p["N"], p["a0"], p["tol"])
    report = [(k, v) for k, v in sorted(prof.residuals.items())]
    extra = {"profile.json": prof.field.to_json() + "\n"}
    return to_csv(["k", "hermite_moment"], report), extra


def _cmd_support_demo(p):
    from .support import match_moments, support_demo

    prof = match_moments(p["N"], p["a0"])
    rows = support_demo(list(p["n_list"]), p["M_ratio"], p["R"], p["kmax"], p["alpha"], p["seeds"], prof, p["seed"])
    return to_csv(["n", "k", "mean_distance", "stderr"], rows), {}


def _cmd_gmc_demo(p):
    from .gmc import chaos_monte_carlo, gmc_gap_to_one, gmc_second_moment_analytic

    n, g, b = p["n"], p["gamma"], p["beta"]
    mc = chaos_monte_carlo(n, g, b, p["replicas"], p["seed"])
    rows = [
        ("second_moment_analytic", n, "", gmc_second_moment_analytic(n, g, b), ""),
        ("second_moment_mc", n, "", float(mc.norm_sq.mean), float(mc.norm_sq.stderr)),
    ]
    for N in p["gap_list"]:
        rows.append(("gap_to_one", N, 2 * N, gmc_gap_to_one(N, 2 * N, g, b), ""))
    rows.append(("positivity_pass_rate", n, "", mc.positive / mc.replicas, ""))
    return to_csv(["quantity", "N", "M", "value", "stderr"], rows), {}


HANDLERS = {
    "hermite-check": _cmd_hermite_check,
    "simulate": _cmd_simulate,
    "wick-cov": _cmd_wick_cov,
    "besov": _cmd_besov,
    "kernel-decay": _cmd_kernel_decay,
    "match-moments": _cmd_match_moments,
    "support-demo": _cmd_support_demo,
    "gmc-demo": _cmd_gmc_demo,
}


def package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def run(config: RunConfig, stdout=None) -> dict:
    """Execute ``config``; returns the manifest (also written next to ``--out`` when given)."""
    body, extra = HANDLERS[config.command](config.params)
    outputs = {}
    if config.out:
        out = Path(config.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(body, newline="\n")
        outputs[out.name] = _sha256(body)
        for name, text in extra.items():
            path = out.with_name(f"{out.stem}.{name}")
            path.write_text(text, newline="\n")
            outputs[path.name] = _sha256(text)
    else:
        (stdout or sys.stdout).write(body)
        outputs["stdout"] = _sha256(body)
    manifest = {
        "command": config.command,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in config.params.items()},
        "version": package_version(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "checksums": outputs,
    }
    if config.out:
        Path(f"{config.out}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wicklab", description="Wick powers, shifts and chaos second moments on the 2-torus.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value parameter file")
        sp.add_argument("--out", help="CSV output path (a manifest is written alongside)")
        for key, prm in spec.items():
            flag = "--" + key.replace("_", "-")
            default = list(prm.default) if isinstance(prm.default, tuple) else prm.default
            sp.add_argument(flag, dest=key, default=None, help=f"{prm.help} (default {default})")
    return parser


def _error_line(err: WicklabError) -> str:
    key = getattr(err, "key", None)
    parts = [f"error code={err.code}"]
    if key:
        parts.append(f"key={key}")
    parts.append("message=" + json.dumps(str(err)))
    return " ".join(parts)


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    cfg_path = args.pop("config")
    out = args.pop("out")
    try:
        file_values = read_config_file(cfg_path) if cfg_path else {}
        config = parse_config(command, args, file_values, out)
        run(config)
    except WicklabError as err:
        print(_error_line(err), file=sys.stderr)
        return err.exit_status
    except OSError as err:
        print(_error_line(ValidationError("config", str(err))), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
