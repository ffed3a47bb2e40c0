"""
Command-line experiment runner
==============================

  fasris sweep     one-axis parameter sweep to CSV (analytic, Monte Carlo or both)
  fasris validate  analytic vs Monte Carlo per point with a pass/fail column
  fasris ks        K-S distance of the CLT gain model versus M
  fasris ceiling   high-power ceiling versus a high-power pipeline evaluation

Configuration is a plain ``key = value`` file; keys are SystemParams fields
plus the sweep fields (axis, values, mode, samples, seed, order, order_cdf,
M_values, P_high, note). Unknown keys are rejected. ``--set key=value``
overrides single keys and command-line flags override both.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import average_secure_bler, hi_ceiling
from .montecarlo import ks_clt, mc_average_secure_bler
from .numerics import NumericsError
from .params import ParameterError, SystemParams

__all__ = [
    "ConfigError",
    "SweepSpec",
    "SweepRow",
    "PRESETS",
    "KS_REFERENCE",
    "load_config",
    "build_spec",
    "run_sweep",
    "run_validation",
    "run_ks",
    "run_ceiling",
    "main",
]

AXES = ("P", "M", "L", "m_block", "a_C", "rho2", "W", "delta", "N_c")
MODES = ("analytic", "montecarlo", "both")
INT_FIELDS = {"M", "L", "m_block", "b_quant"}
OPTIONAL_FIELDS = {"b_quant", "rician_K"}
PARAM_FIELDS = {f.name for f in dataclasses.fields(SystemParams)}
SPEC_FIELDS = {"axis", "values", "mode", "samples", "seed", "order", "order_cdf", "M_values", "P_high", "note"}

KS_REFERENCE = {4: 0.054, 8: 0.039, 16: 0.029, 20: 0.023, 32: 0.019}
VALIDATION_FACTOR = 1.5
VALIDATION_FLOOR = 1e-4
VALIDATION_SIGMAS = 3.0

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration file, key or value."""


# ============================================================================
#  Sweep definition
# ============================================================================

@dataclass(frozen=True)
class SweepSpec:
    base: SystemParams
    axis: str
    values: tuple[float, ...]
    mode: str = "analytic"
    mc_samples: int = 100_000
    seed: int = 0
    order: int = 30
    order_cdf: int = 30
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {', '.join(AXES)}; got {self.axis!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {self.mode!r}")
        if not self.values:
            raise ConfigError("values must be a non-empty list")
        if list(self.values) != sorted(self.values):
            raise ConfigError("values must be ascending")
        if self.mc_samples < 1000:
            raise ConfigError(f"samples must be >= 1000, got {self.mc_samples}")
        if self.order < 1 or self.order_cdf < 1:
            raise ConfigError("quadrature orders must be >= 1")
        for v in self.values:
            try:
                self.params_at(v)
            except ParameterError as exc:
                raise ConfigError(f"{self.axis} = {v:g}: {exc}") from None

    def params_at(self, value: float) -> SystemParams:
        if self.axis == "a_C":
            return self.base.replace(a_C=value, a_E=1.0 - value)
        if self.axis == "rho2":
            return self.base.replace(rho2_C=value, rho2_E=value)
        if self.axis in INT_FIELDS:
            if int(value) != value:
                raise ParameterError(f"{self.axis} must be an integer, got {value!r}")
            value = int(value)
        return self.base.replace(**{self.axis: value})


@dataclass
class SweepRow:
    value: float
    analytic: float | None = None
    expected_phi: float | None = None
    expected_psi_phi: float | None = None
    expected_psi_xi: float | None = None
    mc_mean: float | None = None
    mc_stderr: float | None = None
    seconds: float | None = None
    error: str = ""
    extra: dict = field(default_factory=dict)


# name -> (axis, values, overrides, notes)
PRESETS: dict[str, tuple[str, tuple[float, ...], dict, tuple[str, ...]]] = {
    "power_strict": ("P", tuple(np.logspace(0, 3, 13)), {"N_c": 300, "delta": 0.01}, ()),
    "power_relaxed": ("P", tuple(np.logspace(0, 3, 13)), {"N_c": 250, "delta": 0.5},
                      ("N_c=250 is assumed for this scenario",)),
    "power_short": ("P", tuple(np.logspace(0, 3, 13)), {"N_c": 200, "delta": 0.1}, ()),
    "ris_strict": ("M", (5, 10, 15, 20, 25, 30, 35, 40), {"P": 100, "N_c": 200, "delta": 0.01}, ()),
    "ris_relaxed": ("M", (5, 10, 15, 20, 25, 30, 35, 40), {"P": 100, "N_c": 200, "delta": 0.5}, ()),
    "ris_relaxed_long": ("M", (5, 10, 15, 20, 25, 30, 35, 40), {"P": 100, "N_c": 300, "delta": 0.5}, ()),
    "ports": ("L", tuple(range(1, 11)), {"P": 10}, ()),
    "blocklength": ("m_block", (100, 200, 400, 800), {"P": 1}, ()),
    "allocation": ("a_C", tuple(np.round(np.arange(0.05, 0.5, 0.05), 2)), {"P": 10}, ()),
}


# ============================================================================
#  Configuration
# ============================================================================

def _parse_scalar(key: str, text: str):
    text = text.strip()
    if key in OPTIONAL_FIELDS and text.lower() in ("none", ""):
        return None
    try:
        if key in INT_FIELDS or key in ("samples", "seed", "order", "order_cdf"):
            number = float(text)
            if int(number) != number:
                raise ValueError
            return int(number)
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as a number") from None


def parse_values(text: str) -> tuple[float, ...]:
    """Comma list, or ``log:start:stop:count`` / ``lin:start:stop:count``."""
    text = text.strip()
    if text.startswith(("log:", "lin:")):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"values: expected kind:start:stop:count, got {text!r}")
        try:
            start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise ConfigError(f"values: cannot parse {text!r}") from None
        if parts[0] == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("values: log spacing needs positive bounds")
            return tuple(float(v) for v in np.geomspace(start, stop, count))
        return tuple(float(v) for v in np.linspace(start, stop, count))
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"values: cannot parse {text!r}") from None


def load_config(path: str | Path | None, overrides: list[str] = ()) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    raw: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            parser.read_string("[config]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        raw.update(parser["config"])
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    unknown = sorted(set(raw) - PARAM_FIELDS - SPEC_FIELDS - {"preset"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return raw


def build_spec(raw: dict[str, str], args: argparse.Namespace | None = None, default_axis: str = "P") -> SweepSpec:
    raw = dict(raw)
    overrides: dict = {}
    axis, values, notes = default_axis, None, []
    preset = raw.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        axis, preset_values, preset_overrides, preset_notes = PRESETS[preset]
        values = tuple(float(v) for v in preset_values)
        overrides.update(preset_overrides)
        notes.extend(preset_notes)
        notes.append(f"preset={preset}")

    for key in PARAM_FIELDS & set(raw):
        overrides[key] = _parse_scalar(key, raw[key])
    axis = raw.get("axis", axis)
    if "values" in raw:
        values = parse_values(raw["values"])
    if "note" in raw:
        notes.append(raw["note"])

    settings = {
        "mode": raw.get("mode", "analytic"),
        "mc_samples": _parse_scalar("samples", raw["samples"]) if "samples" in raw else 100_000,
        "seed": _parse_scalar("seed", raw["seed"]) if "seed" in raw else 0,
        "order": _parse_scalar("order", raw["order"]) if "order" in raw else 30,
        "order_cdf": _parse_scalar("order_cdf", raw["order_cdf"]) if "order_cdf" in raw else 30,
    }
    if args is not None:
        for name, attr in (("mode", "mode"), ("mc_samples", "samples"), ("seed", "seed"), ("order", "order")):
            value = getattr(args, attr, None)
            if value is not None:
                settings[name] = value

    try:
        base = SystemParams(**overrides)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if values is None:
        values = (float(getattr(base, axis)) if axis in PARAM_FIELDS else base.rho2_C,)
    return SweepSpec(base=base, axis=axis, values=tuple(values), notes=tuple(notes), **settings)


# ============================================================================
#  Runners
# ============================================================================

def _run_point(spec: SweepSpec, value: float) -> SweepRow:
    row = SweepRow(value)
    start = time.perf_counter()
    try:
        params = spec.params_at(value)
        if spec.mode in ("analytic", "both"):
            res = average_secure_bler(params, spec.order, spec.order_cdf)
            row.analytic = res.value
            row.expected_phi = res.expected_phi
            row.expected_psi_phi = res.expected_psi_phi
            row.expected_psi_xi = res.expected_psi_xi
        if spec.mode in ("montecarlo", "both"):
            mc = mc_average_secure_bler(params, spec.mc_samples, spec.seed)
            row.mc_mean, row.mc_stderr = mc.mean, mc.stderr
    except (NumericsError, ParameterError, ValueError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    row.seconds = time.perf_counter() - start
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """Evaluate every axis value; rows come back in axis order."""
    if workers <= 1 or len(spec.values) == 1:
        return [_run_point(spec, v) for v in spec.values]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_point, [spec] * len(spec.values), spec.values))


def validation_verdict(row: SweepRow) -> bool:
    """Analytic within a factor 1.5 of MC where MC >= 1e-4, else within 3 standard errors."""
    if row.error or row.analytic is None or row.mc_mean is None:
        return False
    if row.mc_mean >= VALIDATION_FLOOR:
        ratio = row.analytic / row.mc_mean
        return 1.0 / VALIDATION_FACTOR <= ratio <= VALIDATION_FACTOR
    return abs(row.analytic - row.mc_mean) <= VALIDATION_SIGMAS * row.mc_stderr


def run_validation(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    spec = dataclasses.replace(spec, mode="both")
    rows = run_sweep(spec, workers)
    for row in rows:
        row.extra["pass"] = int(validation_verdict(row))
    return rows


def run_ks(params: SystemParams, M_values, n_samples: int, seed: int) -> list[dict]:
    out = []
    for r in ks_clt(params, M_values, n_samples, seed):
        ref = KS_REFERENCE.get(r.M)
        out.append({"M": r.M, "ks": r.statistic, "reference": ref,
                    "abs_gap": None if ref is None else abs(r.statistic - ref)})
    return out


def run_ceiling(params: SystemParams, P_high: float = 1e6, order: int = 30, order_cdf: int = 30) -> dict:
    ceiling = hi_ceiling(params)
    high = average_secure_bler(params.replace(P=P_high), order, order_cdf).value
    return {"P_high": P_high, "hi_ceiling": ceiling, "analytic_at_P_high": high,
            "relative_gap": abs(high - ceiling) / ceiling}


# ============================================================================
#  CSV output
# ============================================================================

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.6g}"


def _metadata(spec: SweepSpec | None, extra: dict) -> list[str]:
    lines = [f"# tool=fasris {__version__}"]
    if spec is not None:
        lines += [
            f"# axis={spec.axis}",
            f"# mode={spec.mode}",
            f"# seed={spec.seed}",
            f"# mc_samples={spec.mc_samples}",
            f"# order={spec.order}",
            f"# order_cdf={spec.order_cdf}",
        ]
        base = dataclasses.asdict(spec.base)
        lines.append("# base: " + " ".join(f"{k}={_fmt(v) if v is not None else 'none'}" for k, v in base.items()))
        lines += [f"# note: {n}" for n in spec.notes]
    lines += [f"# {k}={v}" for k, v in extra.items()]
    return lines


def sweep_csv(spec: SweepSpec, rows: list[SweepRow], timing: bool = False, extra_columns=()) -> str:
    buf = io.StringIO()
    for line in _metadata(spec, {}):
        buf.write(line + "\n")
    header = [spec.axis, "analytic", "expected_phi", "expected_psi_phi", "expected_psi_xi", "mc_mean", "mc_stderr"]
    header += list(extra_columns)
    if timing:
        header.append("seconds")
    header.append("error")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        cells = [_fmt(r.value), _fmt(r.analytic), _fmt(r.expected_phi), _fmt(r.expected_psi_phi),
                 _fmt(r.expected_psi_xi), _fmt(r.mc_mean), _fmt(r.mc_stderr)]
        cells += [_fmt(r.extra.get(c)) for c in extra_columns]
        if timing:
            cells.append(_fmt(r.seconds))
        cells.append(r.error)
        writer.writerow(cells)
    return buf.getvalue()


def records_csv(records: list[dict], meta: dict) -> str:
    buf = io.StringIO()
    for line in _metadata(None, meta):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(records[0]))
    for rec in records:
        writer.writerow([_fmt(v) for v in rec.values()])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ============================================================================
#  Entry point
# ============================================================================

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="built-in sweep scenario")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--seed", type=int)
    common.add_argument("--order", type=int, help="Gauss-Chebyshev order for every quadrature")
    common.add_argument("--workers", type=int, default=1, help="process pool size for sweep points")
    common.add_argument("--timing", action="store_true", help="add a wall-clock column (breaks byte stability)")

    parser = argparse.ArgumentParser(prog="fasris", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"fasris {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV")
    sub.add_parser("validate", parents=[common], help="analytic vs Monte Carlo per point")
    sub.add_parser("ks", parents=[common], help="K-S distance of the CLT gain model")
    sub.add_parser("ceiling", parents=[common], help="high-power ceiling check")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    raw = load_config(args.config, args.set)
    if args.preset:
        raw["preset"] = args.preset

    if args.command in ("sweep", "validate"):
        spec = build_spec(raw, args)
        if args.command == "sweep":
            rows = run_sweep(spec, args.workers)
            _emit(sweep_csv(spec, rows, args.timing), args.out)
        else:
            rows = run_validation(spec, args.workers)
            spec = dataclasses.replace(spec, mode="both")
            _emit(sweep_csv(spec, rows, args.timing, extra_columns=("pass",)), args.out)
            passed = sum(r.extra["pass"] for r in rows)
            print(f"validation: {passed}/{len(rows)} points inside tolerance", file=sys.stderr)
        return EXIT_NUMERIC if any(r.error for r in rows) else EXIT_OK

    spec = build_spec(raw, args)
    if args.command == "ks":
        M_values = tuple(int(v) for v in parse_values(raw["M_values"])) if "M_values" in raw else tuple(KS_REFERENCE)
        samples = args.samples if args.samples is not None else (
            _parse_scalar("samples", raw["samples"]) if "samples" in raw else 200_000)
        records = run_ks(spec.base, M_values, samples, spec.seed)
        _emit(records_csv(records, {"seed": spec.seed, "samples": samples}), args.out)
        return EXIT_OK

    P_high = _parse_scalar("P_high", raw["P_high"]) if "P_high" in raw else 1e6
    report = run_ceiling(spec.base, P_high, spec.order, spec.order_cdf)
    _emit(records_csv([report], {"order": spec.order, "order_cdf": spec.order_cdf}), args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ParameterError) as exc:
        print(f"fasris: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"fasris: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
