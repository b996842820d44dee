"""``irs-ee`` experiment runner: power/N sweeps, convergence, optimization.

Every experiment writes machine-readable rows (CSV or JSON). Power values
are accepted as ``28dBm`` or ``0.631W`` (a bare number means watts); the
library itself works in watts.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import convergence, mcsim, optimize, outage
from .channel import Rayleigh, Rician
from .specfun import SpecialFunctionError

__all__ = [
    "EXPERIMENTS",
    "CSV_HEADER",
    "SpecError",
    "SweepRange",
    "ExperimentSpec",
    "parse_power",
    "parse_sweep",
    "parse_config",
    "run",
    "main",
]

EXPERIMENTS = (
    "sweep-power-ee",
    "sweep-power-rate",
    "sweep-n",
    "berry-esseen",
    "optimize",
    "required-n",
    "validate",
)
FORMATS = ("csv", "json")
CSV_HEADER = "sweep_var,op_gamma,op_clt,op_mc,mc_stderr,be_bound"

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

POWER_FIELDS = ("p_tx", "p_circuit", "p_irs", "n0", "p_max")

_DEFAULT_SWEEPS = {
    "sweep-power-ee": "0dBm:50dBm:51:db",
    "sweep-power-rate": "0dBm:50dBm:51:db",
    "validate": "0dBm:50dBm:51:db",
    "sweep-n": "1:64:64",
    "berry-esseen": "4:64:5:db",
}


class SpecError(ValueError):
    """Bad experiment description; carries the offending field and line."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line

    def to_dict(self):
        out = {"type": "parse_error", "message": str(self)}
        if self.field is not None:
            out["field"] = self.field
        if self.line is not None:
            out["line"] = self.line
        return out


_POWER_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(dBm|W|mW)?\s*$", re.I)


def parse_power(text, field="power") -> float:
    """'28dBm' -> 0.6309573 W, '0.631W' -> 0.631, '5mW' -> 0.005, '2' -> 2 W."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    m = _POWER_RE.match(str(text))
    if not m:
        raise SpecError(
            f"{field}: cannot parse {text!r}; expected a number with unit dBm, W or mW",
            field=field,
        )
    value = float(m.group(1))
    unit = (m.group(2) or "W").lower()
    if unit == "dbm":
        return outage.dbm_to_watts(value)
    if unit == "mw":
        return value * 1e-3
    return value


@dataclass(frozen=True)
class SweepRange:
    start: float
    stop: float
    points: int
    db: bool = False

    def __post_init__(self):
        if self.points < 1:
            raise SpecError("sweep: POINTS must be >= 1", field="sweep")
        if self.db and (self.start <= 0 or self.stop <= 0):
            raise SpecError("sweep: dB spacing needs positive START and STOP", field="sweep")

    def values(self):
        if self.points == 1:
            return np.array([self.start])
        if self.db:
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)

    def integer_values(self):
        """Rounded, de-duplicated values for element-count sweeps."""
        seen = []
        for v in self.values():
            n = int(round(v))
            if n >= 1 and n not in seen:
                seen.append(n)
        if not seen:
            raise SpecError("sweep: no element counts >= 1 in range", field="sweep")
        return seen

    def to_text(self):
        return f"{self.start!r}:{self.stop!r}:{self.points}" + (":db" if self.db else "")


def parse_sweep(text, power=True) -> SweepRange:
    """START:STOP:POINTS[:db]; START/STOP take power units when `power` is set."""
    parts = str(text).split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3].lower() != "db"):
        raise SpecError(
            f"sweep: expected START:STOP:POINTS[:db], got {text!r}", field="sweep"
        )
    conv = (lambda s: parse_power(s, "sweep")) if power else _float("sweep")
    try:
        points = int(parts[2])
    except ValueError:
        raise SpecError(f"sweep: POINTS must be an integer, got {parts[2]!r}", field="sweep")
    return SweepRange(conv(parts[0]), conv(parts[1]), points, db=len(parts) == 4)


def _float(name):
    def conv(value):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise SpecError(f"{name}: expected a number, got {value!r}", field=name)

    return conv


def _int(name):
    def conv(value):
        try:
            f = float(value)
        except (TypeError, ValueError):
            raise SpecError(f"{name}: expected an integer, got {value!r}", field=name)
        if f != int(f):
            raise SpecError(f"{name}: expected an integer, got {value!r}", field=name)
        return int(f)

    return conv


def _float_list(name):
    def conv(value):
        if isinstance(value, (list, tuple)):
            items = value
        else:
            items = [v for v in str(value).split(",") if v.strip()]
        return tuple(_float(name)(v) for v in items)

    return conv


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    channel: str = "rayleigh"
    k1: float = 1.0
    k2: float = 1.0
    omega1: float = 1.0
    omega2: float = 1.0
    sigma: float = 1.0 / math.sqrt(2.0)
    n: int = 4
    p_tx: float = outage.dbm_to_watts(28.0)
    p_circuit: float = outage.dbm_to_watts(10.0)
    p_irs: float = outage.dbm_to_watts(10.0)
    n0: float = outage.dbm_to_watts(-90.0)
    eta_th: float = 2.0
    r_th: float = 2.0
    sweep: SweepRange | None = None
    trials: int = 10_000
    seed: int = 0
    workers: int = 1
    out: str | None = None
    format: str = "csv"
    tol: float = 0.015
    p_max: float = 10.0
    op_targets: tuple = (1e-3, 1e-6, 1e-9)
    n_max: int = 4096
    grid_size: int = convergence.DEFAULT_GRID_SIZE

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise SpecError(
                f"experiment: expected one of {', '.join(EXPERIMENTS)}, got {self.experiment!r}",
                field="experiment",
            )
        if self.channel not in ("rician", "rayleigh"):
            raise SpecError(
                f"channel: expected rician or rayleigh, got {self.channel!r}", field="channel"
            )
        if self.format not in FORMATS:
            raise SpecError(f"format: expected csv or json, got {self.format!r}", field="format")
        if self.n < 1:
            raise SpecError("n: must be >= 1", field="n")
        if self.trials < 0:
            raise SpecError("trials: must be >= 0", field="trials")
        if 0 < self.trials < mcsim.MIN_TRIALS:
            raise SpecError(f"trials: must be 0 or >= {mcsim.MIN_TRIALS}", field="trials")
        if self.workers < 1:
            raise SpecError("workers: must be >= 1", field="workers")
        for name in ("p_circuit", "p_irs", "n0", "p_max", "eta_th", "r_th", "tol"):
            if not getattr(self, name) > 0:
                raise SpecError(f"{name}: must be > 0", field=name)
        if self.sweep is None and self.experiment in _DEFAULT_SWEEPS:
            power = self.experiment not in ("sweep-n", "berry-esseen")
            object.__setattr__(
                self, "sweep", parse_sweep(_DEFAULT_SWEEPS[self.experiment], power=power)
            )

    def channel_model(self):
        if self.channel == "rician":
            return Rician(self.k1, self.k2, self.omega1, self.omega2)
        return Rayleigh(self.sigma)

    def system(self, p_tx=None, n=None):
        return outage.SystemConfig(
            n_elements=self.n if n is None else n,
            p_tx=self.p_tx if p_tx is None else p_tx,
            p_circuit=self.p_circuit,
            p_irs=self.p_irs,
            n0=self.n0,
        )

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["sweep"] = None if self.sweep is None else self.sweep.to_text()
        d["op_targets"] = list(self.op_targets)
        return d

    @classmethod
    def from_dict(cls, data):
        return cls(**_coerce(dict(data)))


_CONVERTERS = {
    "experiment": str,
    "channel": lambda v: str(v).lower(),
    "k1": _float("k1"),
    "k2": _float("k2"),
    "omega1": _float("omega1"),
    "omega2": _float("omega2"),
    "sigma": _float("sigma"),
    "n": _int("n"),
    "eta_th": _float("eta_th"),
    "r_th": _float("r_th"),
    "trials": _int("trials"),
    "seed": _int("seed"),
    "workers": _int("workers"),
    "out": lambda v: None if v in (None, "") else str(v),
    "format": lambda v: str(v).lower(),
    "tol": _float("tol"),
    "op_targets": _float_list("op_targets"),
    "n_max": _int("n_max"),
    "grid_size": _int("grid_size"),
}
for _name in POWER_FIELDS:
    _CONVERTERS[_name] = (lambda name: lambda v: parse_power(v, name))(_name)
_FIELD_ALIASES = {"op_target": "op_targets"}


def _coerce(raw):
    out = {}
    experiment = raw.get("experiment")
    for key, value in raw.items():
        key = _FIELD_ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if key == "sweep":
            if value is None:
                out[key] = None
            elif isinstance(value, SweepRange):
                out[key] = value
            else:
                out[key] = parse_sweep(value, power=experiment not in ("sweep-n", "berry-esseen"))
        elif key in _CONVERTERS:
            out[key] = _CONVERTERS[key](value)
        else:
            raise SpecError(f"unknown field {key!r}", field=key)
    if "experiment" not in out:
        raise SpecError("missing required field 'experiment'", field="experiment")
    return out


def _read_config_file(path):
    """Flat ``key = value`` text (``#`` comments) or a JSON object."""
    p = Path(path)
    if not p.is_file():
        raise SpecError(f"config file not found: {path}", field="config")
    text = p.read_text()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"config: invalid JSON ({exc.msg})", field="config", line=exc.lineno)
        # accept a full result document as well as a bare spec
        return dict(data.get("spec", data)), {}
    values, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        if not sep or not key.strip():
            raise SpecError(f"config line {lineno}: expected 'key = value'", line=lineno)
        key = key.strip().replace("-", "_")
        values[key] = value.strip()
        lines[key] = lineno
    return values, lines


def _build_parser():
    parser = _Parser(
        prog="irs-ee", description="Outage of energy efficiency for IRS links.", allow_abbrev=False
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    sup = argparse.SUPPRESS
    parser.add_argument("--config", default=sup, help="flat key = value file or JSON")
    parser.add_argument("--channel", choices=("rician", "rayleigh"), default=sup)
    for name in ("k1", "k2", "omega1", "omega2", "sigma"):
        parser.add_argument(f"--{name}", default=sup)
    parser.add_argument("--n", default=sup, help="number of IRS elements")
    for name in ("p-tx", "p-circuit", "p-irs", "n0", "p-max"):
        parser.add_argument(f"--{name}", default=sup, help="power, e.g. 28dBm or 0.631W")
    parser.add_argument("--eta-th", default=sup, help="EE target, bits/Hz/J")
    parser.add_argument("--r-th", default=sup, help="rate target, bits/s/Hz")
    parser.add_argument("--sweep", default=sup, help="START:STOP:POINTS[:db]")
    parser.add_argument("--trials", default=sup)
    parser.add_argument("--seed", default=sup)
    parser.add_argument("--workers", default=sup)
    parser.add_argument("--out", default=sup)
    parser.add_argument("--format", choices=FORMATS, default=sup)
    parser.add_argument("--tol", default=sup, help="validate: max allowed |analytic - MC|")
    parser.add_argument("--op-target", dest="op_targets", default=sup, help="comma list")
    parser.add_argument("--n-max", default=sup)
    parser.add_argument("--grid-size", default=sup)
    return parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SpecError(f"usage: {message}")


def parse_config(argv) -> ExperimentSpec:
    """Build an ExperimentSpec from command-line flags; flags override --config."""
    ns = vars(_build_parser().parse_args(list(argv)))
    raw, lines = {}, {}
    if "config" in ns:
        raw, lines = _read_config_file(ns.pop("config"))
    raw.update(ns)
    try:
        return ExperimentSpec.from_dict(raw)
    except SpecError as exc:
        if exc.line is None and exc.field in lines:
            exc.line = lines[exc.field]
        raise


# -- experiments ----------------------------------------------------------------


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _samples(spec, n):
    if not spec.trials:
        return None
    return mcsim.SampleSet(spec.channel_model(), n, spec.trials, spec.seed, workers=spec.workers)


def _row(var, gamma, clt, mc=None, bound=None):
    return {
        "sweep_var": var,
        "op_gamma": gamma,
        "op_clt": clt,
        "op_mc": None if mc is None else mc.estimate,
        "mc_stderr": None if mc is None else mc.stderr,
        "be_bound": bound,
    }


def _power_sweep(spec, rate):
    model = spec.channel_model()
    samples = _samples(spec, spec.n)
    bound = convergence.berry_esseen_bound(model, spec.n)
    eta = outage.EeThreshold(spec.eta_th)
    r = outage.RateThreshold(spec.r_th)

    def point(p):
        cfg = spec.system(p_tx=float(p))
        if rate:
            g = outage.op_rate(cfg, model, r, "gamma")
            c = outage.op_rate(cfg, model, r, "clt")
            root_q = _safe_root_q(outage.q_rate_threshold, cfg, r)
        else:
            g = outage.op_ee_gamma(cfg, model, eta)
            c = outage.op_ee_clt(cfg, model, eta)
            root_q = _safe_root_q(outage.q_threshold, cfg, eta)
        mc = None if samples is None else samples.estimate_below(root_q)
        return _row(float(p), g, c, mc, bound)

    return _map(point, spec.sweep.values(), spec.workers)


def _safe_root_q(fn, cfg, threshold):
    try:
        return fn(cfg, threshold)[1]
    except outage.ExponentOverflowError:
        return math.inf


def _n_sweep(spec):
    model = spec.channel_model()
    eta = outage.EeThreshold(spec.eta_th)

    def point(n):
        cfg = spec.system(n=n)
        samples = _samples(spec, n)
        mc = None
        if samples is not None:
            mc = samples.estimate_below(_safe_root_q(outage.q_threshold, cfg, eta))
        return _row(
            n,
            outage.op_ee_gamma(cfg, model, eta),
            outage.op_ee_clt(cfg, model, eta),
            mc,
            convergence.berry_esseen_bound(model, n),
        )

    return _map(point, spec.sweep.integer_values(), spec.workers)


def _berry_esseen(spec):
    model = spec.channel_model()
    eta = outage.EeThreshold(spec.eta_th)
    ns = spec.sweep.integer_values()

    def point(n):
        (report,) = convergence.approximation_error_sweep(
            spec.system(), model, [n], eta, spec.grid_size, spec.trials, spec.seed
        )
        cfg = spec.system(n=n)
        row = _row(
            n,
            outage.op_ee_gamma(cfg, model, eta),
            outage.op_ee_clt(cfg, model, eta),
            None,
            report.bound,
        )
        if spec.trials:
            row["op_mc"] = _samples(spec, n).estimate_below(
                _safe_root_q(outage.q_threshold, cfg, eta)
            ).estimate
            row["mc_stderr"] = math.sqrt(row["op_mc"] * (1 - row["op_mc"]) / spec.trials)
        extra = {
            "gap_sup": report.empirical_gap,
            "gap_at_threshold": report.gap_at_threshold,
            "mc_gap_sup": report.mc_gap,
            "mc_gap_stderr": report.mc_stderr,
        }
        return row, extra

    results = _map(point, ns, spec.workers)
    return [r for r, _ in results], [e for _, e in results]


def _optimize(spec):
    problem = optimize.OptimizationProblem(
        spec.system(), spec.channel_model(), outage.EeThreshold(spec.eta_th), spec.p_max
    )
    opt = optimize.minimize_op(problem)
    return {
        "p_star_w": opt.p_star,
        "p_star_dbm": outage.watts_to_dbm(opt.p_star),
        "op_star": opt.op_star,
        "iterations": opt.iterations,
        "bracket_width": opt.bracket_width,
        "at_boundary": opt.at_boundary,
    }


def _required_n(spec):
    model = spec.channel_model()
    eta = outage.EeThreshold(spec.eta_th)

    def point(target):
        n = optimize.required_elements(spec.system(), model, eta, spec.p_tx, target, spec.n_max)
        return {"op_target": target, "n_required": n}

    return _map(point, spec.op_targets, spec.workers)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


def execute(spec: ExperimentSpec) -> tuple[dict, int]:
    """Run an experiment; returns (result document, exit status)."""
    # worker count and destination never change results
    echoed = spec.to_dict()
    echoed.pop("workers")
    echoed.pop("out", None)
    doc = {"experiment": spec.experiment, "spec": echoed}
    status = EXIT_OK
    exp = spec.experiment
    if exp in ("sweep-power-ee", "sweep-power-rate", "validate"):
        doc["rows"] = _power_sweep(spec, rate=exp == "sweep-power-rate")
        doc["columns"] = CSV_HEADER.split(",")
        if exp == "validate":
            if not spec.trials:
                raise SpecError("validate: trials must be > 0", field="trials")
            diff = max(abs(r["op_gamma"] - r["op_mc"]) for r in doc["rows"])
            doc["max_abs_diff"] = diff
            doc["tol"] = spec.tol
            doc["passed"] = diff <= spec.tol
            status = EXIT_OK if doc["passed"] else EXIT_VALIDATION
    elif exp == "sweep-n":
        doc["rows"] = _n_sweep(spec)
        doc["columns"] = CSV_HEADER.split(",")
    elif exp == "berry-esseen":
        doc["rows"], doc["gaps"] = _berry_esseen(spec)
        doc["columns"] = CSV_HEADER.split(",")
    elif exp == "optimize":
        doc["rows"] = [_optimize(spec)]
        doc["columns"] = list(doc["rows"][0])
    else:
        doc["rows"] = _required_n(spec)
        doc["columns"] = ["op_target", "n_required"]
    return doc, status


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"
    return _csv_text(doc["columns"], doc["rows"])


def run(spec: ExperimentSpec) -> int:
    """Execute `spec`, write its output, return the process exit status."""
    doc, status = execute(spec)
    text = render(doc, spec.format)
    if spec.out:
        Path(spec.out).write_text(text)
    else:
        sys.stdout.write(text)
    if spec.experiment == "validate":
        summary = {k: doc[k] for k in ("max_abs_diff", "tol", "passed")}
        sys.stderr.write(json.dumps(summary) + "\n")
    return status


def _fail(kind, message, code, **extra):
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message, **extra}}) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        spec = parse_config(argv)
        return run(spec)
    except SpecError as exc:
        sys.stderr.write(json.dumps({"error": exc.to_dict()}) + "\n")
        return EXIT_USAGE
    except (
        ArithmeticError,
        SpecialFunctionError,
        optimize.NotAchievableError,
        ValueError,
    ) as exc:
        return _fail("numerical_error", str(exc), EXIT_NUMERICAL, exception=type(exc).__name__)
    except OSError as exc:
        return _fail("io_error", str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
