"""Command-line front end: ``clicksim {validate,run,g2} --config FILE``.

Exit codes: 0 success, 1 configuration/validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .detector import ThresholdSpec
from .exceptions import ClickSimError, ParseError, WrongChannelCount
from .experiment import (
    DEFAULT_TAU_STEPS,
    ExperimentConfig,
    coincidence_count,
    g2_from_counts,
    run_experiment,
)
from .linalg import trace_power, verify_factor
from .quantum import born_probabilities, density_from_covariance, expected_hitting_time

log = logging.getLogger("clicksim")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def _complex_grid(raw, name, dim):
    if not isinstance(raw, list) or len(raw) != dim:
        raise ParseError(f"expected {dim} rows", field=name)
    out = np.empty((dim, dim), dtype=np.complex128)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"row {i} must have {dim} entries", field=name)
        for j, z in enumerate(row):
            loc = f"{name}[{i}][{j}]"
            if not isinstance(z, dict) or "re" not in z or set(z) - {"re", "im"}:
                raise ParseError('entries must be objects {"re": x, "im": y}', field=loc)
            try:
                out[i, j] = complex(float(z["re"]), float(z.get("im", 0.0)))
            except (TypeError, ValueError):
                raise ParseError("non-numeric entry", field=loc) from None
    return out


def _number(data, key, kind, default=None):
    if key not in data:
        if default is None:
            raise ParseError("missing required field", field=key)
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not isinstance(v, int)):
        raise ParseError(f"expected {kind.__name__}", field=key)
    return kind(v)


def config_from_dict(data: dict, seed_override: int | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ParseError("top level must be a JSON object")
    dim = _number(data, "dim", int)
    if dim < 1:
        raise ParseError("dim must be positive", field="dim")
    if "covariance" not in data:
        raise ParseError("missing required field", field="covariance")
    cov = _complex_grid(data["covariance"], "covariance", dim)
    factor = _complex_grid(data["factor"], "factor", dim) if data.get("factor") is not None else None

    th = data.get("threshold")
    if not isinstance(th, dict) or len(th) != 1 or next(iter(th)) not in ("absolute", "trace_fraction"):
        raise ParseError('expected {"absolute": x} or {"trace_fraction": x}', field="threshold")
    kind, value = next(iter(th.items()))
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ParseError("threshold must be a positive number", field=f"threshold.{kind}")

    taus = data.get("tau_steps", list(DEFAULT_TAU_STEPS))
    if not isinstance(taus, list) or not all(isinstance(t, int) and not isinstance(t, bool) and t >= 0 for t in taus):
        raise ParseError("expected a list of nonnegative integers", field="tau_steps")

    if seed_override is None:
        seed = _number(data, "seed", int)
    else:
        seed = int(seed_override)

    return ExperimentConfig(
        covariance=cov,
        factor=factor,
        threshold=ThresholdSpec(kind, float(value)),
        dt=_number(data, "dt", float, 1e-3),
        horizon_steps=_number(data, "horizon_steps", int),
        tau_steps=tuple(taus),
        seed=seed,
        n_workers=_number(data, "workers", int, 1),
    )


def parse_config(path, seed_override: int | None = None) -> ExperimentConfig:
    """Load a JSON experiment file. Raises ``OSError`` if it cannot be read."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return config_from_dict(data, seed_override)


def _grid_to_json(a):
    return [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in np.asarray(a)]


def config_echo(cfg: ExperimentConfig) -> dict:
    return {
        "dim": cfg.dim,
        "covariance": _grid_to_json(cfg.covariance),
        "factor": _grid_to_json(cfg.factor),
        "threshold": cfg.threshold.to_dict(),
        "dt": cfg.dt,
        "horizon_steps": cfg.horizon_steps,
        "tau_steps": list(cfg.tau_steps),
        "seed": cfg.seed,
        "workers": cfg.n_workers,
    }


@dataclass
class RunReport:
    config: dict
    threshold: float
    total_clicks: int
    channels: list = field(default_factory=list)
    coincidences: list = field(default_factory=list)
    wall_seconds: float = 0.0
    steps_per_second: float = 0.0

    def to_dict(self):
        return asdict(self)


def _fmt(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _frequency_rows(cfg, counts):
    born = born_probabilities(density_from_covariance(cfg.covariance))
    total = int(counts.sum())
    rows = []
    if total == 0:
        return rows, born, None
    freq = counts / total
    for j in range(cfg.dim):
        rows.append([j, int(counts[j]), _fmt(freq[j]), _fmt(born[j]), _fmt(abs(freq[j] - born[j]))])
    return rows, born, freq


def _g2_rows(cfg, click_log):
    n1, n2 = (int(x) for x in click_log.counts)
    rows = []
    for tau in cfg.tau_steps:
        n12 = coincidence_count(click_log, tau)
        g2 = g2_from_counts(n1, n2, n12) if n1 > 0 and n2 > 0 else float("nan")
        rows.append([tau, n1, n2, n12, _fmt(g2)])
    return rows


def cmd_validate(cfg: ExperimentConfig, out=None) -> dict:
    """Check covariance and factor and print rho and Born probabilities."""
    rho = density_from_covariance(cfg.covariance)
    check = verify_factor(cfg.factor, cfg.covariance)
    report = {
        "dim": cfg.dim,
        "trace": trace_power(cfg.covariance),
        "threshold": cfg.threshold_value,
        "factor_residual": check.residual,
        "factor_ok": check.ok,
        "rho": _grid_to_json(rho),
        "born": [float(p) for p in born_probabilities(rho)],
    }
    print(json.dumps(report, indent=2), file=out or sys.stdout)
    return report


def cmd_run(cfg: ExperimentConfig, out_dir, emit_clicks=False) -> RunReport:
    """Simulate, then write report.json, frequencies.csv and optionally clicks.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    click_log = run_experiment(cfg)
    wall = time.perf_counter() - t0

    counts = click_log.counts
    rows, born, freq = _frequency_rows(cfg, counts)
    Ed = cfg.threshold_value
    b = np.real(np.diag(cfg.covariance))
    channels = []
    for j in range(cfg.dim):
        s = click_log.steps[j]
        channels.append({
            "channel": j,
            "clicks": int(counts[j]),
            "frequency": None if freq is None else float(freq[j]),
            "born": float(born[j]),
            "abs_error": None if freq is None else float(abs(freq[j] - born[j])),
            "mean_hitting_time": float(np.diff(s).mean() * cfg.dt) if s.size >= 2 else None,
            "expected_hitting_time": float(expected_hitting_time(b[j], Ed)) if b[j] > 0 else None,
        })
    coincidences = []
    if cfg.dim == 2:
        coincidences = [{"tau_steps": r[0], "n12": r[3], "g2": None if r[4] == "nan" else float(r[4])}
                        for r in _g2_rows(cfg, click_log)]
    report = RunReport(
        config=config_echo(cfg),
        threshold=Ed,
        total_clicks=click_log.total,
        channels=channels,
        coincidences=coincidences,
        wall_seconds=wall,
        steps_per_second=cfg.horizon_steps / wall if wall > 0 else 0.0,
    )

    _write_csv(out_dir / "frequencies.csv", ["channel", "clicks", "frequency", "born", "abs_error"], rows)
    if emit_clicks:
        ch, st = click_log.events()
        _write_csv(out_dir / "clicks.csv", ["channel", "step"], zip(ch.tolist(), st.tolist()))
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return report


def cmd_g2(cfg: ExperimentConfig, out_dir) -> list:
    """Simulate a two-channel run and write g2.csv over ``cfg.tau_steps``."""
    if cfg.dim != 2:
        raise WrongChannelCount(f"g2 needs a 2-channel configuration, got dim={cfg.dim}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _g2_rows(cfg, run_experiment(cfg))
    _write_csv(out_dir / "g2.csv", ["tau_steps", "n1", "n2", "n12", "g2"], rows)
    return rows


def build_parser():
    parser = argparse.ArgumentParser(prog="clicksim", description="Threshold-detector click simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("validate", "check a configuration and print Born probabilities"),
                        ("run", "simulate and write click frequencies"),
                        ("g2", "simulate and write the g2(0; tau) sweep")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, type=Path, help="JSON experiment file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if name != "validate":
            p.add_argument("--out", required=True, type=Path, help="output directory")
        if name == "run":
            p.add_argument("--emit-clicks", action="store_true", help="also write clicks.csv")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, seed_override=args.seed)
        if args.command == "validate":
            cmd_validate(cfg)
        elif args.command == "run":
            report = cmd_run(cfg, args.out, emit_clicks=args.emit_clicks)
            for ch in report.channels:
                print(f"channel {ch['channel']}: clicks={ch['clicks']} "
                      f"frequency={ch['frequency']} born={ch['born']:.6f}")
        else:
            for tau, n1, n2, n12, g2 in cmd_g2(cfg, args.out):
                print(f"tau={tau} n12={n12} g2={g2}")
    except (ClickSimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
