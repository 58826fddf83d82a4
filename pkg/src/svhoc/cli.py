"""Command line entry point ``price``.

    price run [--config FILE] [--model NAME | --ab A,B] [--mode adaptive|equidistant:N] ...
    price mc [--config FILE] --paths P --steps S --seed K
    price summarize REPORT_DIR

Defaults reproduce the GARCH experiment: K=100, T=2, r=0.05, sigma=0.3,
kappa=1.1, theta=0.3, rho=-0.4 on (S, v) in (1.5, 600) x (0.1, 0.5) with
N=201, threshold 1e-3 and beta=0.01.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from svhoc.controller import ControllerConfig
from svhoc.errors import ConfigurationError, PricingError
from svhoc.model import NAMED_MODELS, ModelParams
from svhoc.montecarlo import mc_reference_price
from svhoc.report import ReportIOError, read_series, summarize_grid, write_report
from svhoc.solver import price_european_put

log = logging.getLogger("svhoc")


@dataclass(frozen=True)
class RunConfig:
    model: str = "garch"
    a: float | None = None
    b: float | None = None
    kappa: float = 1.1
    theta: float = 0.3
    sigma: float = 0.3
    rho: float = -0.4
    r: float = 0.05
    strike: float = 100.0
    maturity: float = 2.0
    S_lo: float = 1.5
    S_hi: float = 600.0
    v_lo: float = 0.1
    v_hi: float = 0.5
    N: int = 201
    epsilon_hat: float = 1e-3
    beta: float = 0.01
    norm: str = "l2"
    mode: str = "adaptive"
    smoothing: bool = True
    compare: bool = False
    output_dir: str = "out"
    prices: str = "90:0.3,100:0.3,110:0.3"
    seed: int = 0
    paths: int = 100_000
    steps: int = 500

    def __post_init__(self):
        if (self.a is None) != (self.b is None):
            raise ConfigurationError("a/b: give both exponents or neither")
        if self.a is None and self.model.lower() not in NAMED_MODELS:
            raise ConfigurationError(f"model: unknown model {self.model!r}")
        if self.N < 5:
            raise ConfigurationError(f"N: must be >= 5 (got {self.N})")
        n = self.equidistant_count
        if n is not None and n < 5:
            raise ConfigurationError(f"mode: equidistant count must be >= 5 (got {n})")
        self.model_params()
        self.controller()
        self.price_points()

    @property
    def equidistant_count(self) -> int | None:
        mode = self.mode.strip().lower()
        if mode == "adaptive":
            return None
        if mode.startswith("equidistant:"):
            try:
                return int(mode.split(":", 1)[1])
            except ValueError:
                pass
        raise ConfigurationError(f"mode: expected 'adaptive' or 'equidistant:<n>' (got {self.mode!r})")

    def model_params(self) -> ModelParams:
        a, b = (self.a, self.b) if self.a is not None else NAMED_MODELS[self.model.lower()]
        return ModelParams(a=a, b=b, kappa=self.kappa, theta=self.theta, sigma=self.sigma, rho=self.rho,
                           r=self.r, strike=self.strike, maturity=self.maturity)

    def controller(self) -> ControllerConfig:
        return ControllerConfig(epsilon_hat=self.epsilon_hat, beta=self.beta, norm=self.norm)

    def price_points(self) -> list[tuple[float, float]]:
        pts = []
        for item in filter(None, (s.strip() for s in self.prices.split(","))):
            try:
                S, v = item.split(":")
                pts.append((float(S), float(v)))
            except ValueError:
                raise ConfigurationError(f"prices: expected 'S:v' pairs, got {item!r}") from None
        return pts


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind.startswith("float"):
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            return configparser.ConfigParser.BOOLEAN_STATES[raw.strip().lower()]
    except (ValueError, KeyError):
        raise ConfigurationError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw.strip()


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Read ``key = value`` lines (an optional ``[price]`` header is allowed)."""
    values = {}
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"config: cannot read {path}: {exc}") from exc
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text if text.lstrip().startswith("[") else "[price]\n" + text)
        except configparser.Error as exc:
            raise ConfigurationError(f"config: {exc}") from exc
        for section in parser.sections():
            for key, raw in parser.items(section):
                if key not in _FIELD_TYPES:
                    raise ConfigurationError(f"{key}: unknown configuration key")
                values[key] = _coerce(key, raw)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**values)


def run_experiment(cfg: RunConfig, write: bool = True):
    p = cfg.model_params()
    t0 = time.perf_counter()
    report = price_european_put(
        p, cfg.price_points(), S_range=(cfg.S_lo, cfg.S_hi), v_range=(cfg.v_lo, cfg.v_hi), N=cfg.N,
        cfg=cfg.controller(), equidistant=cfg.equidistant_count, smoothing=cfg.smoothing,
    )
    compare = None
    if cfg.compare and cfg.equidistant_count is None:
        compare = price_european_put(
            p, [], S_range=(cfg.S_lo, cfg.S_hi), v_range=(cfg.v_lo, cfg.v_hi), N=cfg.N,
            cfg=cfg.controller(), equidistant=len(report.tau), smoothing=cfg.smoothing,
        )
    report.timings["total"] = time.perf_counter() - t0
    if write:
        write_report(report, cfg.output_dir, config_echo=asdict(cfg), compare=compare)
        if compare is not None:
            write_report(compare, Path(cfg.output_dir) / "equidistant",
                         config_echo=asdict(replace(cfg, mode=f"equidistant:{len(report.tau)}")))
    return report


def _print_summary(tau, out=None) -> None:
    out = out or sys.stdout
    s = summarize_grid(tau)
    print("interval,count,fraction", file=out)
    for lo, hi, c, f in s.rows():
        print(f"[{lo:g};{hi:g}],{c},{f:.4f}", file=out)
    print(f"total,{s.total},1.0000", file=out)


def _cmd_run(args) -> int:
    overrides = {
        "model": args.model, "mode": args.mode, "N": args.n, "epsilon_hat": args.threshold,
        "beta": args.beta, "output_dir": args.out,
    }
    if args.ab:
        try:
            a, b = (float(s) for s in args.ab.split(","))
        except ValueError:
            raise ConfigurationError(f"ab: expected 'a,b' (got {args.ab!r})") from None
        overrides.update(a=a, b=b)
    if args.no_smoothing:
        overrides["smoothing"] = False
    if args.compare:
        overrides["compare"] = True
    cfg = load_config(args.config, overrides)
    report = run_experiment(cfg)
    print(f"# {report.mode}: {len(report.tau)} time points, max local error {report.eps_norm.max():.4e}")
    print("S,v,V")
    for S, v, V in report.prices:
        print(f"{S:g},{v:g},{V:.10g}")
    _print_summary(report.tau)
    print(f"# written to {cfg.output_dir}")
    return 0


def _cmd_mc(args) -> int:
    cfg = load_config(args.config, {"paths": args.paths, "steps": args.steps, "seed": args.seed})
    p = cfg.model_params()
    print("S,v,price,stderr")
    for S, v in cfg.price_points():
        price, se = mc_reference_price(p, S, v, paths=cfg.paths, steps=cfg.steps, seed=cfg.seed)
        print(f"{S:g},{v:g},{price:.10g},{se:.6g}")
    return 0


def _cmd_summarize(args) -> int:
    path = Path(args.report_dir) / "time_grid.csv"
    if not path.exists():
        raise ReportIOError(f"no time_grid.csv in {args.report_dir}")
    _print_summary(read_series(path)["tau_n"])
    err = Path(args.report_dir) / "local_error.csv"
    if err.exists():
        e = read_series(err)["eps_norm"]
        print(f"# local error: max {np.max(e):.4e}, median {np.median(e):.4e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="price", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve the pricing PDE and write a report")
    run.add_argument("--config")
    grp = run.add_mutually_exclusive_group()
    grp.add_argument("--model", help=f"one of {', '.join(sorted(NAMED_MODELS))}")
    grp.add_argument("--ab", help="custom exponents 'a,b'")
    run.add_argument("--mode", help="adaptive or equidistant:<n>")
    run.add_argument("--n", type=int, help="nodes in x")
    run.add_argument("--threshold", type=float, help="local error threshold")
    run.add_argument("--beta", type=float)
    run.add_argument("--out", help="output directory")
    run.add_argument("--no-smoothing", action="store_true")
    run.add_argument("--compare", action="store_true", help="also run equidistant steps with the same count")
    run.set_defaults(func=_cmd_run)

    mc = sub.add_parser("mc", help="Monte-Carlo reference prices")
    mc.add_argument("--config")
    mc.add_argument("--paths", type=int)
    mc.add_argument("--steps", type=int)
    mc.add_argument("--seed", type=int)
    mc.set_defaults(func=_cmd_mc)

    sm = sub.add_parser("summarize", help="time-grid distribution of a written report")
    sm.add_argument("report_dir")
    sm.set_defaults(func=_cmd_summarize)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except PricingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ReportIOError.exit_code


if __name__ == "__main__":
    sys.exit(main())
