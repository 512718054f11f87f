"""Command line interface: evaluation, tables, figure data and MC checks.

Exit codes: 0 success, 2 flag or domain error, 3 I/O error, 4 solver
failure, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import svgplot
from .models import (
    ModelSpec,
    Variant,
    bessel_characteristics,
    kstar_experiment,
    m_of,
    phi_mu,
    sup_m,
)
from .montecarlo import (
    SimConfig,
    estimate_m_marginal,
    estimate_m_path,
    estimate_phi_brownian,
    quarter_run,
)
from .numerics import BracketError, ConvergenceError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4, 5

FIGURE1_K = tuple(round(0.1 * i, 10) for i in range(1, 11))
FIGURE2_MU = (0.5, 1.0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5)
FIGURE1_T = (0.0, 5.0, 500)
FIGURE2_Z = (0.0, 12.0, 601)
FIGURE3_MU = tuple(round(0.1 * i, 10) for i in range(1, 101))
PATH_ALLOWANCE = 0.002
QUARTER_WINDOW = (0.2490, 0.2500)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunReport:
    command: str
    parameters: dict
    outputs: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    def check(self, name: str, passed: bool, measured: float, tolerance: float) -> bool:
        self.checks.append(
            {"name": name, "pass": bool(passed), "measured": measured, "tolerance": tolerance}
        )
        return passed

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


# ---------------------------------------------------------------------------
# formatting and files
# ---------------------------------------------------------------------------


def fmt(x: float) -> str:
    """Shortest text that reads back to the same double."""
    return repr(float(x))


def csv_text(header: Sequence[str], rows, comments: Sequence[str] = ()) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    lines += [f"# {c}" for c in comments]
    return "\n".join(lines) + "\n"


def write_text(path: str | Path, text: str) -> str:
    try:
        p = Path(path)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from exc
    return str(path)


def read_csv(path: str | Path) -> tuple[list[str], list[list[float]], list[str]]:
    """Parse a numeric CSV as written by :func:`csv_text`.

    ``#`` comment lines are accepted only after the data.  Raises
    :class:`CliError` (exit 3) naming the offending line.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].strip():
        raise CliError(f"{path}:1: missing header", EXIT_IO)
    header = lines[0].split(",")
    rows, comments = [], []
    for n, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        if comments:
            raise CliError(f"{path}:{n}: data after comment lines", EXIT_IO)
        cells = line.split(",")
        if len(cells) != len(header):
            raise CliError(f"{path}:{n}: expected {len(header)} fields, got {len(cells)}", EXIT_IO)
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise CliError(f"{path}:{n}: non-numeric field", EXIT_IO) from None
    return header, rows, comments


# ---------------------------------------------------------------------------
# flag handling
# ---------------------------------------------------------------------------


def model_from_args(args) -> ModelSpec:
    if args.model is None:
        raise CliError("--model is required", EXIT_USAGE)
    if args.model == "exp":
        if args.K is None:
            raise CliError("--K is required for --model exp", EXIT_USAGE)
        if not 0 < args.K <= 1:
            raise CliError(f"--K must lie in (0, 1], got {args.K:g}", EXIT_USAGE)
        return ModelSpec.exp(args.K)
    if args.a is None:
        raise CliError(f"--a is required for --model {args.model}", EXIT_USAGE)
    if not (args.a > 0 and math.isfinite(args.a)):
        raise CliError(f"--a must be positive, got {args.a:g}", EXIT_USAGE)
    if args.model == "bhit":
        return ModelSpec.brownian_hit(args.a)
    if args.mu is None:
        raise CliError("--mu is required for --model bessel", EXIT_USAGE)
    if not (args.mu > 0 and math.isfinite(args.mu)):
        raise CliError(f"--mu must be positive, got {args.mu:g}", EXIT_USAGE)
    return ModelSpec.bessel(args.mu, args.a)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _model_params(model: ModelSpec) -> dict:
    return {"model": model.variant.value, "K": model.K, "a": model.a, "mu": model.mu}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_eval(args) -> RunReport:
    model = model_from_args(args)
    if args.t is None or not args.t >= 0:
        raise CliError("--t must be given and nonnegative", EXIT_USAGE)
    value = m_of(model, args.t)
    print(f"{value:.12g}")
    report = RunReport("eval", {**_model_params(model), "t": args.t})
    report.check("range", 0.0 <= value <= 0.25, value, 0.25)
    return report


def _curve_rows(model: ModelSpec, t_min: float, t_max: float, points: int):
    ts = np.linspace(t_min, t_max, points)
    return [(float(t), m_of(model, float(t))) for t in ts]


def _preset_curves(preset: str, out_dir: Path) -> list[str]:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out_dir}: {exc.strerror or exc}", EXIT_IO) from exc
    written = []
    if preset == "figure1":
        lo, hi, n = FIGURE1_T
        for K in FIGURE1_K:
            rows = _curve_rows(ModelSpec.exp(K), lo, hi, n)
            written.append(write_text(out_dir / f"m_K{K:.1f}.csv", csv_text(("t", "m"), rows)))
    elif preset == "figure2":
        lo, hi, n = FIGURE2_Z
        zs = np.linspace(lo, hi, n)
        for mu in FIGURE2_MU:
            rows = [(float(z), phi_mu(mu, float(z))) for z in zs]
            written.append(write_text(out_dir / f"phi_mu{mu:g}.csv", csv_text(("x", "y"), rows)))
    elif preset == "figure3":
        chars = [bessel_characteristics(mu) for mu in FIGURE3_MU]
        written.append(write_text(out_dir / "m_mu.csv", csv_text(("x", "y"), [(c.mu, c.m_mu) for c in chars])))
        written.append(
            write_text(out_dir / "m_prime_mu.csv", csv_text(("x", "y"), [(c.mu, c.m_prime_mu) for c in chars]))
        )
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown preset {preset!r}", EXIT_USAGE)
    return written


def cmd_curve(args) -> RunReport:
    if args.out is None:
        raise CliError("--out is required", EXIT_USAGE)
    if args.preset:
        written = _preset_curves(args.preset, Path(args.out))
        report = RunReport("curve", {"preset": args.preset}, outputs=written)
        for path in written:
            _, rows, _ = read_csv(path)
            ys = [r[1] for r in rows]
            if args.preset != "figure3":
                report.check(f"range:{Path(path).name}", all(0 <= y <= 0.25 for y in ys), max(ys), 0.25)
        return report
    model = model_from_args(args)
    if not 0 <= args.t_min < args.t_max:
        raise CliError("need 0 <= --t-min < --t-max", EXIT_USAGE)
    if args.points < 2:
        raise CliError("--points must be at least 2", EXIT_USAGE)
    rows = _curve_rows(model, args.t_min, args.t_max, args.points)
    path = write_text(args.out, csv_text(("t", "m"), rows))
    report = RunReport(
        "curve",
        {**_model_params(model), "t_min": args.t_min, "t_max": args.t_max, "points": args.points},
        outputs=[path],
    )
    report.check("range", all(0 <= m <= 0.25 for _, m in rows), max(m for _, m in rows), 0.25)
    return report


def cmd_table(args) -> RunReport:
    mus = args.mu_list if args.mu_list else list(FIGURE2_MU)
    if any(not mu > 0 for mu in mus):
        raise CliError("--mu-list values must be positive", EXIT_USAGE)
    rows = []
    for mu in mus:
        try:
            c = bessel_characteristics(mu)
        except (BracketError, ConvergenceError, ArithmeticError) as exc:
            raise CliError(f"solver failed for mu={mu:g}: {exc}", EXIT_SOLVER) from exc
        rows.append((c.mu, c.z_mu, c.m_mu, c.m_prime_mu))
    text = csv_text(("mu", "z_mu", "m_mu", "m_prime_mu"), rows)
    outputs = []
    if args.out:
        outputs.append(write_text(args.out, text))
    else:
        sys.stdout.write(text)
    report = RunReport("table", {"mu": mus}, outputs=outputs)
    for mu, _, m, mp in rows:
        report.check(f"m_mu<=m_prime_mu:{mu:g}", m <= mp, m, mp)
    return report


def cmd_sup(args) -> RunReport:
    model = model_from_args(args)
    res = sup_m(model)
    print(f"t_star={res.t_star:.12g} m_star={res.m_star:.12g}" + (" at_edge" if res.at_edge else ""))
    report = RunReport("sup", _model_params(model))
    report.check("m_star<=1/4", res.m_star <= 0.25, res.m_star, 0.25)
    return report


def _sim_config(args) -> SimConfig:
    if args.paths < 1000:
        raise CliError("--paths must be at least 1000", EXIT_USAGE)
    if not args.dt > 0:
        raise CliError("--dt must be positive", EXIT_USAGE)
    if not 0 <= args.seed < 2**64:
        raise CliError("--seed must be a 64-bit unsigned integer", EXIT_USAGE)
    return SimConfig(seed=args.seed, n_paths=args.paths, dt=args.dt, n_streams=args.streams)


def verify_payload(model: ModelSpec, t: float, cfg: SimConfig) -> dict:
    """Closed form against marginal and path Monte Carlo, as a flat dict."""
    closed = m_of(model, t)
    if model.variant is Variant.BHIT:
        x = model.a / math.sqrt(t)
        phi = estimate_phi_brownian(x, cfg.n_paths, cfg.seed)
        marginal, se = phi.mean / x**2, phi.std_error / x**2
    else:
        est = estimate_m_marginal(model, t, cfg.n_paths, cfg.seed)
        marginal, se = est.mean, est.std_error
    d = model.dimension
    path_ok = d is None or abs(d - round(d)) < 1e-12
    mc_path = se_path = z_path = None
    passed = abs(marginal - closed) <= 3.0 * se
    if path_ok:
        pe = estimate_m_path(model, t, cfg)
        mc_path, se_path = pe.mean, pe.std_error
        z_path = (mc_path - closed) / se_path if se_path > 0 else 0.0
        passed = passed and abs(mc_path - closed) <= 3.0 * se_path + PATH_ALLOWANCE
    return {
        **_model_params(model),
        "t": t,
        "seed": cfg.seed,
        "paths": cfg.n_paths,
        "dt": cfg.dt,
        "closed_form": closed,
        "mc_marginal": marginal,
        "se": se,
        "z_score": (marginal - closed) / se if se > 0 else 0.0,
        "mc_path": mc_path,
        "se_path": se_path,
        "z_score_path": z_path,
        "pass": bool(passed),
    }


def _emit_json(payload: dict, out: str | None) -> list[str]:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        return [write_text(out, text)]
    sys.stdout.write(text)
    return []


def cmd_verify(args) -> RunReport:
    model = model_from_args(args)
    if args.t is None or not args.t > 0:
        raise CliError("--t must be given and positive", EXIT_USAGE)
    cfg = _sim_config(args)
    payload = verify_payload(model, args.t, cfg)
    report = RunReport("verify", {**_model_params(model), "t": args.t}, outputs=_emit_json(payload, args.out))
    report.check("marginal", abs(payload["z_score"]) <= 3.0, payload["z_score"], 3.0)
    if payload["mc_path"] is not None:
        gap = abs(payload["mc_path"] - payload["closed_form"])
        report.check("path", gap <= 3 * payload["se_path"] + PATH_ALLOWANCE, gap,
                     3 * payload["se_path"] + PATH_ALLOWANCE)
    if not payload["pass"]:
        report.exit_code = EXIT_VERIFY
    return report


def cmd_experiment_kstar(args) -> RunReport:
    ks = args.k_grid if args.k_grid else list(FIGURE1_K)
    if any(not 0 < k <= 1 for k in ks):
        raise CliError("--k-grid values must lie in (0, 1]", EXIT_USAGE)
    if any(k1 <= k0 for k0, k1 in zip(ks, ks[1:])):
        raise CliError("--k-grid must be strictly increasing", EXIT_USAGE)
    exp = kstar_experiment(ks)
    flag = "true" if exp.monotone_nondecreasing else "false"
    text = csv_text(("K", "t_star", "m_star"), exp.table(), comments=[f"monotone_nondecreasing={flag}"])
    outputs = []
    if args.out:
        outputs.append(write_text(args.out, text))
    else:
        sys.stdout.write(text)
    report = RunReport("experiment-kstar", {"K": ks}, outputs=outputs)
    report.check("m_star<=1/4", all(r.m_star <= 0.25 for r in exp.rows), max(r.m_star for r in exp.rows), 0.25)
    return report


def quarter_payload(cfg: SimConfig, K: float = 0.5) -> dict:
    """Both quarter laws for the exp model, plus refinement on common paths."""
    model = ModelSpec.exp(K)
    strides = (100, 10, 1)
    sups, level = quarter_run(model, cfg, strides=strides, level=0.5)
    means = [float(s.mean()) for s in sups]
    fine = sups[-1]
    n = fine.size
    sup_mean, sup_se = means[-1], float(fine.std(ddof=1) / math.sqrt(n))
    lvl_mean, lvl_se = float(level.mean()), float(level.std(ddof=1) / math.sqrt(n))
    lo, hi = QUARTER_WINDOW
    per_path_max = float(sups.max())
    monotone = bool(all(b >= a for a, b in zip(means, means[1:])))
    passed = lo <= sup_mean <= hi and lo <= lvl_mean <= hi and per_path_max <= 0.25 and monotone
    return {
        "model": "exp",
        "K": K,
        "seed": cfg.seed,
        "paths": cfg.n_paths,
        "dt": cfg.dt,
        "sup_zz": sup_mean,
        "sup_zz_se": sup_se,
        "level_hit": lvl_mean,
        "level_hit_se": lvl_se,
        "window_low": lo,
        "window_high": hi,
        "per_path_max": per_path_max,
        "sup_zz_dt_x100": means[0],
        "sup_zz_dt_x10": means[1],
        "refinement_monotone": monotone,
        "pass": bool(passed),
    }


def cmd_quarter_checks(args) -> RunReport:
    cfg = _sim_config(args)
    payload = quarter_payload(cfg)
    report = RunReport("quarter-checks", {"seed": cfg.seed, "paths": cfg.n_paths, "dt": cfg.dt},
                       outputs=_emit_json(payload, args.out))
    lo, hi = QUARTER_WINDOW
    report.check("sup_zz in window", lo <= payload["sup_zz"] <= hi, payload["sup_zz"], lo)
    report.check("level_hit in window", lo <= payload["level_hit"] <= hi, payload["level_hit"], lo)
    report.check("per-path max <= 1/4", payload["per_path_max"] <= 0.25, payload["per_path_max"], 0.25)
    report.check("refinement monotone", payload["refinement_monotone"], payload["sup_zz"], 0.0)
    if not payload["pass"]:
        report.exit_code = EXIT_VERIFY
    return report


def cmd_plot(args) -> RunReport:
    if args.out is None:
        raise CliError("--out is required", EXIT_USAGE)
    series = []
    labels = None
    for path in args.inputs:
        header, rows, _ = read_csv(path)
        if len(header) != 2:
            raise CliError(f"{path}:1: expected two columns (x,y or t,m)", EXIT_IO)
        labels = labels or header
        series.append((Path(path).stem, [r[0] for r in rows], [r[1] for r in rows]))
    labels = labels or ["x", "y"]
    svg = svgplot.render(series, xlabel=labels[0], ylabel=labels[1])
    return RunReport("plot", {"inputs": list(args.inputs)}, outputs=[write_text(args.out, svg)])


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 2, as argparse does, but via CliError
        raise CliError(f"{self.prog}: {message}", EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nstime", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_flags(p):
        p.add_argument("--model", choices=("exp", "bhit", "bessel"))
        p.add_argument("--K", type=float)
        p.add_argument("--a", type=float)
        p.add_argument("--mu", type=float)

    def sim_flags(p, paths, dt):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--paths", type=int, default=paths)
        p.add_argument("--dt", type=float, default=dt)
        p.add_argument("--streams", type=int, default=8)

    def common(p):
        p.add_argument("--report", help="also write the run report (JSON) here")

    p = sub.add_parser("eval", help="print m(t)")
    model_flags(p)
    p.add_argument("--t", type=float)
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curve", help="write m(t) on a grid as CSV")
    model_flags(p)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--preset", choices=("figure1", "figure2", "figure3"))
    p.add_argument("--out", help="CSV file, or directory for --preset")
    common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("table", help="z_mu, m_mu, m'_mu per mu")
    p.add_argument("--mu-list", type=_float_list)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("sup", help="locate sup_t m(t)")
    model_flags(p)
    common(p)
    p.set_defaults(func=cmd_sup)

    p = sub.add_parser("verify", help="closed form against Monte Carlo")
    model_flags(p)
    p.add_argument("--t", type=float)
    sim_flags(p, paths=20_000, dt=1e-3)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment-kstar", help="sup_t m_K(t) along a K grid")
    p.add_argument("--k-grid", type=_float_list)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_experiment_kstar)

    p = sub.add_parser("quarter-checks", help="the two quarter laws by simulation")
    sim_flags(p, paths=20_000, dt=1e-4)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_quarter_checks)

    p = sub.add_parser("plot", help="render CSV curves to SVG")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report = args.func(args)
        if args.report:
            write_text(args.report, report.to_json())
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return getattr(report, "exit_code", EXIT_OK)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
