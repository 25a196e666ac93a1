"""Command-line interface: ``estimate``, ``simulate`` and ``diagnose``.

Exit codes: 0 success, 2 unparseable input or invalid field, 3 bad smoothing
span, 4 degenerate market series.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import MarketMode, Target, condition_numbers, fourier_frequency, full_grid, half_grid, nearest_fourier
from .errors import ConfigurationError, DegenerateRegressorError, SpecShrinkError, ValidationError
from .io import diagnostics_csv, fmt, manifest, read_panel_csv, spectral_csv, write_json
from .periodogram import build_market
from .shrinkage import IntensityRule, ddsse_identity, estimate
from .simulation import PRESETS, RunSpec

log = logging.getLogger("specshrink")

EXIT_INPUT = 2
EXIT_SPAN = 3
EXIT_MARKET = 4


def _market(series, spec: str):
    if spec == "mean":
        return build_market(series, MarketMode.MEAN)
    if spec.startswith("col:"):
        try:
            k = int(spec[4:])
        except ValueError:
            raise ValidationError(f"bad market column {spec!r}") from None
        return build_market(series, MarketMode.COLUMN, column=k)
    if spec.startswith("file:"):
        return build_market(series, MarketMode.EXTERNAL, path=spec[5:])
    raise ValidationError(f"market must be mean, col:k or file:path, got {spec!r}")


def _frequencies(spec: str, T: int, full_circle: bool) -> np.ndarray:
    if spec == "all":
        return full_grid(T) if full_circle else half_grid(T)
    out = []
    for tok in spec.split(","):
        try:
            w = float(tok)
        except ValueError:
            raise ValidationError(f"bad frequency {tok!r}") from None
        k, _ = nearest_fourier(w, T)
        if k not in out:
            out.append(k)
    return np.array(out)


def _inputs_for_market(args):
    files = [args.input]
    if args.market.startswith("file:"):
        files.append(args.market[5:])
    return files


def cmd_estimate(args) -> int:
    from .core import center

    series = center(read_panel_csv(args.input))
    market = _market(series, args.market)
    indices = _frequencies(args.frequencies, series.T, args.full_circle)
    res = estimate(series, args.span, Target(args.target), market=market, indices=indices,
                   clamp=not args.no_clamp, rule=IntensityRule(args.intensity_rule), centered=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    aug = res.f0_aug if args.include_market else None
    (out / "spectral.csv").write_text(spectral_csv(res.indices, res.estimate, aug))
    (out / "diagnostics.csv").write_text(diagnostics_csv(res.diagnostics, res.condition_numbers()))
    if res.fit is not None:
        (out / "factor_fit.json").write_text(res.fit.to_json() + "\n")
    params = {
        "span": args.span, "target": args.target, "market": args.market, "frequencies": args.frequencies,
        "full_circle": args.full_circle, "include_market": args.include_market,
        "clamp": not args.no_clamp, "intensity_rule": args.intensity_rule,
    }
    write_json(out / "manifest.json", manifest("estimate", params, _inputs_for_market(args)))
    return 0


def _load_runspec(arg: str) -> tuple[RunSpec, dict]:
    if arg in PRESETS:
        d = dict(PRESETS[arg])
    else:
        try:
            d = json.loads(Path(arg).read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read run spec {arg}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"run spec {arg} is not valid JSON: {exc}") from None
        if isinstance(d, dict) and "command" in d and "parameters" in d:  # a manifest
            d = d["parameters"]["runspec"]
    return RunSpec.from_dict(d), d


def cmd_simulate(args) -> int:
    spec, _ = _load_runspec(args.runspec)
    seed = spec.master_seed
    env = os.environ.get("SPECSHRINK_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise ValidationError(f"SPECSHRINK_SEED must be an integer, got {env!r}") from None
    report = spec.run(n_jobs=args.jobs, master_seed=seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mise.csv").write_text(report.to_csv())
    resolved = spec.to_dict()
    resolved["master_seed"] = seed
    write_json(out / "manifest.json",
               manifest("simulate", {"runspec": resolved, "source": args.runspec}, (), seed))
    if report.failures:
        log.warning("%d of %d runs failed; first: %s", len(report.failures), spec.M, report.failures[0][1])
    if args.figures:
        from .plotting import plot_mise_report

        plot_mise_report(report, out / "mise.png",
                         title=f"T = {spec.T}" + (f", m = {spec.m}" if report.sweep_name != "m" else ""))
    return 0


def _parse_spans(text: str) -> list[int]:
    try:
        spans = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"bad span list {text!r}") from None
    if not spans:
        raise ValidationError("empty span list")
    return spans


DIAG_COLUMNS = ("span", "frequency_index", "cond_f0", "cond_ddmse", "cond_ddsse", "cond_target", "zeta_ddmse",
                "zeta_ddsse")


def cmd_diagnose(args) -> int:
    from .core import center, check_span

    series = center(read_panel_csv(args.input))
    spans = _parse_spans(args.span_list)
    for m in spans:
        check_span(m, series.T)
    market = _market(series, args.market)
    indices = half_grid(series.T)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [",".join(DIAG_COLUMNS)]
    summary = ["span,estimator,q10,median,q90,n_singular,n"]
    per_span = {}
    for m in spans:
        res = estimate(series, m, Target.MARKET, market=market, indices=indices,
                       rule=IntensityRule(args.intensity_rule), centered=True)
        ss, z_id = ddsse_identity(res.f0, res.diagnostics.local_variance_total, m)
        conds = {
            "f0": condition_numbers(res.f0),
            "ddmse": condition_numbers(res.estimate),
            "ddsse": condition_numbers(ss),
            "target": condition_numbers(res.f1),
        }
        per_span[m] = conds
        for n, k in enumerate(indices):
            lines.append(",".join([str(m), str(int(k))] + [fmt(conds[c][n]) for c in ("f0", "ddmse", "ddsse", "target")]
                                  + [fmt(res.diagnostics.zeta[n]), fmt(z_id[n])]))
        for name, v in conds.items():
            q = np.quantile(v, [0.1, 0.5, 0.9], method="nearest")  # no interpolation across inf
            summary.append(",".join([str(m), name] + [fmt(x) for x in q] + [str(int(np.sum(~np.isfinite(v)))),
                                                                            str(len(v))]))
        if args.figures:
            from .plotting import plot_condition_numbers

            plot_condition_numbers(fourier_frequency(indices, series.T), conds, out / f"conditions_m{m}.png", m)
    (out / "conditions.csv").write_text("\n".join(lines) + "\n")
    (out / "summary.csv").write_text("\n".join(summary) + "\n")
    write_json(out / "manifest.json",
               manifest("diagnose", {"span_list": spans, "market": args.market,
                                     "intensity_rule": args.intensity_rule}, _inputs_for_market(args)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="specshrink", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("input", help="T-by-p CSV panel (header optional)")
        p.add_argument("--market", default="mean", help="mean | col:k | file:path (default: mean)")
        p.add_argument("--intensity-rule", choices=[r.value for r in IntensityRule], default="risk")
        p.add_argument("--out", required=True, help="output directory")

    e = sub.add_parser("estimate", help="estimate the spectral matrix of a panel")
    common(e)
    e.add_argument("--span", type=int, required=True, help="odd smoothing span m")
    e.add_argument("--target", choices=[t.value for t in Target], default="market")
    e.add_argument("--frequencies", default="all", help="'all' or comma-separated radians")
    e.add_argument("--full-circle", action="store_true", help="use (0, 2pi] instead of (0, pi]")
    e.add_argument("--include-market", action="store_true", help="emit market rows (index 0)")
    e.add_argument("--no-clamp", action="store_true", help="do not clamp the intensity to [0, 1]")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="Monte Carlo MISE study")
    s.add_argument("runspec", help=f"run-spec JSON, a manifest, or a preset ({', '.join(PRESETS)})")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--figures", action="store_true", help="also render mise.png")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("diagnose", help="condition numbers across smoothing spans")
    common(d)
    d.add_argument("--span-list", default="5,19,31")
    d.add_argument("--figures", action="store_true", help="also render one PNG per span")
    d.set_defaults(func=cmd_diagnose)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPAN
    except DegenerateRegressorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MARKET
    except SpecShrinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
