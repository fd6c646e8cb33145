"""``ecomplex`` command line: metrics, correlate, regress, run-all, synth.

Every run writes ``manifest.json`` into the output directory. A manifest
(or any JSON file with the same keys as the flags) can be passed back with
``--config``; flags given on the command line win.

Log verbosity comes from ``ECOMPLEX_LOG_LEVEL`` (default WARNING).
"""

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .advantage import binarize, prune, quadrants, rca
from .errors import ConfigError, EcomplexError
from .harness import SynthSpec, count_matrix_digest, gen_firms, gen_noisy_nested, gen_panel
from .ingest import (
    FIRM_COLUMNS,
    PANEL_COLUMNS,
    build_count_matrix,
    load_provinces,
    parse_firm_records,
    parse_panel,
    write_count_matrix,
)
from .pipeline import (
    CORRELATION_COLUMNS,
    REGRESSION_SPECS,
    development_correlations,
    eci_fitness_series,
    metric_table,
    yearly_scores,
)
from .serialize import (
    atomic_write_text,
    matrix_rows,
    scores_to_dict,
    tidy_industry_rows,
    tidy_region_rows,
    write_csv,
    write_json,
)
from .stats import (
    MetricTable,
    average_window,
    correlation_matrix,
    format_regression_table,
    ols_fixed_effects,
    rank_evolution,
)

log = logging.getLogger("ecomplex")

ANALYSES = ("metrics", "correlate", "regress")


def parse_years(text):
    """``"2000-2015"`` or ``"2010"`` to an inclusive ``(start, end)`` pair."""
    if isinstance(text, (list, tuple)):
        start, end = (int(v) for v in text)
    else:
        text = str(text).strip()
        head, sep, tail = text.partition("-") if "-" in text[1:] else (text, "", text)
        try:
            start, end = int(head), int(tail)
        except ValueError:
            raise ConfigError(f"cannot parse year range {text!r}") from None
    if start > end:
        raise ConfigError(f"empty year range {start}-{end}")
    return start, end


@dataclass
class RunConfig:
    firms: str = None
    panel: str = None
    years: tuple = (2000, 2015)
    window: tuple = (2010, 2015)
    threshold: float = 1.0
    tol: float = 1e-10
    max_iter: int = 10_000
    out: str = "out"
    format: str = "csv"
    analyses: tuple = ANALYSES
    columns: tuple = CORRELATION_COLUMNS
    specs: tuple = tuple(s[0] for s in REGRESSION_SPECS)
    extra: dict = field(default_factory=dict)

    def validate(self):
        self.years = parse_years(self.years)
        self.window = parse_years(self.window)
        if not self.threshold > 0:
            raise ConfigError("threshold must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if int(self.max_iter) < 1:
            raise ConfigError("max-iter must be at least 1")
        if self.format not in ("csv", "structured"):
            raise ConfigError(f"unknown output format {self.format!r}")
        unknown = [a for a in self.analyses if a not in ANALYSES]
        if unknown:
            raise ConfigError(f"unknown analyses {unknown}")
        if len(self.columns) < 2:
            raise ConfigError("correlation needs at least two columns")
        known = {s[0] for s in REGRESSION_SPECS}
        bad = [s for s in self.specs if s not in known]
        if bad:
            raise ConfigError(f"unknown regression specifications {bad}")
        self.max_iter = int(self.max_iter)
        self.threshold = float(self.threshold)
        self.tol = float(self.tol)
        return self

    def year_list(self):
        return list(range(self.years[0], self.years[1] + 1))

    def to_dict(self):
        d = asdict(self)
        d.pop("extra")
        return d


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Output bookkeeping for one invocation."""

    def __init__(self, config):
        self.config = config
        self.out = Path(config.out)
        self.files = []
        self.stages = {}
        self.notes = {}

    def write_csv(self, rel, header, rows):
        write_csv(self.out / rel, header, rows)
        self.files.append(rel)

    def write_json(self, rel, obj):
        write_json(self.out / rel, obj)
        self.files.append(rel)

    def write_text(self, rel, text):
        atomic_write_text(self.out / rel, text)
        self.files.append(rel)

    def manifest(self):
        inputs = {}
        for key in ("firms", "panel"):
            path = getattr(self.config, key)
            if path and Path(path).exists():
                inputs[key] = {"name": Path(path).name, "sha256": _sha256(path)}
        return {
            "tool": "ecomplex",
            "version": __version__,
            "config": self.config.to_dict(),
            "inputs": inputs,
            "stages": self.stages,
            "notes": self.notes,
            "files": sorted(self.files),
        }

    def finish(self):
        write_json(self.out / "manifest.json", self.manifest())
        failed = [k for k, v in self.stages.items() if v["status"] == "failed"]
        return 1 if failed else 0


def _require(path, what):
    if not path:
        raise ConfigError(f"--{what} is required")
    if not Path(path).exists():
        raise FileNotFoundError(f"{what} file not found: {path}")


def _load_scores(config, run, cache):
    if "scores" not in cache:
        _require(config.firms, "firms")
        records = parse_firm_records(config.firms)
        scores, skipped = yearly_scores(
            records, config.year_list(), config.threshold, config.tol, config.max_iter
        )
        if not scores:
            raise EcomplexError(f"no active firms in {config.years[0]}-{config.years[1]}")
        if skipped:
            run.notes["skipped_years"] = skipped
        cache["records"] = records
        cache["scores"] = scores
    return cache["scores"]


def _load_panel(config, cache):
    if "panel" not in cache:
        _require(config.panel, "panel")
        cache["panel"] = parse_panel(config.panel)
    return cache["panel"]


def cmd_metrics(config, run, cache):
    scores = _load_scores(config, run, cache)
    records = cache["records"]
    provinces = load_provinces()
    for s in scores:
        y = s.year
        if config.format == "structured":
            run.write_json(f"metrics/scores_{y}.json", scores_to_dict(s))
        else:
            run.write_csv(f"metrics/scores_{y}.csv", ["year", "region", "metric", "value"], tidy_region_rows(s))
            run.write_csv(
                f"metrics/industries_{y}.csv", ["year", "industry", "metric", "value"], tidy_industry_rows(s)
            )
        counts, _, _ = prune(build_count_matrix(records, y))
        R = rca(counts)
        M = binarize(R, config.threshold)
        run.write_csv(f"metrics/rca_{y}.csv", *matrix_rows(R.regions, R.industries, R.values))
        run.write_csv(f"metrics/advantage_{y}.csv", *matrix_rows(M.regions, M.industries, M.values))
        quads = quadrants(M)
        rows = []
        for a, region in enumerate(M.regions):
            rows.append((region, "diversity", int(M.diversity[a])))
            rows.append((region, "avg_ubiquity", float(M.avg_ubiquity[a])))
            rows.append((region, "quadrant", quads[region].label if quads[region] else ""))
        run.write_csv(f"metrics/quadrants_{y}.csv", ["region", "metric", "value"], rows)

    last = scores[-1]
    run.write_csv(
        f"metrics/eci_map_{last.year}.csv",
        ["region", "name", "eci"],
        [(r, provinces.get(r, ""), float(v)) for r, v in zip(last.regions, last.eci)],
    )
    if len(scores) >= 2:
        summary = []
        for metric in ("eci", "fitness"):
            evo = rank_evolution(scores, metric)
            years = list(evo.ranks.columns)
            run.write_csv(
                f"metrics/rank_evolution_{metric}.csv",
                ["region", *years],
                [(region, *evo.ranks.loc[region].tolist()) for region in evo.ranks.index],
            )
            e = evo.endpoint
            summary.append((metric, evo.first_year, evo.last_year, e.r, e.p, e.n))
        run.write_csv(
            "metrics/rank_endpoints.csv", ["metric", "first_year", "last_year", "r", "p", "n"], summary
        )
    else:
        log.warning("rank evolution needs at least two years; skipped")


def cmd_correlate(config, run, cache):
    scores = _load_scores(config, run, cache)
    panel = _load_panel(config, cache)
    table = metric_table(scores, panel)
    missing = [c for c in config.columns if c not in table.columns]
    if missing:
        raise ConfigError(f"correlation columns not available: {missing}")

    run.write_csv(
        "correlate/eci_fitness_series.csv",
        ["year", "r_values", "p_values", "r_ranks", "p_ranks", "n"],
        eci_fitness_series(scores),
    )
    run.write_csv(
        "correlate/development_correlations.csv",
        ["year", "x", "y", "r", "p", "n", "stars"],
        development_correlations(table, [s.year for s in scores]),
    )

    lo, hi = config.window
    years = [s.year for s in scores if lo <= s.year <= hi]
    columns = list(config.columns)
    if not years:
        log.warning("window %s-%s overlaps no computed year; writing empty outputs", lo, hi)
        run.notes["correlate"] = f"window {lo}-{hi} has no data"
        run.write_csv("correlate/window_means.csv", ["region", *columns], [])
        run.write_csv("correlate/correlation_matrix.csv", ["x", "y", "r", "p", "n", "stars"], [])
        return
    averaged = average_window(table, columns, lo, hi)
    run.write_csv(
        "correlate/window_means.csv",
        ["region", *columns],
        [(region, *averaged.frame.loc[region, columns].tolist()) for region in averaged.frame.index],
    )
    cm = correlation_matrix(averaged, columns)
    run.write_csv("correlate/correlation_matrix.csv", ["x", "y", "r", "p", "n", "stars"], cm.records())


def cmd_regress(config, run, cache):
    scores = _load_scores(config, run, cache)
    panel = _load_panel(config, cache)
    table = metric_table(scores, panel)
    lo, hi = config.window
    frame = table.frame.reset_index()
    frame = frame[(frame["year"] >= lo) & (frame["year"] <= hi)]
    window = MetricTable(frame)
    results, labels, failures = [], [], []
    coef_rows, summary_rows = [], []
    for label, metric, predictors in REGRESSION_SPECS:
        if label not in config.specs:
            continue
        absent = [c for c in ("ln_gdp_pc", *predictors) if window.frame[c].isna().all()]
        if absent:
            failures.append(f"specification ({label}): no data for {absent}")
            continue
        try:
            res = ols_fixed_effects(window, "ln_gdp_pc", list(predictors), fe="year")
        except EcomplexError as exc:
            failures.append(f"specification ({label}): {type(exc).__name__}: {exc}")
            continue
        results.append(res)
        labels.append(f"({label})")
        for term, est, se, t, p, st in res.rows():
            coef_rows.append((label, term, est, se, t, p, st))
        summary_rows.append((label, metric, res.n_observations, res.r2, res.adjusted_r2, res.rmse))
    if results:
        text = format_regression_table(
            results, labels, title=f"OLS, dependent variable ln(GDP pc), year fixed effects {lo}-{hi}"
        )
        run.write_text("regress/regression_table.txt", text)
    run.write_csv("regress/coefficients.csv", ["spec", "term", "estimate", "std_error", "t", "p", "stars"], coef_rows)
    run.write_csv("regress/summary.csv", ["spec", "metric", "observations", "r2", "adjusted_r2", "rmse"], summary_rows)
    if failures:
        raise EcomplexError("; ".join(failures))


COMMANDS = {"metrics": cmd_metrics, "correlate": cmd_correlate, "regress": cmd_regress}


def execute(config, analyses):
    """Run the named analyses, recording each stage's status; returns the exit code."""
    config.validate()
    run = Run(config)
    cache = {}
    for name in analyses:
        try:
            COMMANDS[name](config, run, cache)
        except (EcomplexError, FileNotFoundError, KeyError) as exc:
            year = getattr(exc, "year", None)
            message = f"{type(exc).__name__}: {exc}" + (f" (year {year})" if year else "")
            log.error("%s failed: %s", name, message)
            print(f"error: {name}: {message}", file=sys.stderr)
            run.stages[name] = {"status": "failed", "error": message}
            run.write_text(f"{name}/_FAILED.txt", message + "\n")
        else:
            run.stages[name] = {"status": "ok"}
    return run.finish()


def cmd_synth(args):
    spec = SynthSpec(args.m, args.n, args.noise, args.seed)
    out = Path(args.out)
    start, end = parse_years(args.years)
    years = list(range(start, end + 1))
    records = gen_firms(spec, years, drift=args.drift)
    write_csv(
        out / "firms.csv",
        FIRM_COLUMNS,
        [(r.firm_id, r.region, r.industry, r.list_date.isoformat(),
          r.delist_date.isoformat() if r.delist_date else "") for r in records],
    )
    rows = gen_panel(spec, years, drift=args.drift, ricd_year=args.ricd_year)
    write_csv(out / "panel.csv", PANEL_COLUMNS, [[row[c] for c in PANEL_COLUMNS] for row in rows])
    matrix = gen_noisy_nested(spec)
    write_count_matrix(matrix, out / "counts.csv")
    write_json(
        out / "synth_spec.json",
        {
            "generator": "ecomplex.harness",
            "version": __version__,
            "spec": asdict(spec),
            "years": [start, end],
            "drift": args.drift,
            "ricd_year": args.ricd_year,
            "counts_sha256": count_matrix_digest(matrix),
            "n_firms": len(records),
        },
    )
    return 0


def _load_config_file(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    fields = set(RunConfig.__dataclass_fields__) - {"extra"}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return data


def build_config(args):
    values = {}
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config))
    for key in ("firms", "panel", "years", "window", "threshold", "tol", "max_iter", "out", "format"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "columns", None):
        values["columns"] = tuple(c.strip() for c in args.columns.split(","))
    if getattr(args, "specs", None):
        values["specs"] = tuple(s.strip() for s in args.specs.split(","))
    for key in ("years", "window", "analyses", "columns", "specs"):
        if key in values and isinstance(values[key], list):
            values[key] = tuple(values[key])
    return RunConfig(**values)


def _add_run_options(p):
    p.add_argument("--config", help="JSON config or a previous manifest.json")
    p.add_argument("--firms", help="firms CSV")
    p.add_argument("--panel", help="panel CSV")
    p.add_argument("--years", help="inclusive year range, e.g. 2000-2015")
    p.add_argument("--window", help="averaging/regression window (default 2010-2015)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--threshold", type=float, help="RCA threshold (default 1)")
    p.add_argument("--tol", type=float, help="fitness tolerance (default 1e-10)")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="fitness iteration cap (default 10000)")
    p.add_argument("--format", choices=("csv", "structured"), help="per-year score format")
    p.add_argument("--columns", help="comma-separated correlation columns")
    p.add_argument("--specs", help="comma-separated regression specifications (1-8)")


def make_parser():
    parser = argparse.ArgumentParser(prog="ecomplex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ecomplex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("metrics", "per-year ECI, Fitness, Diversity, Entropy, quadrants and rank evolution"),
        ("correlate", "window averages, correlation matrix, ECI-Fitness series"),
        ("regress", "OLS of ln(GDP pc) with year fixed effects"),
        ("run-all", "metrics, correlate and regress in sequence"),
    ):
        _add_run_options(sub.add_parser(name, help=help_))
    s = sub.add_parser("synth", help="write a synthetic firms/panel fixture set")
    s.add_argument("--out", required=True)
    s.add_argument("--m", type=int, default=31)
    s.add_argument("--n", type=int, default=70)
    s.add_argument("--noise", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--years", default="2000-2015")
    s.add_argument("--drift", type=float, default=0.15)
    s.add_argument("--ricd-year", dest="ricd_year", type=int, default=2010)
    return parser


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get("ECOMPLEX_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = make_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        config = build_config(args)
        if args.command == "run-all":
            analyses = config.analyses
        else:
            analyses = (args.command,)
        return execute(config, analyses)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
