"""Command-line front end: Bell-parameter sweeps, tomography scans, single
point optimization and the closed-form validation report."""

from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import json
import logging
import math
import sys

import numpy as np

from .chsh import NoCoincidenceError, maximize_bell
from .detectors import DetectorParams, PostprocessingModel
from .fock import DEFAULT_TAIL_TOLERANCE, AnalyzerSetting, PdcSource
from .tomography import (
    PRESETS,
    DegenerateBasisError,
    TomographyBasis,
    metric_tensor,
    reconstruct_from_pipeline,
)
from .validation import STANDARD_TANH_CHI, run_validation

log = logging.getLogger("bellsquash")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2
DEFAULT_NOISE = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    return "%.17g" % x


def parse_range(text: str) -> list[float]:
    """``start:stop:step`` (stop inclusive) or a single value."""
    parts = str(text).split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad tanh_chi range {text!r}") from None
    if len(nums) == 1:
        return nums
    if len(nums) != 3:
        raise UsageError(f"tanh_chi range must be start:stop:step, got {text!r}")
    start, stop, step = nums
    if not step > 0:
        raise UsageError("tanh_chi step must be positive")
    count = math.floor((stop - start) / step + 1e-9) + 1
    if count < 1:
        raise UsageError(f"tanh_chi range {text!r} is empty")
    return [round(start + k * step, 12) for k in range(count)]


def parse_cutoff(text) -> int | None:
    if text in (None, "auto"):
        return None
    try:
        value = int(text)
    except ValueError:
        raise UsageError(f"cutoff must be 'auto' or an integer, got {text!r}") from None
    if value < 0:
        raise UsageError("cutoff must be non-negative")
    return value


def load_basis(name: str) -> TomographyBasis:
    """Preset name or a JSON file ``{"a": [[theta, phi], x3], "b": [...]}``."""
    if name in PRESETS:
        return PRESETS[name]
    try:
        with open(name, encoding="utf-8") as fh:
            data = json.load(fh)
        sites = []
        for key in ("a", "b"):
            sites.append(tuple(AnalyzerSetting(float(t), float(p)) for t, p in data[key]))
        if any(len(s) != 3 for s in sites):
            raise ValueError("need three settings per site")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read basis {name!r}: {exc}") from None
    return TomographyBasis(*sites)


def _physical(args):
    try:
        params = DetectorParams(args.eta, args.noise)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model = PostprocessingModel(args.model)
    cutoff = parse_cutoff(args.cutoff)
    tanh_chis = parse_range(args.tanh_chi)
    for t in tanh_chis:
        if not 0.0 <= t < 1.0:
            raise UsageError(f"tanh_chi must lie in [0, 1), got {t}")
    if args.workers < 1:
        raise UsageError("workers must be at least 1")
    return params, model, cutoff, tanh_chis


def _config_line(args) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    return "# config: " + json.dumps(cfg, sort_keys=True)


def _map(func, items, workers):
    if workers == 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _bell_point(job):
    t, cutoff, eta, noise, model = job
    try:
        r = maximize_bell(PdcSource(t, cutoff), DetectorParams(eta, noise), model)
    except NoCoincidenceError:
        return [t] + [math.nan] * 9 + [model.value]
    s = r.settings
    return [t, r.bell_value, s.theta_a1, s.theta_a2, s.theta_b1, s.theta_b2, *r.correlations, model.value]


def _tomography_point(job):
    t, cutoff, eta, noise, model, basis = job
    try:
        rho = reconstruct_from_pipeline(PdcSource(t, cutoff), DetectorParams(eta, noise), model, basis)
    except NoCoincidenceError:
        return [t] + [math.nan] * 6
    ev = rho.eigenvalues
    trace = float(np.trace(rho.rho).real)
    return [t, rho.min_eigenvalue, *ev, trace]


def _write_csv(path, config_line, header, rows):
    out = sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8", newline="")
    try:
        out.write(config_line + "\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    finally:
        if out is not sys.stdout:
            out.close()


PLOT_TEMPLATE = '''"""Plot {title} from {csv_path}."""
import csv

import matplotlib.pyplot as plt

with open({csv_path!r}, encoding="utf-8") as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
x = [float(r["tanh_chi"]) for r in rows]
y = [float(r[{column!r}]) for r in rows]
plt.plot(x, y)
{extra}plt.xlabel("tanh chi")
plt.ylabel({ylabel!r})
plt.title({title!r})
plt.savefig({png!r}, dpi=150)
'''


def _write_plot_script(path, csv_path, column, ylabel, title, extra=""):
    png = (csv_path.rsplit(".", 1)[0] if csv_path else "plot") + ".png"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            PLOT_TEMPLATE.format(
                csv_path=csv_path, column=column, ylabel=ylabel, title=title, extra=extra, png=png
            )
        )


def cmd_sweep_bell(args) -> int:
    params, model, cutoff, tanh_chis = _physical(args)
    jobs = [(t, cutoff, params.eta, params.n_nc, model) for t in tanh_chis]
    rows = _map(_bell_point, jobs, args.workers)
    if all(math.isnan(r[1]) for r in rows):
        log.error("no coincidences at any tanh_chi in the range")
        return EXIT_NUMERICAL
    header = ["tanh_chi", "bell_max", "theta_a1", "theta_a2", "theta_b1", "theta_b2",
              "E11", "E12", "E22", "E21", "model"]
    _write_csv(args.out, _config_line(args), header, rows)
    if args.plot_script:
        _write_plot_script(
            args.plot_script, args.out, "bell_max", "maximal Bell parameter",
            f"{model.value}, eta={params.eta}, n_nc={params.n_nc}",
            extra="plt.axhline(2 * 2 ** 0.5, ls='--', color='k')\n",
        )
    return EXIT_OK


def cmd_tomography_scan(args) -> int:
    params, model, cutoff, tanh_chis = _physical(args)
    basis = load_basis(args.basis)
    try:
        metric_tensor(basis.site_a)
        metric_tensor(basis.site_b)
    except DegenerateBasisError as exc:
        raise UsageError(str(exc)) from None
    jobs = [(t, cutoff, params.eta, params.n_nc, model, basis) for t in tanh_chis]
    rows = _map(_tomography_point, jobs, args.workers)
    if all(math.isnan(r[1]) for r in rows):
        log.error("no coincidences at any tanh_chi in the range")
        return EXIT_NUMERICAL
    header = ["tanh_chi", "min_eigenvalue", "eig0", "eig1", "eig2", "eig3", "trace"]
    _write_csv(args.out, _config_line(args), header, rows)
    if args.plot_script:
        _write_plot_script(
            args.plot_script, args.out, "min_eigenvalue", "minimum eigenvalue",
            f"basis {args.basis}, eta={params.eta}, n_nc={params.n_nc}",
            extra="plt.axhline(0.0, ls='--', color='k')\n",
        )
    return EXIT_OK


def cmd_optimize_bell(args) -> int:
    params, model, cutoff, tanh_chis = _physical(args)
    if len(tanh_chis) != 1:
        raise UsageError("optimize-bell takes a single tanh_chi value")
    row = _bell_point((tanh_chis[0], cutoff, params.eta, params.n_nc, model))
    if math.isnan(row[1]):
        log.error("no coincidences: the correlation is undefined")
        return EXIT_NUMERICAL
    header = ["tanh_chi", "bell_max", "theta_a1", "theta_a2", "theta_b1", "theta_b2",
              "E11", "E12", "E22", "E21", "model"]
    _write_csv(args.out, _config_line(args), header, [row])
    return EXIT_OK


def cmd_validate(args) -> int:
    tanh_chis = parse_range(args.tanh_chi) if args.tanh_chi is not None else STANDARD_TANH_CHI
    report = run_validation(tanh_chis=tanh_chis)
    print(report.summary())
    if args.out:
        fields = ["form", "tanh_chi", "eta", "n_nc", "delta", "pair", "closed", "oracle", "deviation"]
        _write_csv(args.out, _config_line(args), fields,
                   ([row[f] for f in fields] for row in report.rows))
    return EXIT_OK if report.onoff_agrees else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bellsquash", description=__doc__)
    parser.add_argument("--config", help="JSON file of option defaults; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def physical(p, eta, tanh_chi):
        p.add_argument("--model", choices=[m.value for m in PostprocessingModel], default="onoff-naive")
        p.add_argument("--eta", type=float, default=eta)
        p.add_argument("--noise", type=float, default=DEFAULT_NOISE, help="mean noise counts")
        p.add_argument("--tanh-chi", default=tanh_chi, help="start:stop:step or a single value")
        p.add_argument("--cutoff", default="auto", help=f"'auto' (tail < {DEFAULT_TAIL_TOLERANCE:g}) or N")
        p.add_argument("--out", default=None, help="CSV path (default stdout)")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("sweep-bell", help="maximal Bell parameter vs tanh_chi")
    physical(p, 0.9, "0.02:0.7:0.02")
    p.add_argument("--plot-script", help="also write a matplotlib script for the CSV")
    p.set_defaults(func=cmd_sweep_bell)

    p = sub.add_parser("tomography-scan", help="reconstructed two-qubit spectrum vs tanh_chi")
    physical(p, 0.6, "0.02:0.7:0.02")
    p.add_argument("--basis", default="fig4b", help="fig4a, fig4b or a JSON file")
    p.add_argument("--plot-script", help="also write a matplotlib script for the CSV")
    p.set_defaults(func=cmd_tomography_scan)

    p = sub.add_parser("optimize-bell", help="maximal Bell parameter at one tanh_chi")
    physical(p, 0.9, "0.5")
    p.set_defaults(func=cmd_optimize_bell)

    p = sub.add_parser("validate", help="closed forms vs the Fock-space pipeline")
    p.add_argument("--tanh-chi", default=None, help="override the tanh_chi grid")
    p.add_argument("--out", default=None, help="CSV path for the full deviation table")
    p.set_defaults(func=cmd_validate)
    return parser


def _config_defaults(argv) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {known.config!r}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        defaults = _config_defaults(argv)
        if defaults:
            for action in parser._subparsers._group_actions:
                for subparser in action.choices.values():
                    known = {a.dest for a in subparser._actions}
                    subparser.set_defaults(**{k: v for k, v in defaults.items() if k in known})
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return exc.code
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except UsageError as exc:
        print(f"bellsquash: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
