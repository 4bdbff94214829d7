"""Command-line surface: fit, test, scree, diagnose, simulate, impute.

Every command that writes files targets an output directory containing
exactly one ``manifest.json`` recording the command, input hashes,
parameters, seed (when randomized), software version and timestamp.
Exit codes: 0 success, 2 usage/input problems, 3 numerical or
degenerate-data failures.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import secrets
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .curves import dense_trace, interpolate
from .diagnostics import (
    auto_thinning,
    averaged_periodogram,
    iid_noise_test,
    residual_acf,
    residual_correlation,
    residual_covariance,
    select_frequencies,
)
from .errors import (
    DegenerateVarianceError,
    DimensionError,
    DomainError,
    NumericalError,
    OrderError,
    PanelFormatError,
    SelectionError,
)
from .factor import fit, load_fit_residuals, save_fit
from .order import classic_scree, lambda_scree, suggest_plateau_L
from .panel import (
    ObservationPanel,
    SampleGrid,
    impute_missing,
    load_panel,
    read_table_with_missing,
    save_panel,
)
from .simulate import (
    RNG_ALGORITHM,
    SimSetting,
    SimulationSpec,
    run_monte_carlo,
    write_summary_csv,
)
from .spectral import empirical_eigensystem

USAGE_ERRORS = (
    PanelFormatError,
    DimensionError,
    OrderError,
    DomainError,
    SelectionError,
    FileNotFoundError,
)
NUMERIC_ERRORS = (NumericalError, DegenerateVarianceError)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, params: dict, inputs: dict) -> None:
    manifest = {
        "command": command,
        "parameters": params,
        "input_sha256": {name: _sha256(p) for name, p in inputs.items()},
        "version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "schema": 1,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt_cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(x) for x in row) + "\n")


def _load_input_panel(args) -> ObservationPanel:
    return load_panel(args.input, header=args.header)


def _selection_args(p, T, cutoff, thin):
    m = auto_thinning(p, T, cutoff) if thin is None else thin
    return select_frequencies(p, cutoff, m)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_fit(args) -> int:
    chosen = sum([args.L is not None, args.scree_auto, args.mean_only])
    if chosen != 1:
        raise OrderError("choose exactly one of --L, --scree-auto, --mean-only")
    panel = _load_input_panel(args)
    out = Path(args.out)
    params = {"input": str(args.input), "header": args.header}

    if args.mean_only:
        mu = panel.values.mean(axis=0)
        signals = np.broadcast_to(mu, panel.values.shape)
        out.mkdir(parents=True, exist_ok=True)
        save_panel(ObservationPanel(np.array(signals), panel.grid), out / "signals.csv")
        save_panel(ObservationPanel(panel.values - signals, panel.grid), out / "residuals.csv")
        with open(out / "muhat.csv", "w") as fh:
            fh.write(",".join(repr(float(x)) for x in panel.grid.points) + "\n")
            fh.write(",".join(repr(float(x)) for x in mu) + "\n")
        params["mode"] = "mean-only"
        _write_manifest(out, "fit", params, {"input": args.input})
        return 0

    if args.scree_auto:
        sel = _selection_args(panel.p, panel.T, args.cutoff, args.thin)
        l_max = min(args.lmax, min(panel.T - 1, panel.p))
        curve = lambda_scree(panel, l_max, sel)
        suggestion = suggest_plateau_L(curve)
        L = suggestion.L
        params["l_policy"] = "plateau"
        params["plateau_found"] = suggestion.plateau_found
        if not suggestion.plateau_found:
            print(
                f"warning: no plateau detected up to l_max={l_max}; using L={L}",
                file=sys.stderr,
            )
    else:
        L = args.L
        params["l_policy"] = "fixed"

    params["L"] = int(L)
    result = fit(panel, L)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    save_fit(result, out)
    _write_manifest(out, "fit", params, {"input": args.input})
    if args.trace_curve is not None:
        curve = interpolate(result, args.trace_curve)
        _write_csv(out / "trace.csv", ["s", "value"], dense_trace(curve, args.trace_points))
    print(json.dumps({"L": int(L), "T": result.T, "p": result.p, "out": str(out)}))
    return 0


def _cmd_test(args) -> int:
    if args.from_fit is not None:
        residuals = load_fit_residuals(args.from_fit)
        input_path = Path(args.from_fit) / "residuals.csv"
    else:
        if args.input is None:
            raise PanelFormatError("provide --input or --from-fit")
        residuals = _load_input_panel(args)
        input_path = Path(args.input)

    sel = _selection_args(residuals.p, residuals.T, args.cutoff, args.thin)
    report = iid_noise_test(residuals, sel, sigma2=args.sigma2)
    payload = report.to_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_csv(
            out / "xi.csv",
            ["index", "theta", "xi"],
            zip(sel.indices.tolist(), sel.thetas.tolist(), report.xi.tolist()),
        )
        _write_manifest(
            out, "test",
            {"cutoff": args.cutoff, "thin": args.thin, "sigma2": args.sigma2,
             "f": report.f},
            {"input": input_path},
        )
    return 0


def _cmd_scree(args) -> int:
    panel = _load_input_panel(args)
    sel = _selection_args(panel.p, panel.T, args.cutoff, args.thin)
    l_max = min(args.lmax, min(panel.T - 1, panel.p))
    lam = lambda_scree(panel, l_max, sel)
    gamma = classic_scree(empirical_eigensystem(panel), l_max)
    suggestion = suggest_plateau_L(lam) if l_max >= 4 else None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "scree.csv",
        ["l", "gamma", "lambda_inf"],
        zip(lam.orders.tolist(), gamma.values.tolist(), lam.values.tolist()),
    )
    params = {"lmax": l_max, "cutoff": args.cutoff, "thin": args.thin}
    if suggestion is not None:
        params["suggested_L"] = suggestion.L
        params["plateau_found"] = suggestion.plateau_found
        print(json.dumps({"suggested_L": suggestion.L,
                          "plateau_found": suggestion.plateau_found}))
    _write_manifest(out, "scree", params, {"input": args.input})
    return 0


def _parse_window(expr, p):
    try:
        lo, hi = expr.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise PanelFormatError(f"window must look like A:B, got {expr!r}") from None
    if not 1 <= lo <= hi <= p:
        raise DimensionError(f"window {expr} out of range 1:{p}")
    return lo - 1, hi


def _cmd_diagnose(args) -> int:
    if args.from_fit is not None:
        residuals = load_fit_residuals(args.from_fit)
        input_path = Path(args.from_fit) / "residuals.csv"
    else:
        if args.input is None:
            raise PanelFormatError("provide --input or --from-fit")
        residuals = _load_input_panel(args)
        input_path = Path(args.input)

    if not 1 <= args.curve <= residuals.T:
        raise DimensionError(f"curve index {args.curve} out of range 1..{residuals.T}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    h_max = min(args.hmax, residuals.p - 1)
    acvf, acf = residual_acf(residuals.values[args.curve - 1], h_max)
    rows = []
    for h in range(h_max + 1):
        rows.append([h, float(acvf[h]), float(acf[h]) if acf is not None else ""])
    _write_csv(out / "acf.csv", ["lag", "acvf", "acf"], rows)

    cov = residual_covariance(residuals)
    corr, _ = residual_correlation(residuals)
    if args.cols is not None:
        lo, hi = _parse_window(args.cols, residuals.p)
        cov = cov[lo:hi, lo:hi]
        corr = corr[lo:hi, lo:hi]
    np.savetxt(out / "covariance.csv", cov, delimiter=",")
    np.savetxt(out / "correlation.csv", corr, delimiter=",")

    sel = _selection_args(residuals.p, residuals.T, args.cutoff, args.thin)
    xi = averaged_periodogram(residuals, sel)
    _write_csv(
        out / "xi.csv",
        ["index", "theta", "xi"],
        zip(sel.indices.tolist(), sel.thetas.tolist(), xi.tolist()),
    )
    _write_manifest(
        out, "diagnose",
        {"curve": args.curve, "hmax": h_max, "cols": args.cols,
         "cutoff": args.cutoff, "thin": args.thin},
        {"input": input_path},
    )
    return 0


def _cmd_simulate(args) -> int:
    with open(args.spec) as fh:
        raw = json.load(fh)
    seed = raw.get("seed")
    if seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}")
    else:
        print(f"seed: {seed}")
    settings = [
        SimSetting(p=int(s["p"]), T=int(s["T"]), sigma2=float(s["sigma2"]),
                   theta_ar=float(s.get("theta_ar", 0.0)))
        for s in raw["settings"]
    ]
    spec = SimulationSpec(
        dgp=raw["dgp"],
        kind=raw.get("kind", "sse"),
        settings=settings,
        replications=int(raw["replications"]),
        seed=int(seed),
        methods=tuple(raw.get("methods", ["pca"])),
        l_policy=raw.get("l_policy", "fixed"),
        l_fixed=int(raw.get("l", 3)),
        scree_l_max=int(raw.get("scree_l_max", 8)),
        cutoff=float(raw.get("cutoff", 0.1)),
        thinning=raw.get("thinning"),
        smooth_K=int(raw.get("smooth_K", 21)),
        signal_variance=float(raw.get("signal_variance", 25.0)),
    )
    summary = run_monte_carlo(spec, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(summary, out / "summary.csv")
    _write_manifest(
        out, "simulate",
        {"spec": raw, "seed": int(seed), "workers": args.workers},
        {"spec_file": args.spec},
    )
    return 0


def _cmd_impute(args) -> int:
    values, grid_points = read_table_with_missing(args.input, header=args.header)
    grid = SampleGrid(grid_points) if grid_points is not None else SampleGrid.midpoints(values.shape[1])
    filled = impute_missing(values, grid)
    panel = ObservationPanel(filled, grid)
    save_panel(panel, args.out, header=args.header)
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdfactor",
        description="Factor-model denoising and diagnostics for discretized curve panels.",
    )
    parser.add_argument("--version", action="version", version=f"fdfactor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_selection(p):
        p.add_argument("--cutoff", type=float, default=0.1,
                       help="low-frequency cutoff fraction (default 0.1)")
        p.add_argument("--thin", type=int, default=None,
                       help="frequency thinning m (default: smallest m with f/T <= 0.3)")

    p_fit = sub.add_parser("fit", help="fit a factor model and write artifacts")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--header", action="store_true",
                       help="first input row holds the grid points")
    p_fit.add_argument("--L", type=int, default=None, help="number of factors")
    p_fit.add_argument("--scree-auto", action="store_true",
                       help="choose L by the test-statistic plateau rule")
    p_fit.add_argument("--mean-only", action="store_true",
                       help="fit only the mean curve (no factors)")
    p_fit.add_argument("--lmax", type=int, default=12,
                       help="largest order examined by --scree-auto")
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--trace-curve", type=int, default=None,
                       help="also export a dense interpolated trace of this curve (1-based)")
    p_fit.add_argument("--trace-points", type=int, default=1000)
    add_selection(p_fit)
    p_fit.set_defaults(func=_cmd_fit)

    p_test = sub.add_parser("test", help="iid-noise test on residuals")
    p_test.add_argument("--input", default=None, help="residual panel CSV")
    p_test.add_argument("--header", action="store_true")
    p_test.add_argument("--from-fit", default=None, help="fit artifact directory")
    p_test.add_argument("--sigma2", type=float, default=None,
                        help="noise-variance override (default: Gasser estimate)")
    p_test.add_argument("--out", default=None, help="optional output directory")
    add_selection(p_test)
    p_test.set_defaults(func=_cmd_test)

    p_scree = sub.add_parser("scree", help="eigenvalue and test-statistic scree curves")
    p_scree.add_argument("--input", required=True)
    p_scree.add_argument("--header", action="store_true")
    p_scree.add_argument("--lmax", type=int, default=12)
    p_scree.add_argument("--out", required=True)
    add_selection(p_scree)
    p_scree.set_defaults(func=_cmd_scree)

    p_diag = sub.add_parser("diagnose", help="residual acf, covariance and periodogram exports")
    p_diag.add_argument("--input", default=None)
    p_diag.add_argument("--header", action="store_true")
    p_diag.add_argument("--from-fit", default=None)
    p_diag.add_argument("--curve", type=int, default=1, help="curve index for the acf (1-based)")
    p_diag.add_argument("--hmax", type=int, default=40)
    p_diag.add_argument("--cols", default=None,
                        help="restrict covariance/correlation to columns A:B (1-based)")
    p_diag.add_argument("--out", required=True)
    add_selection(p_diag)
    p_diag.set_defaults(func=_cmd_diagnose)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo study from a JSON spec")
    p_sim.add_argument("--spec", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--workers", type=int, default=None,
                       help="replication workers (default: FDFACTOR_WORKERS or 1)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_imp = sub.add_parser("impute", help="fill missing cells by in-row linear interpolation")
    p_imp.add_argument("--input", required=True)
    p_imp.add_argument("--header", action="store_true")
    p_imp.add_argument("--out", required=True)
    p_imp.set_defaults(func=_cmd_impute)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
