"""
Orbita Command Line
===================

Verbs:

- state      build a family member, write its JSON and p_m CSV
- sweep      matched-variance comparison of the families (uncertainty products)
- simulate   detected OAM spectrum of a state on the optical bench
- respmat    response matrix C[N][m] (and optionally the aperture scan)
- analyze    deconvolve and fit a measured spectrum
- reproduce  canonical runs: fig2 (curve), fig3 (families), fig7 (response),
             fig8 (spectra), fig9 (comparison)

Usage:
    python -m orbita state --family wedge --alpha 3.14159 --out w.json
    python -m orbita sweep --families mathieu,vonmises,cosine,truncated --grid-points 60 --out families.csv
    python -m orbita reproduce fig9 --seed 7 --out fig9.csv

Every CSV starts with ``#`` lines carrying the package version, the seed and
a hash of the configuration; JSON outputs carry the same fields under
``metadata``. Failures print a JSON error record on stderr and
exit with status 1; bad flags exit with status 2.
"""

import argparse
import json
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from . import __version__
from .analysis import (
    deconvolve,
    fit_family,
    fitted_spectrum,
    pipeline_summary,
    run_pipeline,
    uncertainty_with_errors,
)
from .config import (
    NoiseConfig,
    OpticalConfig,
    Scenario,
    get_config,
    load_optical_config,
    load_scenario,
    scenario_from,
)
from .core import uncertainty_report
from .errors import OrbitaError, ParameterError
from .mathieu import curve_table, q_for_variance, sweep_uncertainty_curve
from .optics import optimize_aperture, response_matrix, simulate_spectrum
from .states import (
    canonical_family,
    make_state,
    matched_variance_table,
    momentum_spectrum_closed_form,
    width_for_variance,
)
from .utils import Timer, compute_hash, format_timestamp

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "config", "scenarios")
COMPARISON_SCENARIOS = ("comparison_mathieu.yaml", "comparison_wedge.yaml", "comparison_cosine.yaml")
REPRODUCE_TARGETS = {
    "fig2": "curve",
    "fig3": "families",
    "fig7": "response",
    "fig8": "spectra",
    "fig9": "comparison",
}


def configure_logging(level: str) -> None:
    """Route loguru output to stderr at the requested level."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="<level>{level: <8}</level> | {message}")


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def output_metadata(seed: Optional[int], config: Any) -> Dict[str, Any]:
    """Version, seed and config hash shared by every output file."""
    return {"version": __version__, "seed": seed, "config": compute_hash(config)}


def write_csv(frame: pd.DataFrame, path: Optional[str], seed: Optional[int], config: Any) -> None:
    """Write a table with the metadata header; stdout when ``path`` is None."""
    meta = output_metadata(seed, config)
    header = [
        f"# orbita {meta['version']}",
        f"# seed: {seed if seed is not None else 'none'}",
        f"# config: {meta['config']}",
    ]
    body = frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")
    text = "\n".join(header) + "\n" + body
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info(f"💾 Wrote {path}")


def write_json(data: Dict[str, Any], path: Optional[str], seed: Optional[int], config: Any) -> None:
    """Write a JSON document with a ``metadata`` entry; stdout when ``path`` is None."""
    data = dict(data, metadata=output_metadata(seed, config))
    text = json.dumps(data, indent=2, sort_keys=True, default=_json_default)
    if path is None:
        sys.stdout.write(text + "\n")
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text + "\n")
    logger.info(f"💾 Wrote {path}")


def _json_default(obj: Any) -> Any:
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def read_spectrum(path: str) -> pd.DataFrame:
    """Read a (N, power) CSV, skipping ``#`` header lines."""
    try:
        frame = pd.read_csv(path, comment="#")
    except (OSError, ValueError) as e:
        raise ParameterError(f"cannot read spectrum {path}: {e}") from e
    if not {"N", "power"} <= set(frame.columns):
        raise ParameterError(f"spectrum {path} needs columns N and power, got {list(frame.columns)}")
    return frame


def _parse_window(text: str) -> Tuple[int, int]:
    try:
        lo, hi = (int(part) for part in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"window must be 'lo,hi', got {text!r}") from e
    if lo > hi:
        raise argparse.ArgumentTypeError(f"window must satisfy lo <= hi, got {text!r}")
    return lo, hi


def _parse_int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _optics(args: argparse.Namespace) -> OpticalConfig:
    return load_optical_config(getattr(args, "config", None))


def _state_width(args: argparse.Namespace, family: str) -> Optional[float]:
    if family == "mathieu":
        if args.q is not None:
            return args.q
        if args.var_e is not None:
            return q_for_variance(args.var_e)
        raise ParameterError("mathieu states need --q or --var-e")
    if family == "coherent":
        return None
    if args.alpha is not None:
        return args.alpha
    if args.var_e is not None:
        return width_for_variance(family, args.var_e)
    raise ParameterError(f"{family} states need --alpha or --var-e")


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def cmd_state(args: argparse.Namespace) -> None:
    family = canonical_family(args.family)
    width = _state_width(args, family)
    pkg = make_state(family, width, mu=args.mu, ell=args.ell, truncation=args.truncation, method=args.method)
    report = uncertainty_report(pkg.state)
    data = pkg.to_json()
    data.update({
        "converged": pkg.converged,
        "closedForm": pkg.closed_form.as_dict() if pkg.closed_form else None,
        "report": report.as_dict(),
    })
    source = {"family": family, "width": width, "mu": args.mu, "ell": args.ell}
    write_json(data, args.out, None, source)

    if args.spectrum_out:
        m = pkg.state.indices()
        frame = pd.DataFrame({"m": m, "p_m": pkg.state.probabilities()})
        try:
            closed = momentum_spectrum_closed_form(family, width, (int(m[0]), int(m[-1])), mu=args.mu, ell=args.ell)
            frame["p_m_closed_form"] = closed.pm
        except ParameterError:
            frame["p_m_closed_form"] = np.nan
        write_csv(frame, args.spectrum_out, None, source)


def cmd_sweep(args: argparse.Namespace) -> None:
    families = [canonical_family(f) for f in args.families.split(",") if f.strip()]
    grid = np.linspace(0.02, 0.98, args.grid_points)
    long = matched_variance_table(grid, families)
    wide = long.pivot(index="varE", columns="family", values="product").reset_index()
    wide = wide[["varE"] + [f for f in families if f in wide.columns]]
    write_csv(wide, args.out, None, {"families": families, "grid_points": args.grid_points})

    if args.curve_out:
        q_grid = np.geomspace(1e-2, 1e3, args.grid_points)
        curve = curve_table(sweep_uncertainty_curve(args.n_max, q_grid))
        write_csv(curve, args.curve_out, None, {"n_max": args.n_max, "grid_points": args.grid_points})


def cmd_simulate(args: argparse.Namespace) -> None:
    cfg = _optics(args)
    family = canonical_family(args.family)
    pkg = make_state(family, _state_width(args, family), mu=args.mu, ell=args.ell)
    noise = NoiseConfig(seed=args.seed, relative_level=args.noise)
    spectrum = simulate_spectrum(pkg, cfg, noise=noise)
    frame = spectrum.to_frame()
    frame["p_m"] = [abs(pkg.state.amplitude(int(n))) ** 2 for n in spectrum.helicities]
    state = {"family": family, "width": pkg.width, "mu": args.mu, "ell": args.ell}
    write_csv(frame, args.out, args.seed, {"optics": cfg, "noise": noise, "state": state})


def cmd_respmat(args: argparse.Namespace) -> None:
    cfg = _optics(args)
    C = response_matrix(cfg)
    frame = C.to_frame().reset_index()
    write_csv(frame, args.out, None, cfg)
    if args.modes:
        report = optimize_aperture(cfg, args.modes)
        if args.scan_out:
            write_csv(report.table, args.scan_out, None, {"optics": cfg, "modes": args.modes})


def cmd_analyze(args: argparse.Namespace) -> None:
    cfg = _optics(args)
    frame = read_spectrum(args.input)
    C = response_matrix(cfg)
    powers = dict(zip(frame["N"].astype(int), frame["power"].astype(float)))
    missing = [n for n in C.helicities if n not in powers]
    if missing:
        raise ParameterError(f"spectrum lacks analyzer charges {missing[:5]}")
    measured = np.array([powers[n] for n in C.helicities])
    regularization = None if args.regularization == "lcurve" else float(args.regularization)
    recovered = deconvolve(measured, C, regularization, args.window)
    fit = fit_family(recovered, args.family)
    fit = uncertainty_with_errors(fit, recovered, args.bootstrap, seed=args.seed)
    out = recovered.to_frame()
    out["p_m_fitted"] = fitted_spectrum(fit, recovered.helicities) / float(np.sum(recovered.pm))
    analysis_config = {"optics": cfg, "window": args.window, "family": fit.family}
    write_csv(out, args.out, args.seed, analysis_config)
    logger.info(f"📊 {fit.family}: width={fit.width:.6g}, product={fit.product:.5f} +- {fit.error_bar:.1e}")
    if args.fit_out:
        write_json({
            "fit": fit.as_dict(),
            "regularization": recovered.regularization,
            "nonnegative": recovered.nonnegative,
        }, args.fit_out, args.seed, analysis_config)


def _scenario_path(name: str) -> str:
    return os.path.normpath(os.path.join(SCENARIO_DIR, name))


def _reseeded(path: str, seed: Optional[int]) -> Scenario:
    scenario = load_scenario(path)
    if seed is None:
        return scenario
    data = scenario.model_dump(mode="json")
    data["seed"] = seed
    data["noise"]["seed"] = seed
    return scenario_from(data)


def cmd_reproduce(args: argparse.Namespace) -> None:
    target = REPRODUCE_TARGETS.get(args.target, args.target)
    if target == "curve":
        q_grid = np.geomspace(1e-2, 1e3, args.grid_points)
        frame = curve_table(sweep_uncertainty_curve(args.n_max, q_grid))
        write_csv(frame, args.out, None, {"target": target, "n_max": args.n_max, "grid_points": args.grid_points})
    elif target == "families":
        families = ["mathieu", "vonMises", "truncatedGaussian", "cosine", "wrappedGaussian", "wedge"]
        long = matched_variance_table(np.linspace(0.02, 0.98, args.grid_points), families)
        write_csv(long, args.out, None, {"target": target, "grid_points": args.grid_points})
    elif target == "response":
        cfg = _optics(args)
        write_csv(response_matrix(cfg).to_frame().reset_index(), args.out, None, cfg)
    elif target in ("spectra", "comparison"):
        paths = [args.scenario] if args.scenario else [_scenario_path(n) for n in COMPARISON_SCENARIOS]
        if target == "spectra":
            paths = paths[:1]
        results = [run_pipeline(_reseeded(p, args.seed)) for p in paths]
        seed = args.seed if args.seed is not None else results[0].metadata["seed"]
        if target == "spectra":
            write_csv(results[0].triple, args.out, seed, {"target": target, "scenarios": paths})
        else:
            table = pd.concat([r.table for r in results], ignore_index=True)
            write_csv(table, args.out, seed, {"target": target, "scenarios": paths})
            for row in pipeline_summary(table).itertuples():
                logger.info(
                    f"📊 {row.family}: increasing={row.increasing}, "
                    f"above Mathieu curve at {row.above_mathieu}/{row.states} states"
                )
    else:
        raise ParameterError(f"unknown reproduce target {target!r}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_state_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", type=str, required=True, help="State family (wedge, cosine, vonmises, truncated, wrapped, coherent, mathieu)")
    parser.add_argument("--alpha", type=float, default=None, help="Width parameter (alpha, or sigma for wrapped)")
    parser.add_argument("--q", type=float, default=None, help="Mathieu parameter")
    parser.add_argument("--var-e", dest="var_e", type=float, default=None, help="Target circular variance")
    parser.add_argument("--mu", type=float, default=0.0, help="Center angle (coherent: theta)")
    parser.add_argument("--ell", type=float, default=0.0, help="Coherent log-radius")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per verb."""
    parser = argparse.ArgumentParser(prog="orbita", description="Quantum mechanics on the circle and OAM spectrum simulation")
    parser.add_argument("--version", action="version", version=f"orbita {__version__}")
    parser.add_argument("--log-level", type=str, default=get_config()["logging"]["level"], help="Logging level (DEBUG, INFO, WARNING)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("state", help="Build a family member")
    _add_state_flags(p)
    p.add_argument("--truncation", type=int, default=None, help="Fixed truncation M (default: automatic)")
    p.add_argument("--method", choices=["closed", "quadrature"], default="closed", help="Construction path")
    p.add_argument("--out", type=str, default=None, help="State JSON path (stdout if omitted)")
    p.add_argument("--spectrum-out", dest="spectrum_out", type=str, default=None, help="Spectrum CSV path")
    p.set_defaults(handler=cmd_state)

    p = sub.add_parser("sweep", help="Uncertainty products on a shared variance grid")
    p.add_argument("--families", type=str, default="mathieu,vonmises,cosine,truncated", help="Comma-separated families")
    p.add_argument("--grid-points", dest="grid_points", type=int, default=60, help="Variance grid points")
    p.add_argument("--n-max", dest="n_max", type=int, default=2, help="Highest Mathieu mode in the q curve")
    p.add_argument("--out", type=str, default=None, help="Matched-variance CSV path")
    p.add_argument("--curve-out", dest="curve_out", type=str, default=None, help="Mathieu q-curve CSV path")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("simulate", help="Detected OAM spectrum of a state")
    _add_state_flags(p)
    p.add_argument("--config", type=str, default=None, help="Optics config (YAML/JSON)")
    p.add_argument("--noise", type=float, default=0.0, help="Relative detector noise level")
    p.add_argument("--seed", type=int, default=0, help="Noise seed")
    p.add_argument("--out", type=str, default=None, help="CSV path")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("respmat", help="Response matrix of the bench")
    p.add_argument("--config", type=str, default=None, help="Optics config (YAML/JSON)")
    p.add_argument("--modes", type=_parse_int_list, default=None, help="Mode set for the aperture optimization, e.g. 0,-1,1")
    p.add_argument("--scan-out", dest="scan_out", type=str, default=None, help="Aperture scan CSV path")
    p.add_argument("--out", type=str, default=None, help="CSV path")
    p.set_defaults(handler=cmd_respmat)

    analysis = get_config()["analysis"]
    p = sub.add_parser("analyze", help="Deconvolve and fit a measured spectrum")
    p.add_argument("--input", type=str, required=True, help="Spectrum CSV with columns N, power")
    p.add_argument("--family", type=str, required=True, help="Family fitted to the recovered spectrum")
    p.add_argument("--config", type=str, default=None, help="Optics config (YAML/JSON)")
    p.add_argument("--window", type=_parse_window, default=tuple(analysis["window"]), help="Detection window lo,hi")
    default_weight = "lcurve" if analysis["regularization"] is None else str(analysis["regularization"])
    p.add_argument("--regularization", type=str, default=default_weight, help="Tikhonov weight or 'lcurve'")
    p.add_argument("--bootstrap", type=int, default=analysis["bootstrap"], help="Bootstrap resamples")
    p.add_argument("--seed", type=int, default=0, help="Bootstrap seed")
    p.add_argument("--out", type=str, default=None, help="Recovered spectrum CSV path")
    p.add_argument("--fit-out", dest="fit_out", type=str, default=None, help="Fit JSON path")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("reproduce", help="Canonical runs with pinned defaults")
    p.add_argument("target", choices=list(REPRODUCE_TARGETS) + list(REPRODUCE_TARGETS.values()),
                   help="Run to reproduce (figN or its descriptive name)")
    p.add_argument("--seed", type=int, default=None, help="Override scenario seeds")
    p.add_argument("--grid-points", dest="grid_points", type=int, default=60, help="Grid points for curve/families")
    p.add_argument("--n-max", dest="n_max", type=int, default=2, help="Highest Mathieu mode for curve")
    p.add_argument("--config", type=str, default=None, help="Optics config for response")
    p.add_argument("--scenario", type=str, default=None, help="Scenario file for spectra/comparison")
    p.add_argument("--out", type=str, default=None, help="CSV path")
    p.set_defaults(handler=cmd_reproduce)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one verb.

    Returns:
        0 on success, 1 on a numerical or configuration failure (bad flags
        exit with 2 from argparse)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    handler: Callable[[argparse.Namespace], None] = args.handler
    try:
        with Timer() as timer:
            handler(args)
    except OrbitaError as e:
        record = {
            "error": type(e).__name__,
            "stage": args.verb,
            "message": str(e),
            "diagnostics": e.diagnostics,
        }
        sys.stderr.write(json.dumps(record, default=_json_default) + "\n")
        logger.error(f"❌ {args.verb} failed: {e}")
        return 1
    logger.info(f"✅ {args.verb} finished at {format_timestamp()} ({timer.elapsed:.2f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
