"""Command line entry point: ``pertspec {spectrum,gaf,correlate,report,weyl}``.

Exit status is 0 on success or a passing comparison, 2 when a statistical
comparison fails its thresholds and 1 on any error.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig, format_config, load_config
from .errors import MetadataMismatch, PertSpecError
from .experiment import (ensemble_tag, model_of, rescale_all, sample_limit_ensemble, shell_sigmas,
                         simulate_spectra)
from .limits import ginibre_2pt_correlation, kappa_2pt_correlation, limit_2pt_correlation_V
from .pointprocess import pair_correlation, theory_deviation, weyl_count
from .svg import correlation_figure

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out or cfg.outDir)


def cmd_spectrum(args, cfg: ExperimentConfig) -> int:
    spectra = simulate_spectra(cfg, args.threads)
    procs = rescale_all(cfg, spectra)
    with io.atomic_outputs(_out_dir(args, cfg)) as stage:
        io.write_spectra(stage / "spectra.csv", spectra)
        io.write_rescaled(stage / "rescaled.csv", ensemble_tag(cfg), procs)
        (stage / "config.txt").write_text(format_config(cfg))
    counts = [p.points.size for p in procs]
    print(f"realizations {len(spectra)}  dimension {spectra[0].eigenvalues.size}  "
          f"mean points in window {np.mean(counts):.4g}")
    return EXIT_OK


def cmd_gaf(args, cfg: ExperimentConfig) -> int:
    procs = sample_limit_ensemble(cfg, args.threads)
    tag = "gaf_product" if cfg.gafKind == "product" else "gaf_det"
    with io.atomic_outputs(_out_dir(args, cfg)) as stage:
        io.write_rescaled(stage / "rescaled.csv", tag, procs)
        (stage / "config.txt").write_text(format_config(cfg))
    print(f"realizations {len(procs)}  mean zeros in window {np.mean([p.points.size for p in procs]):.4g}")
    return EXIT_OK


def default_r2_max(cfg: ExperimentConfig, R: float) -> float:
    """``min(9 / min sigma, 2 R^2)``; the cap keeps every bin well populated."""
    cap = 2.0 * R * R
    try:
        sp, sm = shell_sigmas(cfg)
    except PertSpecError:
        return cap
    return min(9.0 / float(min(sp.min(), sm.min())), cap)


def cmd_correlate(args, cfg: ExperimentConfig) -> int:
    out = _out_dir(args, cfg)
    inputs = [Path(p) for p in args.inputs] or [out / "rescaled.csv"]
    ensembles = [io.read_rescaled(p) for p in inputs]
    procs = [p for e in ensembles for p in e.processes]
    ref = procs[0]
    for e, path in zip(ensembles, inputs):
        p = e.processes[0]
        if p.z0 != ref.z0 or p.windowRadius != ref.windowRadius:
            raise MetadataMismatch(f"{path} has z0/R different from {inputs[0]}")
    R = ref.windowRadius
    r2max = cfg.r2Max or default_r2_max(cfg, R)
    edges = np.linspace(0.0, r2max, cfg.bins + 1)
    est = pair_correlation(procs, edges)
    with io.atomic_outputs(out) as stage:
        io.write_corr(stage / "corr.csv", est)
    print(f"realizations {est.realizations}  pooled intensity {est.pooledIntensity:.6g}  bins {cfg.bins}")
    return EXIT_OK


def theory_curve(cfg: ExperimentConfig):
    sp, sm = shell_sigmas(cfg)
    if cfg.theory == "k2v":
        return lambda r2: limit_2pt_correlation_V(r2, sp)
    if cfg.theory == "ginibre":
        return lambda r2: ginibre_2pt_correlation(r2, float(sp.sum() + sm.sum()))
    return lambda r2: kappa_2pt_correlation(r2, float(sp[0]))


def cmd_report(args, cfg: ExperimentConfig) -> int:
    out = _out_dir(args, cfg)
    src = Path(args.inputs[0]) if args.inputs else out / "corr.csv"
    est = io.read_corr(src, cfg.windowRadius)
    curve = theory_curve(cfg)
    dev = theory_deviation(est, curve, max_z=cfg.maxZ, mean_z=cfg.meanZ)
    grid = np.linspace(0.0, est.binEdges[-1], 400)
    centers = est.centers
    curves = {cfg.theory: (grid, curve(grid)), "empirical": (centers, est.khat),
              f"{cfg.theory}_bin_average": (centers, dev.theory)}
    verdict = "PASS" if dev.passed else "FAIL"
    lines = [f"theory {cfg.theory}", f"bins {centers.size}", f"max_abs_z {dev.max_abs_z:.6g}",
             f"mean_abs_z {dev.mean_abs_z:.6g}", f"thresholds max {cfg.maxZ:g} mean {cfg.meanZ:g}",
             f"verdict {verdict}"]
    with io.atomic_outputs(out) as stage:
        io.write_curves(stage / "curves.csv", curves)
        (stage / "report.txt").write_text("\n".join(lines) + "\n")
        (stage / "figure.svg").write_text(correlation_figure(
            (centers, est.khat, est.stderr), {cfg.theory: curves[cfg.theory]},
            title=f"2-point correlation vs {cfg.theory}"))
    print("\n".join(lines))
    return EXIT_OK if dev.passed else EXIT_FAIL


def cmd_weyl(args, cfg: ExperimentConfig) -> int:
    if not cfg.gamma:
        raise PertSpecError("weyl needs gamma = re_min,re_max,im_min,im_max")
    x1, x2, y1, y2 = cfg.gamma
    E = max(abs(complex(a, b)) for a in (x1, x2) for b in (y1, y2))
    spectra = simulate_spectra(cfg, args.threads, max_energy=E)
    mean, predicted = weyl_count(spectra, cfg.gamma, model_of(cfg))
    rel = (mean - predicted) / predicted if predicted else 0.0
    lines = [f"meanCount {mean:.6g}", f"predicted {predicted:.6g}", f"relative_deviation {rel:+.4g}"]
    with io.atomic_outputs(_out_dir(args, cfg)) as stage:
        (stage / "weyl.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if abs(rel) <= cfg.weylTolerance else EXIT_FAIL


COMMANDS = {"spectrum": cmd_spectrum, "gaf": cmd_gaf, "correlate": cmd_correlate,
            "report": cmd_report, "weyl": cmd_weyl}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for realisations")
    common.add_argument("--out", help="output directory (overrides outDir)")
    parser = argparse.ArgumentParser(prog="pertspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="simulate perturbed spectra")
    sub.add_parser("gaf", parents=[common], help="sample limiting zero processes")
    p = sub.add_parser("correlate", parents=[common], help="pair correlation of rescaled.csv files")
    p.add_argument("inputs", nargs="*")
    p = sub.add_parser("report", parents=[common], help="compare corr.csv with a theory curve")
    p.add_argument("inputs", nargs="?", default=None)
    sub.add_parser("weyl", parents=[common], help="eigenvalue counts against phase-space volume")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report" and args.inputs is not None:
        args.inputs = [args.inputs]
    elif args.command == "report":
        args.inputs = []
    if args.threads < 1:
        _log("error: --threads must be >= 1")
        return EXIT_ERROR
    try:
        cfg = load_config(args.config, args.set)
        return COMMANDS[args.command](args, cfg)
    except (PertSpecError, ValueError, OSError) as exc:
        _log(f"error: {type(exc).__name__}: {exc}")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
