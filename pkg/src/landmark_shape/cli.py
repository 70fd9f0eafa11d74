"""Command-line interface: ``landmark-shape {detect,simulate,evaluate,features,benchmark}``.

Exit codes: 0 success, 1 usage/configuration error, 2 data error, 3 internal error.
Landmark indices in every output file are 1-based.
"""

from __future__ import annotations

import argparse
import logging
import os
import statistics
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .features import (
    DEFAULT_TBR_WINDOWS,
    SEGMENT_COLUMNS,
    chain_feature_columns,
    chain_feature_row,
    segment_feature_rows,
)
from .geometry import GeometryError, PolygonalChain, centroid, chain_length, normalize
from .io import (
    DataError,
    read_chain,
    read_landmarks,
    timestamp,
    write_chain,
    write_csv,
    write_json,
    write_landmarks,
)
from .metrics import ari, convex_hull_baseline, mcc, segment_labels, windowed_match
from .model import ConstraintViolation, Hyperparameters, is_valid_gamma
from .sampler import InitializationError, SamplerConfig, run_multi_chain
from .simulate import (
    BENCHMARK_COLUMNS,
    GenerationError,
    SimScenario,
    run_benchmark,
    simulate,
    summarize_benchmark,
)
from .summaries import compute_ppm, credible_intervals, dahl_estimate, map_estimate

log = logging.getLogger("landmark_shape")

OUT_DIR_ENV = "LANDMARK_SHAPE_OUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or "results")


def _manifest(command: str, args, extra: dict) -> dict:
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    return {"tool": "landmark-shape", "version": __version__, "command": command,
            "options": opts, "created": timestamp(), **extra}


# ---------------------------------------------------------------- detect

def _hyper_for(m: int, args) -> Hyperparameters:
    return Hyperparameters.default(m, k_hat=args.k_hat, alpha_sigma=args.alpha_sigma,
                                   beta_sigma=args.beta_sigma)


def _config_for(m: int, args) -> SamplerConfig:
    return SamplerConfig(iterations=args.iterations or 100 * (m + 1),
                         burnin_fraction=args.burnin, special_move_period=args.special_period,
                         shift_magnitude=args.shift, seed=args.seed, n_chains=args.chains)


def _resolved(raw: PolygonalChain, args) -> dict:
    m = len(raw)
    hyper = _hyper_for(m, args)
    cfg = _config_for(m, args)
    cx, cy = centroid(raw)
    return {"n_vertices": m, "scale": chain_length(raw), "center": [cx, cy],
            "hyperparameters": vars(hyper).copy(), "sampler": vars(cfg).copy()}


def detect_chain(raw: PolygonalChain, args) -> tuple[dict, list[dict], np.ndarray]:
    """Run inference on one chain; returns (report, segment rows, final gamma)."""
    chain = normalize(raw)
    m = len(chain)
    hyper = _hyper_for(m, args)
    cfg = _config_for(m, args)
    traces = run_multi_chain(chain, hyper, cfg, workers=args.workers)

    g_map = map_estimate(traces)
    lp_map = max(float(t.log_post.max()) for t in traces)
    g_ppm = dahl_estimate(compute_ppm(traces), traces) if args.ppm else None
    final = g_ppm if g_ppm is not None else g_map
    intervals = credible_intervals(traces, final, alpha=args.ci_alpha)

    scale = chain_length(raw) if args.raw_units else 1.0
    seg_rows = segment_feature_rows(chain, final, scale=scale)

    proposed: dict[str, int] = {}
    accepted: dict[str, int] = {}
    for t in traces:
        for k, v in t.proposed.items():
            proposed[k] = proposed.get(k, 0) + v
            accepted[k] = accepted.get(k, 0) + t.accepted.get(k, 0)

    def one_based(g):
        return None if g is None else [int(i) + 1 for i in np.flatnonzero(g)]

    report = {
        "n_vertices": m,
        "estimate": "ppm" if g_ppm is not None else "map",
        "landmarks": one_based(final),
        "K": int(final.sum()),
        "landmarks_map": one_based(g_map),
        "k_map": int(g_map.sum()),
        "landmarks_ppm": one_based(g_ppm),
        "k_ppm": None if g_ppm is None else int(g_ppm.sum()),
        "log_posterior_map": lp_map,
        "credible_intervals": [{"landmark": ci.landmark + 1, "lo": ci.lo + 1, "hi": ci.hi + 1,
                                "left": ci.left, "right": ci.right} for ci in intervals],
        "acceptance_rates": {k: (accepted[k] / n if n else 0.0) for k, n in proposed.items()},
        "units": "input" if args.raw_units else "normalized",
        "segments": seg_rows,
    }
    return report, seg_rows, final


def cmd_detect(args) -> int:
    out = _out_dir(args)
    chains = [(Path(p), read_chain(p, args.format)) for p in args.inputs]
    runs = [{"input": str(p), **_resolved(raw, args)} for p, raw in chains]
    manifest = _manifest("detect", args, {"runs": runs})
    if args.manifest_only:
        write_json(out / "manifest.json", manifest)
        return EXIT_OK
    for path, raw in chains:
        report, seg_rows, final = detect_chain(raw, args)
        stem = path.stem
        write_json(out / f"{stem}.report.json", report)
        write_csv(out / f"{stem}.segments.csv", seg_rows, SEGMENT_COLUMNS)
        write_landmarks(out / f"{stem}.pred.csv", final)
        log.info("%s: K=%d landmarks %s", path, report["K"], report["landmarks"])
    write_json(out / "manifest.json", manifest)
    return EXIT_OK


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    out = _out_dir(args)
    sc = SimScenario(args.k, args.n, args.sigma2, args.equilateral, args.replicates, args.seed)
    files = []
    if not args.manifest_only:
        for rep in range(args.replicates):
            data = simulate(sc, rep)
            stem = f"{args.prefix}_{rep:03d}"
            write_chain(out / f"{stem}.csv", data.chain)
            write_landmarks(out / f"{stem}.truth.csv", data.gamma_true)
            files.append({"chain": f"{stem}.csv", "truth": f"{stem}.truth.csv",
                          "scale": data.scale, "rotation": data.rotation})
    write_json(out / "manifest.json", _manifest("simulate", args, {"replicates": files}))
    return EXIT_OK


# ---------------------------------------------------------------- evaluate

def _find_prediction(pred_dir: Path, stem: str) -> Path:
    for name in (f"{stem}.pred.csv", f"{stem}.report.json", f"{stem}.csv"):
        p = pred_dir / name
        if p.exists():
            return p
    raise DataError(f"no prediction for {stem!r} in {pred_dir}")


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    truth_dir = Path(args.truth_dir)
    truths = sorted(truth_dir.glob("*.truth.csv"))
    if not truths:
        raise DataError(f"no *.truth.csv files in {truth_dir}")
    if args.method != "hull" and not args.pred_dir:
        raise UsageError("--pred-dir is required unless --method hull")
    rows = []
    for tpath in truths:
        stem = tpath.name[: -len(".truth.csv")]
        g_true = read_landmarks(tpath)
        if args.method == "hull":
            chain = read_chain(Path(args.chain_dir or truth_dir) / f"{stem}.csv")
            if len(chain) != len(g_true):
                raise DataError(f"chain has {len(chain)} vertices, truth has {len(g_true)}", tpath)
            g_hat = convex_hull_baseline(chain)
        else:
            g_hat = read_landmarks(_find_prediction(Path(args.pred_dir), stem), len(g_true))
        w = windowed_match(g_true, g_hat, args.window)
        rows.append({"file": stem, "method": args.method, "n_vertices": len(g_true),
                     "k_true": int(g_true.sum()), "k_hat": int(g_hat.sum()),
                     "mcc": mcc(g_true, g_hat),
                     "ari": ari(segment_labels(g_true), segment_labels(g_hat)),
                     "tp": w.tp, "fp": w.fp, "fn": w.fn, "tn": w.tn})
    cols = ["file", "method", "n_vertices", "k_true", "k_hat", "mcc", "ari", "tp", "fp", "fn", "tn"]
    write_csv(out / "metrics.csv", rows, cols)
    summary = [{"method": args.method, "files": len(rows),
                "median_mcc": statistics.median(r["mcc"] for r in rows),
                "median_ari": statistics.median(r["ari"] for r in rows)}]
    write_csv(out / "metrics_summary.csv", summary, ["method", "files", "median_mcc", "median_ari"])
    write_json(out / "manifest.json", _manifest("evaluate", args, {"files": [r["file"] for r in rows]}))
    return EXIT_OK


# ---------------------------------------------------------------- features

def _landmarks_for(chain_path: Path, m: int, args) -> np.ndarray:
    stem = chain_path.stem
    folder = Path(args.landmarks_dir) if args.landmarks_dir else chain_path.parent
    for name in (f"{stem}.pred.csv", f"{stem}.report.json", f"{stem}.truth.csv"):
        p = folder / name
        if p.exists():
            return read_landmarks(p, m)
    raise DataError(f"no landmark file for {chain_path.name} in {folder}")


def cmd_features(args) -> int:
    out = _out_dir(args)
    windows = tuple(args.tbr_window or DEFAULT_TBR_WINDOWS)
    if args.landmarks and len(args.landmarks) != len(args.inputs):
        raise UsageError("--landmarks needs one file per input chain")
    seg_out, chain_out = [], []
    for idx, p in enumerate(args.inputs):
        path = Path(p)
        raw = read_chain(path, args.format)
        chain = normalize(raw)
        m = len(chain)
        if args.detect:
            _, _, gamma = detect_chain(raw, args)
        elif args.landmarks:
            gamma = read_landmarks(args.landmarks[idx], m)
        else:
            gamma = _landmarks_for(path, m, args)
        if not is_valid_gamma(gamma, chain):
            raise DataError("landmarks violate the model constraints for this chain", path)
        scale = chain_length(raw) if args.raw_units else 1.0
        rows = segment_feature_rows(chain, gamma, zero_state=args.zero_state, scale=scale)
        for L in windows:
            if L > m:
                log.warning("%s: TBR window %d exceeds %d vertices; left empty", path, L, m)
        crow = chain_feature_row(chain, rows, windows, raw_chain=raw,
                                 radial_chain=raw if args.raw_units else chain)
        seg_out += [{"chain": path.stem, **r} for r in rows]
        chain_out.append({"chain": path.stem, **crow})
    write_csv(out / "segment_features.csv", seg_out, ["chain", *SEGMENT_COLUMNS])
    write_csv(out / "chain_features.csv", chain_out, ["chain", *chain_feature_columns(windows)])
    write_json(out / "manifest.json", _manifest("features", args, {"chains": len(chain_out)}))
    return EXIT_OK


# ---------------------------------------------------------------- benchmark

def cmd_benchmark(args) -> int:
    out = _out_dir(args)
    scenarios = [SimScenario(k, n, s2, args.equilateral, args.replicates, args.seed)
                 for k in args.k for n in args.n for s2 in args.sigma2]
    if args.manifest_only:
        write_json(out / "manifest.json", _manifest("benchmark", args, {"scenarios": len(scenarios)}))
        return EXIT_OK
    rows = run_benchmark(scenarios, {"n_chains": args.chains},
                         iterations_factor=args.iterations_factor,
                         record_runtime=not args.no_timing, workers=args.workers)
    write_csv(out / "benchmark.csv", rows, BENCHMARK_COLUMNS)
    write_csv(out / "benchmark_summary.csv", summarize_benchmark(rows),
              ["K", "n", "sigma2", "equilateral", "method", "replicates", "median_mcc", "median_ari"])
    write_json(out / "manifest.json", _manifest("benchmark", args, {"scenarios": len(scenarios)}))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _sampler_flags(p):
    g = p.add_argument_group("inference")
    g.add_argument("--iterations", type=int, default=None, help="MCMC iterations (default 100 n)")
    g.add_argument("--burnin", type=float, default=0.5, help="burn-in fraction")
    g.add_argument("--k-hat", type=float, default=3.0, help="prior expected landmark count")
    g.add_argument("--alpha-sigma", type=float, default=3.0)
    g.add_argument("--beta-sigma", type=float, default=None, help="default 1/(n-1)")
    g.add_argument("--chains", type=int, default=4)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--special-period", type=int, default=20,
                   help="iterations between swap/shift proposals")
    g.add_argument("--shift", type=int, default=1, help="maximum partial-shift offset")
    g.add_argument("--ppm", action=argparse.BooleanOptionalAction, default=True,
                   help="report the PPM (Dahl) estimate as the final landmarks")
    g.add_argument("--ci-alpha", type=float, default=0.05, help="credible-interval test level")
    g.add_argument("--workers", type=int, default=1, help="processes for parallel chains")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="landmark-shape", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--out-dir", default=None, help=f"output directory (env {OUT_DIR_ENV})")
    common.add_argument("--manifest-only", action="store_true",
                        help="write the resolved run manifest and stop")

    p = sub.add_parser("detect", parents=[common], help="detect landmarks on chain files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--raw-units", action="store_true", help="report distances in input units")
    _sampler_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", parents=[common], help="generate synthetic chains")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n", type=int, default=140)
    p.add_argument("--sigma2", type=float, default=0.5)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--equilateral", action="store_true")
    p.add_argument("--prefix", default="sim")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against truth")
    p.add_argument("--truth-dir", required=True)
    p.add_argument("--pred-dir", default=None)
    p.add_argument("--chain-dir", default=None, help="chains for --method hull (default truth dir)")
    p.add_argument("--method", default="bayes", help="label for the rows; 'hull' scores the hull baseline")
    p.add_argument("--window", type=int, default=5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("features", parents=[common], help="roughness feature matrices")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--landmarks", nargs="+", default=None, help="landmark files, one per input")
    p.add_argument("--landmarks-dir", default=None)
    p.add_argument("--detect", action="store_true", help="run inference instead of reading landmarks")
    p.add_argument("--tbr-window", type=int, action="append", default=None,
                   help="TBR window length; repeat for several (default 5, 50, 200)")
    p.add_argument("--zero-state", choices=("+", "-"), default="+")
    p.add_argument("--raw-units", action="store_true")
    _sampler_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("benchmark", parents=[common], help="simulation study")
    p.add_argument("--k", type=int, nargs="+", default=[4])
    p.add_argument("--n", type=int, nargs="+", default=[140])
    p.add_argument("--sigma2", type=float, nargs="+", default=[0.5])
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--equilateral", action="store_true")
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--iterations-factor", type=int, default=100)
    p.add_argument("--no-timing", action="store_true", help="leave runtime_seconds empty")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError) as e:
        if isinstance(e, (DataError, ConstraintViolation, GeometryError)):
            print(f"data error: {e}", file=sys.stderr)
            return EXIT_DATA
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (GenerationError, InitializationError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
