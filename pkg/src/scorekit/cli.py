"""Batch command-line front end.

Every subcommand reads and writes plain files (the formats owned by the
library modules), so multi-stage experiments are DAGs of idempotent batch
steps: rerunning a step with identical inputs rewrites identical bytes.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import os
import sys
from contextlib import nullcontext

import numpy as np

from . import __version__
from .aggregation import (
    AggregationMethod,
    RecognizabilityParams,
    parse_frame_table,
    score_multiframe_trials,
)
from .calibration import (
    AffineCalibrator,
    read_calibration,
    write_calibration,
)
from .embeddings import (
    filter_classes,
    fuse_cl,
    rank_class_informativeness,
    read_embeddings,
    write_embeddings,
)
from .exceptions import DataError, NumericalError, ScorekitError
from .fusion import LinearFuser, greedy_fuse, submission_pipeline, write_fusion
from .metrics import (
    DcfParams,
    det_curve,
    distribution_report,
    evaluate_scores,
    write_distribution_report,
    write_metrics_report,
)
from .normalization import (
    ChannelNorm,
    adaptive_snorm,
    estimate_channel_stats,
    normalize_pipeline,
    read_channel_stats,
    write_channel_stats,
)
from .plots import det_plot_svg, histogram_svg
from .protocol import (
    parse_segment_meta,
    parse_trials,
    write_segment_meta,
    write_trials,
)
from .scoring import Stage, read_scores, score_trials, write_scores
from .synth import synth_verification_fixture


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --- loaders -----------------------------------------------------------------


def _load_meta(path):
    with open(path, "r", encoding="utf-8") as fp:
        return parse_segment_meta(fp, path=path)


def _load_trials(path, meta=None):
    """Load a trial list, sniffing whether a key column is present."""
    with open(path, "r", encoding="utf-8") as fp:
        key_present = False
        for line in fp:
            if line.strip():
                key_present = len(line.rstrip("\n").split("\t")) == 3
                break
    with open(path, "r", encoding="utf-8") as fp:
        return parse_trials(fp, key_present, meta=meta, path=path)


def _load_key(path, meta=None):
    with open(path, "r", encoding="utf-8") as fp:
        return parse_trials(fp, key_present=True, meta=meta, path=path)


def _named_paths(items):
    """Parse repeated ``name=path`` (or bare path) system arguments."""
    named = {}
    for item in items:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            path = item
            name = os.path.splitext(os.path.basename(path))[0]
        if not name or name in named:
            raise DataError(f"bad or duplicate system name {name!r}")
        named[name] = path
    return named


def _dcf_params(args):
    values = [float(x) for x in args.p_target.split(",") if x]
    if not values:
        raise DataError("--p-target needs at least one value")
    return [DcfParams(p, args.c_miss, args.c_fa) for p in values]


def _write(path, write_fn, binary=False):
    mode = "wb" if binary else "w"
    kwargs = {} if binary else {"encoding": "utf-8"}
    with open(path, mode, **kwargs) as fp:
        write_fn(fp)


def _save_scores(path, score_set):
    _write(path, lambda fp: write_scores(score_set, fp))


# --- subcommands --------------------------------------------------------------


def _cmd_score(args):
    trials = _load_trials(args.trials)
    enroll = read_embeddings(args.enroll)
    test = read_embeddings(args.test)
    _save_scores(args.out, score_trials(trials, enroll, test))
    return 0


def _cmd_aggregate(args):
    trials = _load_trials(args.trials)
    enroll = read_embeddings(args.enroll)
    frames = read_embeddings(args.frames)
    with open(args.frame_table, "r", encoding="utf-8") as fp:
        table = parse_frame_table(fp, path=args.frame_table)
    method = AggregationMethod(args.method)
    params = None
    if args.ui is not None:
        ui_set = read_embeddings(args.ui)
        if len(ui_set) != 1:
            raise DataError(
                f"{args.ui}: expected exactly one unrecognizable-identity "
                f"embedding, found {len(ui_set)}"
            )
        params = RecognizabilityParams(
            ui_set.matrix[0],
            offset=args.rs_offset,
            scale=args.rs_scale,
            wate_threshold=args.wate_threshold,
        )
    elif method in (AggregationMethod.WATE, AggregationMethod.MRS):
        raise DataError(f"--ui is required for {method} aggregation")
    _save_scores(
        args.out,
        score_multiframe_trials(trials, enroll, frames, table, method, params),
    )
    return 0


def _cmd_snorm(args):
    trials = _load_trials(args.trials)
    scores = read_scores(args.scores, trials)
    out = adaptive_snorm(
        scores,
        read_embeddings(args.enroll),
        read_embeddings(args.test),
        read_embeddings(args.cohort),
        args.n_top,
    )
    _save_scores(args.out, out)
    return 0


def _cmd_chnorm(args):
    meta = _load_meta(args.meta)
    trials = _load_trials(args.trials, meta=meta)
    scores = read_scores(args.scores, trials)
    if args.stats:
        with open(args.stats, "r", encoding="utf-8") as fp:
            stats = read_channel_stats(fp, path=args.stats)
    else:
        stats = estimate_channel_stats(scores)
    if args.save_stats:
        _write(args.save_stats, lambda fp: write_channel_stats(stats, fp))
    _save_scores(args.out, ChannelNorm.from_stats(stats).transform(scores))
    return 0


def _cmd_normalize(args):
    meta = _load_meta(args.meta) if args.meta else None
    trials = _load_trials(args.trials, meta=meta)
    scores = read_scores(args.scores, trials)
    if args.chnorm and meta is None:
        raise DataError("--chnorm requires --meta to derive channel pairs")
    stats = None
    if args.stats:
        with open(args.stats, "r", encoding="utf-8") as fp:
            stats = read_channel_stats(fp, path=args.stats)
    out = normalize_pipeline(
        scores,
        enroll=read_embeddings(args.enroll) if args.enroll else None,
        test=read_embeddings(args.test) if args.test else None,
        cohort=read_embeddings(args.cohort) if args.cohort else None,
        n_top=args.n_top,
        apply_snorm=args.snorm,
        apply_chnorm=args.chnorm,
        channel_stats=stats,
    )
    _save_scores(args.out, out)
    return 0


def _cmd_fuse_cl(args):
    sets = [read_embeddings(p) for p in args.inputs]
    weights = [float(x) for x in args.weights.split(",")]
    fused = fuse_cl(sets, weights)
    if args.keep_top is not None:
        ranking = rank_class_informativeness(fused)
        keep = np.sort(ranking[: args.keep_top])
        fused = filter_classes(fused, keep)
    write_embeddings(args.out, fused, fmt=args.format)
    return 0


def _cmd_calibrate(args):
    params = _dcf_params(args)
    if args.model_in:
        if not (args.trials or args.key):
            raise DataError("calibrate --model-in needs --trials or --key")
        trials = _load_key(args.key) if args.key else _load_trials(args.trials)
        scores = read_scores(args.scores, trials)
        with open(args.model_in, "r", encoding="utf-8") as fp:
            cal = read_calibration(fp, path=args.model_in)
    else:
        if not args.key:
            raise DataError("calibrate needs --key to train (or --model-in)")
        trials = _load_key(args.key)
        scores = read_scores(args.scores, trials)
        est = AffineCalibrator(params).fit(scores.scores, trials.target_mask)
        cal = est.calibration_
        if args.model_out:
            _write(args.model_out, lambda fp: write_calibration(cal, fp))
    out = scores.replace_scores(cal.apply(scores.scores), Stage.CALIBRATED)
    _save_scores(args.out, out)
    return 0


def _cmd_fuse_linear(args):
    params = _dcf_params(args)
    named = _named_paths(args.scores)
    trials = _load_key(args.key)
    systems = {n: read_scores(p, trials) for n, p in named.items()}
    matrix = np.column_stack([systems[n].scores for n in systems])
    fuser = LinearFuser(params).fit(matrix, trials.target_mask)
    if args.model_out:
        _write(
            args.model_out,
            lambda fp: write_fusion(fuser, list(systems), fp),
        )
    fused = next(iter(systems.values())).replace_scores(
        fuser.transform(matrix), Stage.FUSED
    )
    _save_scores(args.out, fused)
    return 0


def _cmd_fuse_greedy(args):
    params = _dcf_params(args)
    named = _named_paths(args.scores)
    trials = _load_key(args.key)
    systems = {n: read_scores(p, trials) for n, p in named.items()}
    selection = greedy_fuse(systems, trials.target_mask, params)
    fused_scores = selection.fused_scores(
        {n: s.scores for n, s in systems.items()}
    )
    fused = next(iter(systems.values())).replace_scores(fused_scores, Stage.FUSED)
    _save_scores(args.out, fused)
    if args.selection_out:

        def write_selection(fp):
            fp.write("step\tsystem\tact_dcf\n")
            for i, (name, value) in enumerate(
                zip(selection.systems, selection.trace), start=1
            ):
                fp.write(f"{i}\t{name}\t{value:.17g}\n")

        _write(args.selection_out, write_selection)
    return 0


def _cmd_pipeline(args):
    params = _dcf_params(args)
    trials = _load_key(args.key)
    audio = {
        n: read_scores(p, trials)
        for n, p in _named_paths(args.audio or []).items()
    }
    video = {
        n: read_scores(p, trials)
        for n, p in _named_paths(args.video or []).items()
    }
    result = submission_pipeline(audio, video, trials.target_mask, params)
    final = next(iter({**audio, **video}.values())).replace_scores(
        result.scores, Stage.CALIBRATED
    )
    _save_scores(args.out, final)
    if args.report:

        def write_report(fp):
            fp.write("step\tdetail\n")
            for name, cal in result.calibrations.items():
                fp.write(f"calibration\t{name}\ta={cal.a_:.6g}\tb={cal.b_:.6g}\n")
            for modality, sel in (
                ("audio", result.audio_selection),
                ("video", result.video_selection),
            ):
                if sel is None:
                    continue
                fp.write(
                    f"greedy-{modality}\t{','.join(sel.systems)}"
                    f"\tact_dcf={sel.trace[-1]:.6g}\n"
                )
            if result.cross_fusion is not None:
                weights = ",".join(
                    f"{w:.6g}" for w in result.cross_fusion.weights_
                )
                fp.write(f"cross-fusion\t{weights}\n")
            fp.write(
                f"final-calibration\ta={result.final_calibration.a_:.6g}"
                f"\tb={result.final_calibration.b_:.6g}\n"
            )

        _write(args.report, write_report)
    return 0


def _cmd_evaluate(args):
    params = _dcf_params(args)
    meta = _load_meta(args.meta) if args.meta else None
    trials = _load_key(args.key, meta=meta)
    scores = read_scores(args.scores, trials, stage=Stage(args.stage))
    report = evaluate_scores(scores, params, per_channel=meta is not None)
    if args.out:
        _write(args.out, lambda fp: write_metrics_report(report, fp))
    else:
        write_metrics_report(report, sys.stdout)
    if args.dist_out or args.hist_prefix:
        if meta is None:
            raise DataError("score distributions need --meta channel pairs")
        dist = distribution_report(scores)
        if args.dist_out:
            _write(args.dist_out, lambda fp: write_distribution_report(dist, fp))
        if args.hist_prefix:
            for pair, pair_dist in dist.per_pair.items():
                svg = histogram_svg(
                    pair_dist, dist.bin_edges, f"score distribution {pair.key}"
                )
                _write(f"{args.hist_prefix}{pair.key}.svg", lambda fp: fp.write(svg))
    return 0


def _cmd_det(args):
    named = _named_paths(args.scores)
    trials = _load_key(args.key)
    curves = {}
    for name, path in named.items():
        s = read_scores(path, trials)
        curves[name] = det_curve(s.scores, trials.target_mask)
    svg = det_plot_svg(curves, title=args.title)
    _write(args.out, lambda fp: fp.write(svg))
    return 0


def _cmd_synth(args):
    fixture = synth_verification_fixture(
        seed=args.seed,
        n_speakers=args.n_speakers,
        n_test_per_speaker=args.n_test_per_speaker,
        dim=args.dim,
        cl_dim=args.cl_dim,
        n_cohort=args.n_cohort,
        channel_strength=args.channel_strength,
        noise=args.noise,
        cl_noise=args.cl_noise,
        hotness=args.hotness,
    )
    os.makedirs(args.out_dir, exist_ok=True)

    def path(name):
        return os.path.join(args.out_dir, name)

    _write(path("meta.tsv"), lambda fp: write_segment_meta(fixture.meta, fp))
    _write(path("trials.tsv"), lambda fp: write_trials(fixture.trials, fp))
    for name, emb in (
        ("enroll", fixture.enroll),
        ("test", fixture.test),
        ("cohort", fixture.cohort),
        ("enroll_cl", fixture.enroll_cl),
        ("test_cl", fixture.test_cl),
        ("cohort_cl", fixture.cohort_cl),
    ):
        write_embeddings(path(f"{name}.emb"), emb, fmt="binary")
    return 0


# --- parser -------------------------------------------------------------------


def build_parser():
    parser = _Parser(
        prog="scorekit",
        description="Verification back-end: score, normalize, calibrate, "
        "fuse and evaluate biometric trial protocols.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        metavar="N",
        help="cap worker threads (default: $SCOREKIT_THREADS or unlimited)",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def cmd(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        return p

    def add_dcf(p):
        p.add_argument("--p-target", default="0.05", metavar="LIST",
                       help="comma-separated target priors (default 0.05)")
        p.add_argument("--c-miss", type=float, default=1.0)
        p.add_argument("--c-fa", type=float, default=1.0)

    p = cmd("score", _cmd_score, "cosine-score a trial list")
    p.add_argument("--trials", required=True)
    p.add_argument("--enroll", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)

    p = cmd("aggregate", _cmd_aggregate,
            "score multi-frame video trials (MS/ATE/WATE/MRS)")
    p.add_argument("--trials", required=True)
    p.add_argument("--enroll", required=True)
    p.add_argument("--frames", required=True, help="frame embedding file")
    p.add_argument("--frame-table", required=True,
                   help="test_id<TAB>frame_index<TAB>embedding_id")
    p.add_argument("--method", required=True,
                   choices=[m.value for m in AggregationMethod])
    p.add_argument("--ui", help="unrecognizable-identity embedding file")
    p.add_argument("--rs-offset", type=float, default=0.35)
    p.add_argument("--rs-scale", type=float, default=0.89)
    p.add_argument("--wate-threshold", type=float, default=0.65)
    p.add_argument("--out", required=True)

    p = cmd("snorm", _cmd_snorm, "adaptive s-norm over a top-n impostor cohort")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--enroll", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--cohort", required=True)
    p.add_argument("--n-top", type=int, required=True,
                   help="impostors kept per side (no default; protocol-specific)")
    p.add_argument("--out", required=True)

    p = cmd("chnorm", _cmd_chnorm, "per-channel-pair score normalization")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--stats", help="apply precomputed channel stats")
    p.add_argument("--save-stats", help="write estimated stats here")
    p.add_argument("--out", required=True)

    p = cmd("normalize", _cmd_normalize,
            "run the normalization stages in order (s-norm, then ch-norm)")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--snorm", action="store_true")
    p.add_argument("--chnorm", action="store_true")
    p.add_argument("--enroll")
    p.add_argument("--test")
    p.add_argument("--cohort")
    p.add_argument("--n-top", type=int)
    p.add_argument("--meta")
    p.add_argument("--stats")
    p.add_argument("--out", required=True)

    p = cmd("fuse-cl", _cmd_fuse_cl, "weighted sum of class-logit embedding sets")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--weights", required=True, metavar="W1,W2,...")
    p.add_argument("--keep-top", type=int,
                   help="keep only the K most informative classes")
    p.add_argument("--format", choices=["binary", "text"], default="binary")
    p.add_argument("--out", required=True)

    p = cmd("calibrate", _cmd_calibrate, "affine score-to-LLR calibration")
    p.add_argument("--scores", required=True)
    p.add_argument("--key")
    p.add_argument("--trials", help="trial list when applying with --model-in")
    p.add_argument("--model-in", help="apply an existing model")
    p.add_argument("--model-out")
    add_dcf(p)
    p.add_argument("--out", required=True)

    p = cmd("fuse-linear", _cmd_fuse_linear, "logistic score-level fusion")
    p.add_argument("--scores", nargs="+", required=True, metavar="NAME=PATH")
    p.add_argument("--key", required=True)
    p.add_argument("--model-out")
    add_dcf(p)
    p.add_argument("--out", required=True)

    p = cmd("fuse-greedy", _cmd_fuse_greedy,
            "greedy system selection by dev actDCF")
    p.add_argument("--scores", nargs="+", required=True, metavar="NAME=PATH")
    p.add_argument("--key", required=True)
    p.add_argument("--criterion", choices=["actdcf"], default="actdcf")
    p.add_argument("--selection-out")
    add_dcf(p)
    p.add_argument("--out", required=True)

    p = cmd("pipeline", _cmd_pipeline,
            "4-step submission pipeline (calibrate, per-modality greedy "
            "fusion, cross-modality fusion, final calibration)")
    p.add_argument("--audio", nargs="*", metavar="NAME=PATH")
    p.add_argument("--video", nargs="*", metavar="NAME=PATH")
    p.add_argument("--key", required=True)
    p.add_argument("--report")
    add_dcf(p)
    p.add_argument("--out", required=True)

    p = cmd("evaluate", _cmd_evaluate, "EER / minDCF / actDCF report")
    p.add_argument("--scores", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--meta", help="enables the per-channel breakdown")
    p.add_argument("--stage", default="raw",
                   choices=[s.value for s in Stage],
                   help="stage label recorded in the report")
    p.add_argument("--dist-out", help="write per-pair score distributions TSV")
    p.add_argument("--hist-prefix", help="write per-pair histogram SVGs")
    add_dcf(p)
    p.add_argument("--out", help="report TSV (default: stdout)")

    p = cmd("det", _cmd_det, "probit-scaled DET plot (SVG)")
    p.add_argument("--scores", nargs="+", required=True, metavar="NAME=PATH")
    p.add_argument("--key", required=True)
    p.add_argument("--title", default="DET curve")
    p.add_argument("--out", required=True)

    p = cmd("synth", _cmd_synth, "generate a seeded synthetic protocol fixture")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-speakers", type=int, default=30)
    p.add_argument("--n-test-per-speaker", type=int, default=3)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--cl-dim", type=int, default=48)
    p.add_argument("--n-cohort", type=int, default=120)
    p.add_argument("--channel-strength", type=float, default=0.8)
    p.add_argument("--noise", type=float, default=0.55)
    p.add_argument("--cl-noise", type=float, default=0.35)
    p.add_argument("--hotness", type=float, default=0.0,
                   help="strength of per-segment score offsets")

    return parser


def _thread_limit(args):
    n = args.threads
    if n is None:
        env = os.environ.get("SCOREKIT_THREADS")
        n = int(env) if env else None
    if n is None:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=n)
    except ImportError:
        return nullcontext()


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit(args):
            return args.func(args)
    except NumericalError as exc:
        print(f"scorekit: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, ScorekitError, OSError) as exc:
        print(f"scorekit: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
