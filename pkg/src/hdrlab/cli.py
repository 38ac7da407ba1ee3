"""``hdrlab`` command line.

Exit codes: 0 success, 1 data or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import metrics as M
from . import synth
from .alignment import (CODEC_NAMES, CodecError, SurrogateCodec, SurrogateParams, latent_distributions,
                        make_codec, pixel_distributions, kl_divergence, roundtrip_corpus,
                        roundtrip_error_curve)
from .alignment.analysis import prior_encoded
from .core import DEFAULT_NITS_PER_UNIT, EncodedFrame, FrameError
from .degrade import ConfigError, DegradeConfig, make_training_pair
from .io import FormatError, read_exr_pixels, write_csv, write_exr, write_json, REPORT_SCHEMA
from .io.pfm import read_pfm_pixels, write_pfm
from .io.sequence import (list_frames, read_radiance, read_radiance_clip, read_sdr_frames,
                          write_radiance_clip, write_sdr_clip, RADIANCE_SUFFIXES)
from .transfer import (ANALYSIS_FNS, TransferFn, TransferMismatchError, decode, encode, to_model_range,
                       transfer_curve)

log = logging.getLogger("hdrlab")

TAG_ATTRIBUTE = "hdrlabTransfer"
DEFAULT_CORPUS_CAP = 130
METRIC_NAMES = ("pu21-psnr", "pu21-ssim", "ssim", "flicker", "f2f-psnr", "peak", "dr")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _fn_type(value: str) -> TransferFn:
    try:
        return TransferFn.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fn_list(value: str) -> tuple:
    if value.strip().lower() == "all":
        return ANALYSIS_FNS
    return tuple(_fn_type(v) for v in value.split(",") if v.strip())


def _bins(value: str) -> int:
    n = int(value)
    if n < 2:
        raise argparse.ArgumentTypeError("--bins must be >= 2")
    return n


def _positive(value: str) -> float:
    v = float(value)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _metric_list(value: str) -> tuple:
    names = tuple(v.strip().lower() for v in value.split(",") if v.strip())
    bad = [n for n in names if n not in METRIC_NAMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown metric(s) {', '.join(bad) or '(none)'}; valid: {', '.join(METRIC_NAMES)}")
    return names


def _size(value: str) -> tuple[int, int]:
    try:
        if "x" in value.lower():
            w, h = (int(v) for v in value.lower().split("x"))
        else:
            w = h = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("size must be N or WxH") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("size must be positive")
    return w, h


FN_HELP = ("transfer function: " + ", ".join(f.value for f in TransferFn)
           + " ('aces' means aces-linear, the range-normalised variant)")


# ---------------------------------------------------------------- transfer

def _read_encoded(path: Path, fn: TransferFn, force: bool) -> EncodedFrame:
    if path.suffix.lower() == ".exr":
        px, extra = read_exr_pixels(path)
        tag = extra.get(TAG_ATTRIBUTE)
    elif path.suffix.lower() == ".pfm":
        px = read_pfm_pixels(path)
        side = path.with_name(path.name + ".transfer")
        tag = side.read_text(encoding="utf-8").strip() if side.exists() else None
    else:
        raise DataError(f"{path}: unsupported format (use .exr or .pfm)")
    if tag is None:
        if not force:
            raise DataError(f"{path}: no transfer tag found; pass --force to decode as {fn.value}")
        tag = fn.value
    if np.any(px < 0) or np.any(px > 1) or not np.all(np.isfinite(px)):
        raise DataError(f"{path}: encoded values must lie in [0, 1]")
    return EncodedFrame(px, transfer=tag)


def _write_frame(path: Path, frame, precision: str, clamp_half: bool, tag: str | None = None):
    suffix = path.suffix.lower()
    if suffix == ".exr":
        write_exr(path, frame, precision=precision, clamp_half=clamp_half,
                  attributes={TAG_ATTRIBUTE: tag} if tag else None)
    elif suffix == ".pfm":
        write_pfm(path, frame)
        side = path.with_name(path.name + ".transfer")
        if tag:
            side.write_text(tag + "\n", encoding="utf-8")
        elif side.exists():
            side.unlink()
    else:
        raise DataError(f"{path}: unsupported output format (use .exr or .pfm)")


def cmd_transfer(args) -> int:
    src, dst = Path(args.input), Path(args.output)
    if args.direction == "encode":
        x = read_radiance(src, args.nits_per_unit)
        _write_frame(dst, encode(args.fn, x), args.precision, args.clamp_half, tag=args.fn.value)
    else:
        t = _read_encoded(src, args.fn, args.force)
        _write_frame(dst, decode(args.fn, t, args.nits_per_unit), args.precision, args.clamp_half)
    log.info("wrote %s", dst)
    return 0


# ---------------------------------------------------------------- analyze

def _surrogate_from_args(args, prior_model):
    if args.surrogate_params and Path(args.surrogate_params).exists():
        return SurrogateCodec(SurrogateParams.load(args.surrogate_params))
    if prior_model is None:
        raise UsageError("the surrogate codec needs --sdr-dir (to fit) or an existing --surrogate-params file")
    codec = SurrogateCodec.fit(prior_model)
    if args.surrogate_params:
        codec.params.save(args.surrogate_params)
    return codec


def _codec_from_args(args, name, prior_model):
    base = name.split("-", 1)[0]
    if base == "surrogate":
        return _surrogate_from_args(args, prior_model)
    if base == "external" and not args.latent_dir:
        raise UsageError("--codec external needs --latent-dir")
    try:
        return make_codec(name, levels=args.levels, directory=args.latent_dir)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_analyze_kl(args) -> int:
    hdr = read_radiance_clip(args.hdr_dir, args.nits_per_unit, limit=args.max_frames)
    prior = read_sdr_frames(args.sdr_dir, limit=args.max_frames)
    prior_model = [to_model_range(prior_encoded(p)) for p in prior]
    codec = _codec_from_args(args, args.codec, prior_model)
    rt_codec = _codec_from_args(args, args.roundtrip_codec, prior_model)
    hist_dir = Path(args.hist_dir) if args.hist_dir else None
    if hist_dir:
        hist_dir.mkdir(parents=True, exist_ok=True)

    results = {}
    for fn in args.fn:
        p_px, q_px = pixel_distributions(fn, [hdr], prior, args.bins)
        p_lat, q_lat = latent_distributions(codec, fn, [hdr], prior, args.bins)
        stats = roundtrip_corpus(rt_codec, fn, [hdr])
        results[fn.value] = {
            "kl_px": kl_divergence(p_px, q_px),
            "kl_lat": kl_divergence(p_lat, q_lat),
            "ssim": stats.ssim,
            "pu21_psnr": stats.pu21_psnr,
            "pu21_ssim": stats.pu21_ssim,
            "mean_rel_error": stats.mean_rel_error,
        }
        if hist_dir:
            for tag, (p, q) in (("px", (p_px, q_px)), ("lat", (p_lat, q_lat))):
                rows = [(a, b, cp, cq) for (a, b, cp), (_, _, cq) in zip(p.rows(), q.rows())]
                write_csv(hist_dir / f"{fn.value}_{tag}.csv", ("bin_lo", "bin_hi", "count", "prior_count"), rows)
        log.info("%s: %s", fn.value, results[fn.value])

    write_json(args.out, {
        "schema": REPORT_SCHEMA,
        "report": "alignment",
        "metadata": {
            "bins": args.bins, "frames": len(hdr), "prior_frames": len(prior),
            "latent_codec": codec.name, "roundtrip_codec": rt_codec.name,
            "nits_per_unit": args.nits_per_unit, "kl_units": "nats",
        },
        "results": results,
    })
    return 0


def cmd_analyze_curve(args) -> int:
    try:
        table = transfer_curve(args.fn, args.n, args.x_min, args.x_max, log_spaced=not args.linear,
                               nits_per_unit=args.nits_per_unit)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_csv(args.out, ("x", "t"), table)
    return 0


def cmd_analyze_roundtrip_curve(args) -> int:
    if not 0 < args.x_min < args.x_max or args.n < 1:
        raise UsageError("need 0 < --x-min < --x-max and --n >= 1")
    prior_model = None
    if args.sdr_dir:
        prior_model = [to_model_range(prior_encoded(p)) for p in read_sdr_frames(args.sdr_dir)]
    codec = _codec_from_args(args, args.codec, prior_model)
    xs = np.geomspace(args.x_min, args.x_max, args.n)
    table = roundtrip_error_curve(codec, args.fn, xs, nits_per_unit=args.nits_per_unit)
    write_csv(args.out, ("x", "mean_rel_error"), table)
    return 0


# ---------------------------------------------------------------- degrade

def _clip_dirs(root: Path) -> list[tuple[str, Path]]:
    if not root.is_dir():
        raise DataError(f"not a directory: {root}")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    clips = [(p.name, p) for p in subdirs if list_frames(p, RADIANCE_SUFFIXES)]
    if not clips and list_frames(root, RADIANCE_SUFFIXES):
        clips = [(root.name, root)]
    if not clips:
        raise DataError(f"no clips (directories of numbered .exr/.pfm frames) in {root}")
    return clips


def cmd_degrade(args) -> int:
    try:
        if args.config:
            cfg = DegradeConfig.load(args.config, seed=args.seed)
        else:
            cfg = DegradeConfig(**({"seed": args.seed} if args.seed is not None else {}))
    except FileNotFoundError:
        raise DataError(f"config file not found: {args.config}") from None
    clips = _clip_dirs(Path(args.clips_dir))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for index, (clip_id, path) in enumerate(clips):
        clip = read_radiance_clip(path, args.nits_per_unit)
        pair = make_training_pair(clip, cfg, index, threads=args.threads)
        sdr_dir, tgt_dir = out / clip_id / "sdr", out / clip_id / "target"
        write_sdr_clip(sdr_dir, pair.sdr)
        write_radiance_clip(tgt_dir, pair.target, precision=args.target_precision)
        d = pair.draws
        lines.append("\t".join([clip_id, f"{d.ev:.9g}", str(d.quality), f"{d.gain:.9g}", f"{d.sigma:.9g}",
                                sdr_dir.relative_to(out).as_posix(), tgt_dir.relative_to(out).as_posix()]))
        log.info("clip %s: %d frames", clip_id, len(clip))
    with open(out / "manifest.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------- metrics

def cmd_metrics(args) -> int:
    needs_ref = {"pu21-psnr", "pu21-ssim", "ssim"} & set(args.metrics)
    if needs_ref and not args.ref:
        raise UsageError(f"--ref is required for {', '.join(sorted(needs_ref))}")
    test = read_radiance_clip(args.test, args.nits_per_unit)
    ref = read_radiance_clip(args.ref, args.nits_per_unit) if args.ref else None
    if ref is not None and (len(ref) != len(test) or ref.shape != test.shape):
        raise DataError(f"ref/test mismatch: {len(ref)} frames {ref.shape} vs {len(test)} frames {test.shape}")
    nits, luma = args.nits_per_unit, args.luma_only
    out = {}
    for name in args.metrics:
        if name == "pu21-psnr":
            out[name] = M.pu21_psnr(ref, test, nits, luma)
        elif name == "pu21-ssim":
            out[name] = M.pu21_ssim(ref, test, nits, luma)
        elif name == "ssim":
            out[name] = M.ssim([encode(args.ssim_fn, f) for f in ref], [encode(args.ssim_fn, f) for f in test])
        elif name == "flicker":
            out[name] = M.flicker_index(test)
        elif name == "f2f-psnr":
            out[name] = M.f2f_psnr(test, nits, luma)
        elif name == "peak":
            out[name] = M.peak_luminance(test, nits)
        elif name == "dr":
            out[name] = M.dynamic_range_stops(test)
    write_json(args.out, {
        "schema": REPORT_SCHEMA,
        "report": "metrics",
        "metrics": out,
        "metadata": {
            "nits_per_unit": nits,
            "pu21_variant": M.PU21_BANDING_GLARE.name,
            "pu_channels": "luma" if luma else "rgb",
            "frame_count": len(test),
            "f2f_domain": "pu21",
            "flicker_luminance": "linear",
            "ssim_transfer": args.ssim_fn.value,
            "dr_percentiles": [M.DR_LOW_PERCENTILE, M.DR_HIGH_PERCENTILE],
        },
    })
    return 0


# ---------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    w, h = args.size
    data = synth.generate(args.preset, args.seed, args.frames, h, w)
    if args.preset == "prior":
        write_sdr_clip(args.out_dir, data)
    else:
        write_radiance_clip(args.out_dir, data, precision=args.precision)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="hdrlab", description=__doc__.strip().splitlines()[0], formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def nits(p):
        p.add_argument("--nits-per-unit", type=_positive, default=DEFAULT_NITS_PER_UNIT,
                       help="cd/m^2 of scene-linear 1.0 (diffuse white)")

    def out_exr(p):
        p.add_argument("--precision", choices=("half", "float"), default="half", help="EXR sample type")
        p.add_argument("--clamp-half", action="store_true", help="clamp values beyond the half range instead of failing")

    p = sub.add_parser("transfer", help="encode or decode a frame with a transfer function", formatter_class=fmt)
    p.add_argument("direction", choices=("encode", "decode"))
    p.add_argument("--fn", type=_fn_type, required=True, help=FN_HELP)
    p.add_argument("--input", required=True, help="input .exr or .pfm")
    p.add_argument("--output", required=True, help="output .exr or .pfm")
    p.add_argument("--force", action="store_true", help="decode files that carry no transfer tag")
    nits(p)
    out_exr(p)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("analyze", help="distribution alignment and roundtrip analysis", formatter_class=fmt)
    asub = p.add_subparsers(dest="analysis", required=True)

    def codec_opts(q, default):
        q.add_argument("--codec", default=default, help=f"latent codec: {', '.join(CODEC_NAMES)} (quantize-N also accepted)")
        q.add_argument("--levels", type=int, default=256, help="quantizer levels for --codec quantize")
        q.add_argument("--surrogate-params", help="surrogate whitening JSON; loaded if present, else written after fitting")
        q.add_argument("--latent-dir", help="drop directory for --codec external")

    q = asub.add_parser("kl", help="KL_px / KL_lat and roundtrip quality per transfer function", formatter_class=fmt)
    q.add_argument("--fn", type=_fn_list, default="all",
                   help="comma-separated transfer functions, or 'all' (logc3, pq, hlg, aces-linear)")
    q.add_argument("--hdr-dir", required=True, help="directory of numbered .exr/.pfm radiance frames")
    q.add_argument("--sdr-dir", required=True, help="directory of numbered 8-bit .png SDR prior frames")
    codec_opts(q, "surrogate")
    q.add_argument("--roundtrip-codec", default="quantize-256", help="codec used for the roundtrip quality columns")
    q.add_argument("--bins", type=_bins, default=256, help="histogram bins")
    q.add_argument("--max-frames", type=int, default=DEFAULT_CORPUS_CAP, help="corpus cap per directory")
    q.add_argument("--hist-dir", help="also write per-transfer histogram CSVs here")
    q.add_argument("--out", required=True, help="JSON report path")
    nits(q)
    q.set_defaults(func=cmd_analyze_kl)

    q = asub.add_parser("curve", help="tabulate a transfer curve as CSV", formatter_class=fmt)
    q.add_argument("--fn", type=_fn_type, required=True, help=FN_HELP)
    q.add_argument("--n", type=int, default=256, help="sample count")
    q.add_argument("--x-min", type=float, default=1e-3)
    q.add_argument("--x-max", type=float, default=16.0)
    q.add_argument("--linear", action="store_true", help="linear instead of log spacing")
    q.add_argument("--out", required=True, help="CSV path")
    nits(q)
    q.set_defaults(func=cmd_analyze_curve)

    q = asub.add_parser("roundtrip-curve", help="per-luminance codec roundtrip error as CSV", formatter_class=fmt)
    q.add_argument("--fn", type=_fn_type, required=True, help=FN_HELP)
    codec_opts(q, "quantize")
    q.add_argument("--sdr-dir", help="SDR prior used to fit the surrogate codec")
    q.add_argument("--n", type=int, default=64, help="number of log-spaced luminance samples")
    q.add_argument("--x-min", type=float, default=1e-3)
    q.add_argument("--x-max", type=float, default=16.0)
    q.add_argument("--out", required=True, help="CSV path")
    nits(q)
    q.set_defaults(func=cmd_analyze_roundtrip_curve)

    p = sub.add_parser("degrade", help="build degraded SDR / LogC3 target training pairs", formatter_class=fmt)
    p.add_argument("--config", help="key = value config file (see README)")
    p.add_argument("--clips-dir", required=True, help="directory of clip subdirectories with numbered .exr frames")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--threads", type=int, help="worker threads (default: HDRLAB_THREADS, 0 = auto)")
    p.add_argument("--target-precision", choices=("half", "float"), default="float")
    nits(p)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("metrics", help="HDR quality and temporal metrics report", formatter_class=fmt)
    p.add_argument("--ref", help="reference frame or frame directory")
    p.add_argument("--test", required=True, help="test frame or frame directory")
    p.add_argument("--metrics", type=_metric_list, default=",".join(METRIC_NAMES), help=f"comma list of {', '.join(METRIC_NAMES)}")
    p.add_argument("--luma-only", action="store_true", help="PU-encode luminance instead of each RGB channel")
    p.add_argument("--ssim-fn", type=_fn_type, default=TransferFn.LOGC3, help="encoding used for the plain ssim metric")
    p.add_argument("--out", required=True, help="JSON report path")
    nits(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="write a deterministic synthetic corpus", formatter_class=fmt)
    p.add_argument("--preset", choices=synth.PRESETS, required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--frames", type=int, default=DEFAULT_CORPUS_CAP)
    p.add_argument("--size", type=_size, default=(64, 64), help="N or WxH")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--precision", choices=("half", "float"), default="float", help="EXR sample type")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"hdrlab: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FormatError, FrameError, TransferMismatchError, CodecError,
            FileNotFoundError, ValueError, OSError) as exc:
        print(f"hdrlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
