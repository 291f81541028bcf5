"""Command-line front end.

Subcommands: gen-masks, render, inpaint (render with the in-painting
method), frangi, and eval. All generation is deterministic: the global
seed plus a per-sample stream id fully determine every output byte, so
reruns and different --threads settings produce identical files.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .core.io import load_image, load_mask, save_image, save_mask
from .core.types import Image, RngStream
from .errors import ConfigError, TubegenError
from .frangi import masked_mean_response, multiscale_vesselness
from .maskgen import generate_fake_mask
from .metrics import MetricsReport, evaluate_pair
from .optimize import InpaintConfig, inpaint
from .render import HandDrawnParams, render_hand_drawn, render_smoothed_mask

__all__ = ["main"]

_IMAGE_SUFFIXES = (".png", ".pgm")

RENDER_METHODS = ("smoothed", "hand-drawn", "inpaint")


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _atomic_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=path.suffix + ".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_manifest(out_dir: Path, records: list) -> None:
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _atomic_text(out_dir / "manifest.jsonl", text)


def _list_images(folder: Path) -> dict:
    if not folder.is_dir():
        raise TubegenError(f"{folder}: not a directory")
    return {
        p.stem: p
        for p in sorted(folder.iterdir())
        if p.suffix.lower() in _IMAGE_SUFFIXES
    }


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = RunConfig(
            seed=args.seed, image_size=cfg.image_size, threads=cfg.threads,
            frangi=cfg.frangi, priors=cfg.priors, smoothed=cfg.smoothed,
            hand_drawn=cfg.hand_drawn, inpaint=cfg.inpaint,
        )
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = RunConfig(
            seed=cfg.seed, image_size=cfg.image_size, threads=args.threads,
            frangi=cfg.frangi, priors=cfg.priors, smoothed=cfg.smoothed,
            hand_drawn=cfg.hand_drawn, inpaint=cfg.inpaint,
        )
    return cfg


def _iter_jobs(jobs, threads: int):
    """Yield job results in submission order, optionally on a pool."""
    if threads <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield job()
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(job) for job in jobs]
        for f in futures:
            yield f.result()


def cmd_gen_masks(args) -> int:
    cfg = _load_run_config(args)
    if not cfg.priors:
        raise ConfigError("gen-masks needs at least one entry under 'priors' in the config")
    if args.count < 0:
        raise ConfigError("--count must be >= 0")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    height, width = cfg.image_size

    def make(index: int):
        stream = RngStream(cfg.seed, index)
        mask, tubes = generate_fake_mask(cfg.priors, height, width, stream)
        name = f"mask_{index:05d}.png"
        save_mask(mask, out_dir / name)
        return {
            "image": None,
            "mask": name,
            "method": "mask",
            "seed": cfg.seed,
            "stream-id": index,
            "tubes": [t.to_dict() for t in tubes],
            "response": None,
        }

    records = []
    try:
        for rec in _iter_jobs([lambda i=i: make(i) for i in range(args.count)], cfg.threads):
            records.append(rec)
    except BaseException:
        _write_manifest(out_dir, records)
        _warn(f"aborted; partial manifest with {len(records)} record(s) written")
        raise
    _write_manifest(out_dir, records)
    print(f"generated {len(records)} mask(s) in {out_dir}")
    return 0


def _build_inpaint_config(cfg: RunConfig, stream: RngStream) -> InpaintConfig:
    if cfg.inpaint is None or cfg.inpaint.get("target") is None:
        raise ConfigError(
            "method 'inpaint' needs an 'inpaint' block with a 'target' "
            "response ({\"mu\": ..., \"sigma\": ...}) in the config"
        )
    kwargs = {k: v for k, v in cfg.inpaint.items() if k != "target" and v is not None}
    return InpaintConfig(frangi=cfg.frangi, target=cfg.inpaint["target"], rng=stream, **kwargs)


def cmd_render(args) -> int:
    cfg = _load_run_config(args)
    method = args.method
    if method not in RENDER_METHODS:
        raise ConfigError(f"--method must be one of {RENDER_METHODS}, got {method!r}")
    if method == "inpaint":
        _build_inpaint_config(cfg, RngStream(cfg.seed, 0))
    cxrs = _list_images(Path(args.cxr_dir))
    masks = _list_images(Path(args.mask_dir))
    for stem in sorted(set(cxrs) - set(masks)):
        _warn(f"no mask for image {cxrs[stem].name}; skipped")
    for stem in sorted(set(masks) - set(cxrs)):
        _warn(f"no image for mask {masks[stem].name}; skipped")
    stems = sorted(set(cxrs) & set(masks))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def render_one(index: int, stem: str):
        stream = RngStream(cfg.seed, index)
        cxr = load_image(cxrs[stem])
        mask = load_mask(masks[stem])
        if method == "smoothed":
            out = render_smoothed_mask(cxr, mask, cfg.smoothed)
        elif method == "hand-drawn":
            params = HandDrawnParams(rng=stream, **cfg.hand_drawn)
            out = render_hand_drawn(cxr, mask, params)
        else:
            out, _trace = inpaint(cxr, mask, _build_inpaint_config(cfg, stream))
        response = masked_mean_response(out, mask, cfg.frangi) if mask.data.any() else None
        name = f"{stem}.png"
        save_image(out, out_dir / name, bits=16)
        return {
            "image": name,
            "mask": masks[stem].name,
            "method": method,
            "seed": cfg.seed,
            "stream-id": index,
            "tubes": None,
            "response": response,
        }

    def render_guarded(index: int, stem: str):
        try:
            return render_one(index, stem)
        except TubegenError as exc:
            return (stem, exc)

    records = []
    failures = 0
    jobs = [lambda i=i, s=s: render_guarded(i, s) for i, s in enumerate(stems)]
    for result in _iter_jobs(jobs, cfg.threads):
        if isinstance(result, dict):
            records.append(result)
        else:
            failures += 1
            _warn(f"pair {result[0]!r} failed: {result[1]}")
    _write_manifest(out_dir, records)
    print(f"rendered {len(records)} image(s) in {out_dir} ({failures} failure(s))")
    return 0 if records else 1


def cmd_frangi(args) -> int:
    cfg = _load_run_config(args)
    img = load_image(args.image)
    vm = multiscale_vesselness(img, cfg.frangi)
    save_image(Image(vm.response), args.out, bits=16)
    if args.mask:
        mask = load_mask(args.mask)
        print(f"{masked_mean_response(img, mask, cfg.frangi):.10f}")
    return 0


def _aggregate(per_image: dict) -> dict:
    agg = {}
    for name in MetricsReport.field_names():
        vals = [rep[name] for rep in per_image.values() if rep[name] is not None]
        if vals:
            arr = np.asarray(vals, dtype=np.float64)
            agg[name] = {"mean": float(arr.mean()), "stdev": float(arr.std())}
        else:
            agg[name] = None
    return agg


def _format_eval_table(per_image: dict, agg: dict) -> str:
    names = MetricsReport.field_names()
    header = ["image"] + list(names)
    rows = []
    for stem in sorted(per_image):
        rep = per_image[stem]
        rows.append(
            [stem] + ["undefined" if rep[n] is None else f"{rep[n]:.4f}" for n in names]
        )
    mean_row = ["mean"] + [
        "undefined" if agg[n] is None else f"{agg[n]['mean']:.4f}" for n in names
    ]
    stdev_row = ["stdev"] + [
        "undefined" if agg[n] is None else f"{agg[n]['stdev']:.4f}" for n in names
    ]
    table = [header] + rows + [mean_row, stdev_row]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in table)


def cmd_eval(args) -> int:
    preds = _list_images(Path(args.pred_dir))
    gts = _list_images(Path(args.gt_dir))
    for stem in sorted(set(preds) ^ set(gts)):
        _warn(f"unpaired file for basename {stem!r}; skipped")
    stems = sorted(set(preds) & set(gts))
    per_image = {}
    failures = 0
    for stem in stems:
        try:
            pred = load_image(preds[stem])
            gt = load_mask(gts[stem])
            per_image[stem] = evaluate_pair(pred, gt, args.threshold).to_dict()
        except TubegenError as exc:
            failures += 1
            _warn(f"pair {stem!r} failed: {exc}")
    if not per_image:
        _warn("no evaluable pairs")
        return 1
    agg = _aggregate(per_image)
    print(_format_eval_table(per_image, agg))
    payload = json.dumps({"per-image": per_image, "aggregate": agg}, indent=2, sort_keys=True)
    if args.out:
        _atomic_text(Path(args.out), payload)
    else:
        print(payload)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tubegen",
        description="Synthetic tube image/mask generation, tubular-shape "
        "filtering, in-painting, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON run configuration file")
            p.add_argument("--seed", type=int, help="override the config seed")
            p.add_argument("--threads", type=int, help="worker thread hint")

    p = sub.add_parser("gen-masks", help="generate fake tube masks")
    add_common(p)
    p.add_argument("--count", type=int, required=True, help="number of masks")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_gen_masks)

    for name, method_fixed in (("render", None), ("inpaint", "inpaint")):
        p = sub.add_parser(
            name,
            help="render tubes into images"
            if method_fixed is None
            else "paint tubes by gradient descent (render --method inpaint)",
        )
        add_common(p)
        p.add_argument("--cxr-dir", required=True, help="directory of background images")
        p.add_argument("--mask-dir", required=True, help="directory of tube masks")
        if method_fixed is None:
            p.add_argument("--method", required=True, choices=RENDER_METHODS)
        p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(fn=cmd_render, **({"method": method_fixed} if method_fixed else {}))

    p = sub.add_parser("frangi", help="compute the multi-scale tubular response map")
    add_common(p)
    p.add_argument("--image", required=True, help="input image (PGM or PNG)")
    p.add_argument("--out", required=True, help="output 16-bit response map")
    p.add_argument("--mask", help="also print the masked mean response")
    p.set_defaults(fn=cmd_frangi)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred-dir", required=True, help="directory of predictions")
    p.add_argument("--gt-dir", required=True, help="directory of ground-truth masks")
    p.add_argument("--threshold", type=float, default=0.5, help="binarization threshold")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(fn=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TubegenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
