"""Command-line front end: ``nlridge add-noise | denoise | bench``."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NLRidgeError
from .images import Image, psnr, read_image, write_image
from .noise import GaussianHetero, GaussianHomo, MixedPG, Poisson, corrupt, describe
from .pipeline import default_params, denoise, params_for

CSV_HEADER = ["image", "model", "constraint", "psnr_noisy", "psnr_step1", "psnr_step2", "seconds"]
IMAGE_SUFFIXES = (".pgm", ".png")


@dataclass
class BenchRecord:
    image: str
    model: str
    constraint: str
    psnr_noisy: float
    psnr_step1: float
    psnr_step2: float
    seconds: float

    def to_row(self) -> list[str]:
        return [self.image, self.model, self.constraint] + [repr(float(getattr(self, f))) for f in CSV_HEADER[3:]]

    @classmethod
    def from_row(cls, row) -> "BenchRecord":
        row = dict(zip(CSV_HEADER, row)) if not isinstance(row, dict) else row
        return cls(row["image"], row["model"], row["constraint"], *(float(row[f]) for f in CSV_HEADER[3:]))


def write_csv(records, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.to_row())


def read_csv(stream) -> list[BenchRecord]:
    return [BenchRecord.from_row(row) for row in csv.DictReader(stream)]


def format_table(records) -> str:
    """Aligned text version of the records."""
    rows = [CSV_HEADER] + [
        [r.image, r.model, r.constraint] + [f"{getattr(r, f):.2f}" for f in CSV_HEADER[3:]] for r in records
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(CSV_HEADER))]
    lines = []
    for n, row in enumerate(rows):
        cells = [c.ljust(wd) if i < 3 else c.rjust(wd) for i, (c, wd) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("  ".join("-" * wd for wd in widths))
    return "\n".join(lines)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _mixed(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("--mixed-pg takes A,B")
    return vals[0], vals[1]


def _load_noisemap(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path)
    return read_image(path).pixels


def _add_model_flags(p, sigma_list=False):
    if sigma_list:
        p.add_argument("--sigma", type=_floats, required=True, help="comma-separated noise levels, e.g. 15,25,50")
        return
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sigma", type=float, help="homoscedastic Gaussian standard deviation")
    g.add_argument("--noisemap", help="image or .npy of per-pixel noise variances")
    g.add_argument("--poisson", action="store_true", help="Poisson noise")
    g.add_argument("--mixed-pg", type=_mixed, metavar="A,B", help="Poisson-Gaussian with gain A, variance B")


def _add_denoise_flags(p):
    p.add_argument("--constraint", default="linear", choices=["linear", "affine", "conical", "convex"])
    p.add_argument("--family", default="nlridge", choices=["nlridge", "nlbayes", "bm3d"])
    p.add_argument("--alpha", type=float, default=0.0, help="noisier-risk alpha (0: plain risk estimate)")
    p.add_argument("--scd-iters", type=int, default=100)
    p.add_argument("--bm3d-threshold", type=float, help="hard threshold of the bm3d family (default sqrt(2) sigma)")
    for name in ("patch1", "patch2"):
        p.add_argument(f"--{name}", type=int, help="patch side length")
    for name in ("k1", "k2"):
        p.add_argument(f"--{name}", type=int, help="group size")
    p.add_argument("--window", type=int, help="search window side (odd)")
    p.add_argument("--stride", type=int, help="reference patch stride")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def _overrides(args) -> dict:
    out = dict(
        constraint=args.constraint,
        family=args.family,
        noisier_alpha=args.alpha,
        scd_iters=args.scd_iters,
        seed=args.seed,
        bm3d_threshold=args.bm3d_threshold,
    )
    if args.patch1:
        out["n1"] = args.patch1**2
    if args.patch2:
        out["n2"] = args.patch2**2
    for src, dst in (("k1", "k1"), ("k2", "k2"), ("window", "kappa"), ("stride", "delta")):
        if getattr(args, src):
            out[dst] = getattr(args, src)
    return out


def _model(args):
    if args.sigma is not None:
        return GaussianHomo(args.sigma)
    if args.noisemap:
        return GaussianHetero(_load_noisemap(args.noisemap))
    if args.poisson:
        return Poisson()
    return MixedPG(*args.mixed_pg)


def cmd_add_noise(args) -> int:
    clean = read_image(args.input)
    noisy = corrupt(clean.pixels, _model(args), args.seed)
    write_image(Image(noisy, clean.bit_depth), args.output)
    return 0


def _params(model, y, args):
    if isinstance(model, GaussianHomo):
        return default_params(model, **_overrides(args))
    return params_for(model, y, **_overrides(args))


def cmd_denoise(args) -> int:
    noisy = read_image(args.input)
    model = _model(args)
    params = _params(model, noisy.pixels, args)
    step1, step2 = denoise(noisy.pixels, model, params, threads=args.threads)
    if args.keep_step1:
        write_image(Image(step1, noisy.bit_depth), args.keep_step1)
    write_image(Image(step2, noisy.bit_depth), args.output)
    if args.clean:
        clean = read_image(args.clean)
        peak = clean.peak
        print(
            f"psnr noisy {psnr(noisy.pixels, clean.pixels, peak):.2f} dB, "
            f"step1 {psnr(step1, clean.pixels, peak):.2f} dB, step2 {psnr(step2, clean.pixels, peak):.2f} dB"
        )
    return 0


def run_bench(paths, sigmas, args) -> list[BenchRecord]:
    """One record per (image, sigma), then one mean record per sigma."""
    records = []
    for sigma in sigmas:
        model = GaussianHomo(sigma)
        params = default_params(model, **_overrides(args))
        batch = []
        for path in paths:
            clean = read_image(path)
            y = corrupt(clean.pixels, model, args.seed)
            t0 = time.perf_counter()
            step1, step2 = denoise(y, model, params, threads=args.threads)
            dt = time.perf_counter() - t0
            peak = clean.peak
            batch.append(
                BenchRecord(
                    os.path.basename(path),
                    describe(model),
                    params.constraint.value,
                    psnr(y, clean.pixels, peak),
                    psnr(step1, clean.pixels, peak),
                    psnr(step2, clean.pixels, peak),
                    dt,
                )
            )
        records += batch
        means = [float(np.mean([getattr(r, f) for r in batch])) for f in CSV_HEADER[3:]]
        records.append(BenchRecord("mean", describe(model), params.constraint.value, *means))
    return records


def cmd_bench(args) -> int:
    if not os.path.isdir(args.clean):
        raise ConfigurationError(f"{args.clean} is not a directory")
    paths = sorted(
        os.path.join(args.clean, f) for f in os.listdir(args.clean) if f.lower().endswith(IMAGE_SUFFIXES)
    )
    if not paths:
        raise ConfigurationError(f"no .pgm or .png images in {args.clean}")
    records = run_bench(paths, args.sigma, args)
    buf = io.StringIO()
    write_csv(records, buf)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue() + "\n")
    print(format_table(records))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlridge", description="Two-step non-local ridge image denoising.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("add-noise", help="corrupt a clean image")
    _add_model_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_add_noise)

    p = sub.add_parser("denoise", help="denoise an image")
    _add_model_flags(p)
    _add_denoise_flags(p)
    p.add_argument("--keep-step1", metavar="PATH", help="also write the step-1 pilot")
    p.add_argument("--clean", metavar="PATH", help="clean reference: print PSNRs")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("bench", help="PSNR table over a directory of clean images")
    p.add_argument("--clean", required=True, metavar="DIR")
    _add_model_flags(p, sigma_list=True)
    _add_denoise_flags(p)
    p.add_argument("--csv", metavar="PATH", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NLRidgeError, ValueError, OSError) as exc:
        print(f"nlridge: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
