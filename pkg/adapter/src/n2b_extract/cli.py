"""n2b-extract command line: list models/layers, run extractions."""

import argparse
import sys

from .errors import ExtractError
from .extract import ExtractionJob, extract
from .models import list_layers, list_models


def build_parser():
    parser = argparse.ArgumentParser(
        prog="n2b-extract",
        description="Extract per-layer activations over an image directory "
        "and write net2rdm interchange files.",
    )
    parser.add_argument("--model", help="model name (see --list-models)")
    parser.add_argument(
        "--layers", help="comma-separated layer names (see --list-layers)"
    )
    parser.add_argument("--images", help="directory of stimulus images")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--batch", type=int, default=16, help="inference batch size")
    parser.add_argument(
        "--random-init",
        action="store_true",
        help="skip checkpoint loading; build seeded randomly-initialized weights",
    )
    parser.add_argument("--seed", type=int, default=0, help="random-init seed")
    parser.add_argument(
        "--list-models", action="store_true", help="print supported models and exit"
    )
    parser.add_argument(
        "--list-layers",
        metavar="MODEL",
        help="print hookable layer names of MODEL and exit",
    )
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.list_models:
            for name in list_models():
                print(name)
            return 0
        if args.list_layers:
            for name in list_layers(args.list_layers):
                print(name)
            return 0
        missing = [
            flag
            for flag, value in (
                ("--model", args.model),
                ("--layers", args.layers),
                ("--images", args.images),
                ("--out", args.out),
            )
            if not value
        ]
        if missing:
            parser.error(f"the following arguments are required: {', '.join(missing)}")
        job = ExtractionJob(
            model_name=args.model,
            layers=tuple(s.strip() for s in args.layers.split(",") if s.strip()),
            image_dir=args.images,
            out_dir=args.out,
            batch_size=args.batch,
            pretrained=not args.random_init,
            seed=args.seed,
        )
        manifest = extract(job)
        print(f"wrote {manifest}")
        return 0
    except ExtractError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
