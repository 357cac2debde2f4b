"""CLI: python -m dkwfigs --spec <figure.json>"""
import argparse
import sys

from .render import FigureError, load_spec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dkwfigs",
                                     description="render experiment CSVs "
                                                 "into figures")
    parser.add_argument("--spec", required=True,
                        help="JSON figure specification")
    args = parser.parse_args(argv)
    try:
        result = render(load_spec(args.spec))
    except FigureError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    print(result["output"], result["data_sha256"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
