"""``genforge`` command line.

    genforge <subcommand> [--config PATH] [--seed N] [--out DIR] [--set key=value ...]

Exit codes: 0 success, 1 usage error, 2 stage failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import campaign, surrogate
from .data import save_dataset
from .standin import make_standin_dataset

EXIT_OK, EXIT_USAGE, EXIT_STAGE = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", dest="out_dir", help="output directory (overrides the config)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="genforge", description="Generative inverse design with a conditional VAE.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in [
        ("ingest", "load the dataset, fit the standardizer and bounds, pick the target condition"),
        ("train-surrogate", "train the MLP performance oracle"),
        ("sbo", "run the linear-surrogate SBO baseline"),
        ("train-cvae", "train the conditional VAE"),
        ("generate", "sample a design portfolio at the target condition"),
        ("run", "run the whole campaign"),
    ]:
        sub.add_parser(name, parents=[common], help=text)

    p = sub.add_parser("evaluate", parents=[common], help="validity and oracle scores for a design table")
    p.add_argument("--designs", help="design table (default: the generated portfolio)")
    p.add_argument("--output", help="where to write the evaluation table")

    p = sub.add_parser("report", parents=[common], help="assemble the campaign report")
    p.add_argument("--verify", action="store_true", help="recompute summaries from the design table")

    p = sub.add_parser("score", parents=[common], help="append oracle predictions to a design table")
    p.add_argument("--designs", required=True)
    p.add_argument("--oracle", help="oracle checkpoint (default: OUT/oracle.json)")
    p.add_argument("--output", help="output path (default: stdout)")

    p = sub.add_parser("standin", parents=[common], help="write the synthetic stand-in dataset")
    p.add_argument("--output", required=True)
    return parser


def _config(args) -> campaign.CampaignConfig:
    overrides = campaign.parse_overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    return campaign.load_config(args.config, **overrides)


def _score(cfg, args) -> None:
    oracle = surrogate.load_surrogate(args.oracle or cfg.out / campaign.ORACLE_FILE)
    designs = campaign.load_design_table(args.designs)
    pred = surrogate.predict(oracle, designs)
    lines = ["\t".join(list(campaign.FEATURE_NAMES) + ["predicted_db"])]
    lines += ["\t".join([repr(float(v)) for v in x] + [repr(float(p))]) for x, p in zip(designs, pred)]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (KeyError, ValueError, OSError) as exc:
        print(f"genforge: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            report = campaign.run_campaign(cfg)
            sys.stdout.write(campaign.summarize(report))
        elif args.command == "report":
            report = campaign.run_stage("report", cfg)
            sys.stdout.write(campaign.summarize(report))
            if args.verify:
                problems = campaign.verify_report(report)
                for p in problems:
                    print(f"verify: {p}", file=sys.stderr)
                if problems:
                    return EXIT_STAGE
                print("verify: report is consistent with its design table")
        elif args.command == "evaluate":
            rows = campaign.run_stage("evaluate", cfg, designs_path=args.designs, output_path=args.output)
            n_valid = sum(r["valid"] for r in rows)
            print(f"{n_valid}/{len(rows)} designs valid")
        elif args.command == "score":
            try:
                _score(cfg, args)
            except (OSError, ValueError) as exc:
                raise campaign.StageError("score", str(exc)) from exc
        elif args.command == "standin":
            save_dataset(make_standin_dataset(), args.output)
        elif args.command == "sbo":
            result = campaign.run_stage("sbo", cfg)
            print(json.dumps(result.to_dict(), indent=1))
        else:
            campaign.run_stage(args.command, cfg)
    except campaign.StageError as exc:
        print(f"genforge: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
