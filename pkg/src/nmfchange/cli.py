"""Command-line entry point: ``nmfchange {detect,rank,estimate-net,simulate,evaluate}``.

Exit codes: 0 success, 2 configuration error, 3 ingestion error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .config import PRESETS, DetectorConfig
from .dataio import created_timestamp, dumps, emit, ingest, read_result, shift_nonneg, write_matrix
from .exceptions import ConfigurationError, IngestionError, NumericalFailure

EXIT_CONFIG, EXIT_INGEST, EXIT_NUMERIC = 2, 3, 4

log = logging.getLogger("nmfchange")


def _points(text: str | None) -> list[int]:
    if not text:
        return []
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS), default="paper")
    p.add_argument("--delta", type=int)
    p.add_argument("--nrun", type=int)
    p.add_argument("--nreps", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rank", type=int)
    p.add_argument("--loss", choices=["euclidean", "kl"])
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (-1: all CPUs); results do not depend on it")


def _config(args) -> DetectorConfig:
    overrides = {k: v for k, v in {
        "delta": args.delta, "n_run": args.nrun, "n_reps": args.nreps, "alpha": args.alpha,
        "rank": args.rank, "kind": args.loss, "seed": args.seed,
    }.items() if v is not None}
    return PRESETS[args.preset](**overrides)


def _write(doc: dict, out: str | None, matrices: dict | None = None) -> None:
    if out:
        emit(doc, out, matrices)
    else:
        sys.stdout.write(dumps(doc))


def cmd_detect(args) -> None:
    from .pipeline import detect, network_matrices, result_document, segment_networks

    data = ingest(args.input)
    config = _config(args)
    result = detect(data.values, config, n_jobs=args.jobs)
    if args.clusters is not None or args.lam is not None:
        result.networks = segment_networks(data.values, result.change_points, result.rank,
                                           args.clusters, args.lam, config, n_jobs=args.jobs)
    doc = result_document(result, created_timestamp(), source=Path(args.input).name)
    _write(doc, args.out, network_matrices(result.networks) if args.out else None)


def cmd_rank(args) -> None:
    from .pipeline import resolve_rank

    data = ingest(args.input)
    config = _config(args).with_(rank=None)
    Y, shift = shift_nonneg(data.values)
    r, search = resolve_rank(Y, config, n_jobs=args.jobs)
    doc = {"schema_version": 1, "tool_version": __version__, "created": created_timestamp(),
           "source": Path(args.input).name, "shift": shift, "config": config.to_dict(),
           "r_opt": r, "exhausted": search.exhausted, "ranks_tested": search.ranks_tested,
           "losses_original": [search.losses_original[k] for k in search.ranks_tested],
           "losses_permuted": [search.losses_permuted[k] for k in search.ranks_tested]}
    _write(doc, args.out)


def cmd_estimate_net(args) -> None:
    from .pipeline import network_matrices, resolve_rank, segment_networks

    if args.clusters is None and args.lam is None:
        raise ConfigurationError("give --clusters and/or --lambda")
    data = ingest(args.input)
    config = _config(args)
    points = _points(args.change_points)
    if args.result:
        points = read_result(args.result)["change_points"]
    r = config.rank
    if r is None:
        r, _ = resolve_rank(shift_nonneg(data.values)[0], config, n_jobs=args.jobs)
    nets = segment_networks(data.values, points, r, args.clusters, args.lam, config,
                            n_jobs=args.jobs)
    doc = {"schema_version": 1, "tool_version": __version__, "created": created_timestamp(),
           "source": Path(args.input).name, "rank": r, "change_points": points,
           "config": config.to_dict(),
           "networks": [{"start": n.start, "end": n.end, "skipped": n.skipped,
                         "labels": None if n.labels is None else [int(v) for v in n.labels],
                         "density": n.density} for n in nets]}
    _write(doc, args.out, network_matrices(nets) if args.out else None)


def cmd_simulate(args) -> None:
    from .simlab import simulate

    Y, truth, scenario = simulate(args.sim, seed=args.seed, T=args.T, p=args.p)
    out = Path(args.out)
    write_matrix(out, Y)
    meta = {"schema_version": 1, "sim": args.sim, "seed": args.seed, "T": scenario.T,
            "p": scenario.p, "change_points": truth,
            "segments": [{"labels": list(s.labels), "structure": s.structure}
                         for s in scenario.segments],
            "notes": scenario.notes}
    out.with_name(out.stem + ".truth.json").write_text(dumps(meta))


def cmd_evaluate(args) -> None:
    from .metrics import evaluate

    truth = _points(args.truth_points)
    T = args.T
    if args.truth:
        meta = json.loads(Path(args.truth).read_text())
        truth, T = meta["change_points"], T or meta["T"]
    detected = _points(args.points)
    if args.detected:
        doc = read_result(args.detected)
        detected, T = doc["change_points"], T or doc["shape"][0]
    if T is None:
        raise ConfigurationError("series length unknown; pass --T")
    rep = evaluate(truth, detected, T)
    out = asdict(rep)
    out["hausdorff"] = rep.hausdorff if rep.hausdorff_defined else None
    _write(dict(schema_version=1, truth=truth, detected=detected, T=T, **out), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nmfchange", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect change points in a delimited T x p file")
    p.add_argument("input")
    _add_detector_flags(p)
    p.add_argument("--clusters", type=int, help="also estimate segment networks cut at K clusters")
    p.add_argument("--lambda", dest="lam", type=float, help="also threshold consensus at lambda")
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("rank", help="select the factorization rank")
    p.add_argument("input")
    _add_detector_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("estimate-net", help="consensus networks between given change points")
    p.add_argument("input")
    _add_detector_flags(p)
    p.add_argument("--change-points", help="comma-separated change points")
    p.add_argument("--result", help="take change points from a detect result document")
    p.add_argument("--clusters", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate_net)

    p = sub.add_parser("simulate", help="write a simulated series and its truth file")
    p.add_argument("--sim", type=int, required=True, choices=range(1, 6))
    p.add_argument("--T", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="score detected change points against the truth")
    p.add_argument("--truth", help="truth file written by `simulate`")
    p.add_argument("--truth-points")
    p.add_argument("--detected", help="result document written by `detect`")
    p.add_argument("--points")
    p.add_argument("--T", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except IngestionError as exc:
        log.error("ingestion error: %s", exc)
        return EXIT_INGEST
    except NumericalFailure as exc:
        log.error("numerical failure at iteration %d: %s", exc.iteration, exc)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
