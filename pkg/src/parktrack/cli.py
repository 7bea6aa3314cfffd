"""
Command-line front end.

Exit codes: 0 success, 1 empty or degenerate result, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import evaluation
from .config import Config, load_config
from .errors import ConflictError, InvalidParameterError, ParkTrackError
from .face_gallery import Gallery, Subject, SyntheticEmbeddingSource, read_roster
from .park_simulator import load_scenario, replay, simulate, write_stream
from .session_tracker import SessionTracker, load_session_record

EXIT_OK, EXIT_EMPTY, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad user input; reported on stderr with exit code 2."""


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _config(args) -> Config:
    try:
        cfg = load_config(getattr(args, "config", None))
        return cfg.with_overrides(
            perimeter_m=getattr(args, "perimeter", None),
            debounce_s=getattr(args, "debounce", None),
            match_threshold=getattr(args, "threshold", None),
            embedding_dim=getattr(args, "dim", None),
            session_timeout_s=getattr(args, "timeout", None),
            data_dir=getattr(args, "data_dir", None),
        )
    except (OSError, InvalidParameterError, TypeError) as exc:
        raise InputError(f"config: {exc}") from None


def stats_header() -> str:
    return f"{'Subject':<10}{'Laps':>6}{'Dist(m)':>10}{'Pace':>8}{'MET':>6}{'kcal/min':>10}{'Total':>10}"


def stats_line(subject_id: str, laps: int, stats) -> str:
    return (
        f"{subject_id:<10}{laps:>6d}{stats.distance_m:>10.1f}{stats.avg_pace_kmh:>8.2f}"
        f"{stats.met:>6g}{stats.kcal_per_min:>10.2f}{stats.total_kcal:>10.2f}"
    )


# -- commands -----------------------------------------------------------------


def cmd_enroll(args) -> int:
    cfg = _config(args)
    try:
        roster = read_roster(args.roster)
    except FileNotFoundError:
        raise InputError(f"roster not found: {args.roster}") from None
    except (ConflictError, InvalidParameterError) as exc:
        raise InputError(f"{args.roster}: {exc}") from None

    supplied = {}
    if args.embeddings:
        try:
            supplied = json.loads(Path(args.embeddings).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"embeddings: {exc}") from None
        if not isinstance(supplied, dict):
            raise InputError("embeddings: expected an object mapping subject_id to a vector")

    source = SyntheticEmbeddingSource(cfg.embedding_dim, seed=args.seed)
    gallery = Gallery(cfg.embedding_dim, cfg.match_threshold)
    for entry in roster:
        vec = supplied.get(entry.subject_id)
        if vec is None:
            vec = source.encode(entry.subject_id)
        try:
            gallery.enroll(Subject(entry.subject_id, entry.name, entry.weight_kg, vec))
        except (ParkTrackError, ValueError) as exc:
            raise InputError(f"{entry.subject_id}: {exc}") from None
    gallery.save(args.out)
    if not len(gallery):
        print("warning: roster has no subjects; wrote an empty gallery", file=sys.stderr)
        return EXIT_EMPTY
    print(f"enrolled {len(gallery)} subjects -> {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError:
        raise InputError(f"scenario not found: {args.scenario}") from None
    except InvalidParameterError as exc:
        raise InputError(str(exc)) from None
    if args.seed is not None:
        scenario = replace(scenario, detection=replace(scenario.detection, seed=args.seed))
    source = None
    if args.with_embeddings:
        # identity vectors must match those written by `enroll --seed`
        cfg = _config(args)
        source = SyntheticEmbeddingSource(
            cfg.embedding_dim, seed=args.seed or 0, noise_deg=args.noise_deg
        )
    events, truth = simulate(scenario, source)
    with open(args.stream, "w") as fh:
        n = write_stream(events, fh)
    Path(args.truth).write_text(truth.to_csv())
    print(f"{n} sightings -> {args.stream}; truth for {len(truth.walkers)} walkers -> {args.truth}")
    return EXIT_OK


def cmd_track(args) -> int:
    cfg = _config(args)
    try:
        gallery = Gallery.load(args.gallery, cfg.match_threshold)
    except FileNotFoundError:
        raise InputError(f"gallery not found: {args.gallery}") from None
    except (ParkTrackError, ValueError, KeyError) as exc:
        raise InputError(f"gallery: {exc}") from None
    weights = {s.subject_id: s.weight_kg for s in gallery}
    tracker = SessionTracker(
        weights,
        perimeter_m=cfg.perimeter_m,
        debounce_s=cfg.debounce_s,
        timeout_s=cfg.session_timeout_s,
        data_dir=cfg.data_dir,
    )
    try:
        with open(args.stream) as fh:
            result = replay(fh, gallery, tracker)
    except FileNotFoundError:
        raise InputError(f"stream not found: {args.stream}") from None

    skipped = result.parse_errors + result.out_of_order
    if skipped:
        print(f"skipped {result.parse_errors} unparseable and {result.out_of_order} out-of-order lines", file=sys.stderr)
    if result.unmatched:
        print(f"{result.unmatched} sightings matched no enrolled subject", file=sys.stderr)
    if not tracker.closed:
        print("no sessions recorded", file=sys.stderr)
        return EXIT_EMPTY
    print(stats_header())
    records = sorted(tracker.closed, key=lambda r: (evaluation.natural_key(r.session.subject_id), r.session.t0_s))
    for record in records:
        print(stats_line(record.session.subject_id, record.session.laps, record.stats))
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        roster = evaluation.load_roster(args.table3)
        records = evaluation.load_comparisons(args.table4)
    except FileNotFoundError as exc:
        raise InputError(f"file not found: {exc.filename}") from None
    except InvalidParameterError as exc:
        raise InputError(str(exc)) from None
    if not records:
        raise InputError("comparison table has no rows")
    try:
        rows = evaluation.reproduce_table3(roster)
    except InvalidParameterError as exc:
        raise InputError(str(exc)) from None
    report = evaluation.evaluate(records)
    print(evaluation.format_table3(rows))
    print()
    print(evaluation.format_report(report, records))
    if args.json_out:
        Path(args.json_out).write_text(evaluation.report_json(report))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        record = load_session_record(args.session)
    except FileNotFoundError:
        raise InputError(f"session not found: {args.session}") from None
    except (json.JSONDecodeError, InvalidParameterError, KeyError, TypeError) as exc:
        raise InputError(f"session: {exc}") from None
    if "stats" not in record:
        print("session has no final statistics", file=sys.stderr)
        return EXIT_EMPTY
    print(stats_header())
    print(stats_line(record["subject_id"], int(record["laps"]), record["stats"]))
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parktrack", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int, default=None, help="seed for all randomness")

    p = sub.add_parser("enroll", help="build a gallery from a roster CSV")
    common(p)
    p.add_argument("roster")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--embeddings", help="JSON object subject_id -> vector; others are synthetic")
    p.add_argument("--dim", type=int)
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_enroll, seed=0)

    p = sub.add_parser("simulate", help="generate a sighting stream and ground truth")
    common(p)
    p.add_argument("scenario")
    p.add_argument("--stream", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--with-embeddings", action="store_true", help="attach noisy synthetic face vectors")
    p.add_argument("--noise-deg", type=float, default=10.0)
    p.add_argument("--dim", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="replay a stream and report per-subject sessions")
    common(p)
    p.add_argument("stream")
    p.add_argument("--gallery", required=True)
    p.add_argument("--data-dir")
    p.add_argument("--perimeter", type=float)
    p.add_argument("--debounce", type=float)
    p.add_argument("--timeout", type=float)
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="reproduce the published tables and accuracy metrics")
    p.add_argument("--table3", help="roster CSV (default: shipped fixture)")
    p.add_argument("--table4", help="comparison CSV (default: shipped fixture)")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="re-print a persisted session")
    p.add_argument("session")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
