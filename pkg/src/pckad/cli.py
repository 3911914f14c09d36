"""Command-line front end: generate, train, detect, evaluate, sweep.

Exit codes: 0 success, 1 runtime error, 2 usage error, and 3 from `detect`
when at least one alert was emitted.
"""

from __future__ import annotations

import argparse
import ipaddress
import sys
from pathlib import Path

from .chunking import ChunkingConfig
from .corpus import IngestSummary, TrafficFilter, read_jsonl, read_pcap, write_jsonl
from .detector import DetectionSummary, DetectorConfig, detect_stream, verdict_line
from .errors import PckadError
from .evaluate import GridSpec, LabelSet, evaluate, sweep, write_sweep_csv
from .model import load_model, save_model, train
from .protocols import Protocol
from .synth import AnomalyKind, GenSpec, gen_legit, inject_corpus


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pckad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a seeded synthetic corpus")
    gen.add_argument("--protocol", choices=["http", "ftp"], required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--inject", action="append", default=[], metavar="KIND:FRACTION",
                     help="replace a fraction of records with injected attacks "
                          "(kind: unseen|freq|location; repeatable)")
    gen.add_argument("--n", type=int, default=3, help="n-gram length assumed by injections")
    gen.add_argument("--chunk-len", type=int, default=15,
                     help="chunk length assumed by location injections")

    tr = sub.add_parser("train", help="train a model on an attack-free corpus")
    tr.add_argument("--in", dest="infile", required=True)
    tr.add_argument("--protocol", choices=["http", "ftp"], required=True)
    tr.add_argument("--port", type=int, default=None, help="override the protocol default port")
    tr.add_argument("--n", type=int, default=3)
    tr.add_argument("--chunk-len", type=int, default=15)
    tr.add_argument("--alpha", type=float, default=0.1)
    tr.add_argument("--th-s", type=float, default=5.0)
    tr.add_argument("--ignore-labels", action="store_true",
                    help="train even if the corpus carries attack labels")
    tr.add_argument("--pcap-filter", default=None, metavar="SPEC",
                    help="pcap ingest filter, e.g. 'ports=21,80;prefix=172.16.0.0/16'")
    tr.add_argument("--out", required=True)

    det = sub.add_parser("detect", help="classify a corpus against a model")
    det.add_argument("--model", required=True)
    det.add_argument("--in", dest="infile", required=True)
    det.add_argument("--score-threshold", type=float, default=None)
    det.add_argument("--th-s", type=float, default=None)
    det.add_argument("--no-chunks", action="store_true")
    det.add_argument("--alerts", default=None, help="write verdict lines here instead of stdout")
    det.add_argument("--pcap-filter", default=None, metavar="SPEC")

    ev = sub.add_parser("eval", help="compute DR/FPR against labels")
    ev.add_argument("--model", required=True)
    ev.add_argument("--in", dest="infile", required=True)
    ev.add_argument("--labels", default=None, help="sidecar CSV (id,label); JSONL may carry labels inline")
    ev.add_argument("--score-threshold", type=float, default=None)
    ev.add_argument("--th-s", type=float, default=None)
    ev.add_argument("--no-chunks", action="store_true")
    ev.add_argument("--pcap-filter", default=None, metavar="SPEC")

    sw = sub.add_parser("sweep", help="train/evaluate over a parameter grid, emit CSV")
    sw.add_argument("--train-in", required=True)
    sw.add_argument("--test-in", required=True)
    sw.add_argument("--labels", default=None)
    sw.add_argument("--protocol", choices=["http", "ftp"], required=True)
    sw.add_argument("--port", type=int, default=None)
    sw.add_argument("--alpha", type=float, default=0.1)
    sw.add_argument("--th-s", type=float, default=5.0)
    sw.add_argument("--grid", required=True,
                    help="e.g. 'n=2,3;chunk=7,15;score=30,40' (optional ';chunks=on,off')")
    sw.add_argument("--out", required=True)
    sw.add_argument("--pcap-filter", default=None, metavar="SPEC")
    return parser


def _parse_pcap_filter(spec: str | None, default_ports: set[int],
                       parser: argparse.ArgumentParser) -> TrafficFilter:
    ports = frozenset(default_ports)
    prefix = None
    if spec:
        for part in spec.split(";"):
            part = part.strip()
            if not part:
                continue
            key, _, value = part.partition("=")
            if key == "ports":
                try:
                    ports = frozenset(int(p) for p in value.split(","))
                except ValueError:
                    parser.error(f"--pcap-filter: bad ports {value!r}")
            elif key == "prefix":
                try:
                    prefix = ipaddress.IPv4Network(value, strict=False)
                except ValueError:
                    parser.error(f"--pcap-filter: bad prefix {value!r}")
            else:
                parser.error(f"--pcap-filter: unknown key {key!r}")
    if not ports:
        parser.error("--pcap-filter: ports must be non-empty")
    return TrafficFilter(ports=ports, dst_prefix=prefix)


def _load_corpus(path_str: str, pcap_filter: str | None, default_ports: set[int],
                 parser: argparse.ArgumentParser, summary: IngestSummary | None = None):
    path = Path(path_str)
    if path.suffix == ".jsonl":
        return read_jsonl(path)
    if path.suffix == ".pcap":
        flt = _parse_pcap_filter(pcap_filter, default_ports, parser)
        return read_pcap(path, flt, summary)
    parser.error(f"--in: unsupported corpus extension {path.suffix!r} (want .pcap or .jsonl)")


def _parse_inject_specs(specs: list[str], count: int, parser: argparse.ArgumentParser):
    parsed = []
    kinds = {k.value: k for k in AnomalyKind}
    for spec in specs:
        kind_name, sep, frac_str = spec.partition(":")
        if not sep or kind_name not in kinds:
            parser.error(f"--inject: expected 'unseen|freq|location:<fraction>', got {spec!r}")
        try:
            fraction = float(frac_str)
        except ValueError:
            parser.error(f"--inject: bad fraction in {spec!r}")
        if not 0 < fraction <= 1:
            parser.error(f"--inject: fraction must be in (0, 1], got {fraction}")
        parsed.append((kinds[kind_name], round(fraction * count)))
    return parsed


def _parse_grid(spec: str, parser: argparse.ArgumentParser) -> GridSpec:
    axes = {"n": None, "chunk": None, "score": None, "chunks": (True, False)}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, value = part.partition("=")
        if not sep or key not in axes:
            parser.error(f"--grid: unknown axis {part!r}")
        try:
            if key == "n":
                axes["n"] = tuple(int(v) for v in value.split(","))
            elif key == "chunk":
                axes["chunk"] = tuple(int(v) for v in value.split(","))
            elif key == "score":
                axes["score"] = tuple(float(v) for v in value.split(","))
            else:
                modes = []
                for v in value.split(","):
                    if v not in ("on", "off"):
                        raise ValueError(v)
                    modes.append(v == "on")
                axes["chunks"] = tuple(modes)
        except ValueError:
            parser.error(f"--grid: bad values in {part!r}")
    for key in ("n", "chunk", "score"):
        if axes[key] is None:
            parser.error(f"--grid: missing axis '{key}='")
    return GridSpec(
        ns=axes["n"], chunk_lens=axes["chunk"],
        score_thresholds=axes["score"], chunk_modes=axes["chunks"],
    )


def _cmd_gen(args, parser) -> int:
    if args.count < 0:
        parser.error("--count must be >= 0")
    injections = _parse_inject_specs(args.inject, args.count, parser)
    cfg = _chunking_or_usage_error(args.n, args.chunk_len, parser)
    protocol = Protocol(args.protocol)
    records = gen_legit(GenSpec(protocol=protocol, count=args.count, seed=args.seed))
    for offset, (kind, count) in enumerate(injections):
        records = inject_corpus(records, kind, count, seed=args.seed + 1 + offset, cfg=cfg)
    written = write_jsonl(records, args.out)
    print(f"wrote {written} records to {args.out}")
    return 0


def _chunking_or_usage_error(n: int, chunk_len: int, parser) -> ChunkingConfig:
    try:
        return ChunkingConfig(n=n, chunk_len=chunk_len)
    except ValueError as exc:
        parser.error(str(exc))


def _cmd_train(args, parser) -> int:
    cfg = _chunking_or_usage_error(args.n, args.chunk_len, parser)
    if args.alpha <= 0:
        parser.error("--alpha must be > 0")
    if args.th_s <= 0:
        parser.error("--th-s must be > 0")
    if args.port is not None and not 0 <= args.port <= 65535:
        parser.error("--port out of range")
    protocol = Protocol(args.protocol)
    port = args.port if args.port is not None else protocol.default_port
    records = _load_corpus(args.infile, args.pcap_filter, {port}, parser)
    model = train(
        records,
        protocol=protocol,
        chunking=cfg,
        port=port,
        alpha=args.alpha,
        th_s=args.th_s,
        ignore_labels=args.ignore_labels,
    )
    size = save_model(model, args.out)
    s = model.summary
    print(
        f"trained on {s.trained}/{s.read} packets "
        f"({s.skipped_other_port} other-port, {s.skipped_empty} empty, "
        f"{s.skipped_malformed} malformed, {s.skipped_short} too short); "
        f"{len(model.classes)} classes; wrote {size} bytes to {args.out}"
    )
    return 0


def _validate_detector_flags(args, parser) -> None:
    if args.score_threshold is not None and not 0 <= args.score_threshold <= 100:
        parser.error("--score-threshold must be within [0, 100]")
    if args.th_s is not None and args.th_s <= 0:
        parser.error("--th-s must be > 0")


def _cmd_detect(args, parser) -> int:
    _validate_detector_flags(args, parser)
    model = load_model(args.model)
    cfg = DetectorConfig.for_model(
        model,
        score_threshold=args.score_threshold,
        th_s=args.th_s,
        chunks_enabled=not args.no_chunks,
    )
    records = _load_corpus(args.infile, args.pcap_filter, {model.port}, parser)
    summary = DetectionSummary()
    out = open(args.alerts, "w", encoding="utf-8") if args.alerts else sys.stdout
    try:
        for rec_id, verdict in detect_stream(model, records, cfg, summary):
            out.write(verdict_line(rec_id, verdict) + "\n")
    finally:
        if args.alerts:
            out.close()
    print(
        f"scored {summary.scored} packets: {summary.legit} legit, "
        f"{summary.anomalous} anomalous, {summary.malformed} malformed, "
        f"{summary.no_model} no-model, {summary.unclassifiable} unclassifiable "
        f"({summary.skipped_other_port} other-port skipped)",
        file=sys.stderr,
    )
    return 3 if summary.alerts > 0 else 0


def _resolve_labels(args, records) -> tuple[list, LabelSet]:
    records = list(records)
    if args.labels:
        return records, LabelSet.from_csv(args.labels)
    return records, LabelSet.from_records(records)


def _cmd_eval(args, parser) -> int:
    _validate_detector_flags(args, parser)
    model = load_model(args.model)
    cfg = DetectorConfig.for_model(
        model,
        score_threshold=args.score_threshold,
        th_s=args.th_s,
        chunks_enabled=not args.no_chunks,
    )
    records = _load_corpus(args.infile, args.pcap_filter, {model.port}, parser)
    records, labels = _resolve_labels(args, records)
    report = evaluate(model, records, labels, cfg)
    dr = "undefined" if report.dr is None else f"{report.dr:.3f}%"
    fpr = "undefined" if report.fpr is None else f"{report.fpr:.3f}%"
    print(f"detection rate: {dr} ({report.instances_detected}/{report.instances_total} instances)")
    print(f"false-positive rate: {fpr} ({report.false_alerts}/{report.legit_packets} legit packets)")
    print(f"unclassifiable packets excluded: {report.unclassifiable}")
    print(
        f"config: n={model.chunking.n} chunk_len={model.chunking.chunk_len} "
        f"alpha={model.alpha} th_s={cfg.th_s} score_threshold={cfg.score_threshold} "
        f"chunks={'on' if cfg.chunks_enabled else 'off'}"
    )
    return 0


def _cmd_sweep(args, parser) -> int:
    if args.alpha <= 0:
        parser.error("--alpha must be > 0")
    if args.th_s <= 0:
        parser.error("--th-s must be > 0")
    if args.port is not None and not 0 <= args.port <= 65535:
        parser.error("--port out of range")
    grid = _parse_grid(args.grid, parser)
    protocol = Protocol(args.protocol)
    port = args.port if args.port is not None else protocol.default_port
    train_records = list(_load_corpus(args.train_in, args.pcap_filter, {port}, parser))
    test_records = list(_load_corpus(args.test_in, args.pcap_filter, {port}, parser))
    labels = LabelSet.from_csv(args.labels) if args.labels else LabelSet.from_records(test_records)
    rows = sweep(
        train_records, test_records, labels, grid,
        protocol=protocol, port=port, alpha=args.alpha, th_s=args.th_s,
    )
    write_sweep_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "detect": _cmd_detect,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
}


def run(argv: list[str]) -> int:
    """Parse argv and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except PckadError as exc:
        print(f"pckad: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"pckad: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
