"""Detection-rate / false-positive-rate evaluation and parameter sweeps.

Detection rate is counted per attack instance (an instance is detected when
at least one of its packets alerts); the false-positive rate is counted per
classifiable legitimate packet. Unclassifiable packets are excluded from
both counts and reported separately.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass
from typing import Iterable, Sequence

from .chunking import ChunkingConfig
from .corpus import PacketRecord
from .detector import DetectorConfig, score_packet
from .errors import EvaluationError
from .model import TrafficModel, train
from .protocols import Protocol


@dataclass(frozen=True)
class LabelSet:
    """Record id -> 'legit' | 'attack:<instance>'."""

    by_id: dict[int, str]

    @classmethod
    def from_records(cls, records: Iterable[PacketRecord]) -> "LabelSet":
        by_id = {}
        for rec in records:
            if rec.label is not None:
                by_id[rec.id] = rec.label
        return cls(by_id)

    @classmethod
    def from_csv(cls, path) -> "LabelSet":
        """Sidecar label file: header `id,label`, ids are ingest ordinals."""
        by_id: dict[int, str] = {}
        try:
            f = open(path, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise EvaluationError(f"cannot open labels {path}: {exc}") from exc
        with f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != ["id", "label"]:
                raise EvaluationError(f"{path}: expected header 'id,label', got {header}")
            for row_no, row in enumerate(reader, start=1):
                if len(row) != 2:
                    raise EvaluationError(f"{path}: row {row_no}: expected 2 fields")
                try:
                    rec_id = int(row[0])
                except ValueError:
                    raise EvaluationError(f"{path}: row {row_no}: bad id {row[0]!r}") from None
                label = row[1]
                if label != "legit" and not (label.startswith("attack:") and len(label) > 7):
                    raise EvaluationError(f"{path}: row {row_no}: bad label {label!r}")
                if rec_id in by_id:
                    raise EvaluationError(f"{path}: row {row_no}: duplicate id {rec_id}")
                by_id[rec_id] = label
        return cls(by_id)


@dataclass(frozen=True)
class EvalReport:
    dr: float | None
    fpr: float | None
    instances_total: int
    instances_detected: int
    legit_packets: int
    false_alerts: int
    unclassifiable: int
    config: dict  # echo: n, chunk_len, th_s, score_threshold, chunks_enabled


def evaluate(
    model: TrafficModel,
    records: Iterable[PacketRecord],
    labels: LabelSet,
    cfg: DetectorConfig,
) -> EvalReport:
    """Score every on-port record and fold verdicts into DR/FPR."""
    detected: dict[str, bool] = {}
    legit_packets = 0
    false_alerts = 0
    unclassifiable = 0
    for rec in records:
        if rec.dst_port != model.port:
            continue
        label = labels.by_id.get(rec.id)
        if label is None:
            raise EvaluationError(f"record {rec.id} on port {model.port} has no label")
        verdict = score_packet(model, rec, cfg)
        if verdict.kind == "unclassifiable":
            if label.startswith("attack:"):
                detected.setdefault(label[7:], False)
            else:
                unclassifiable += 1
            continue
        if label.startswith("attack:"):
            instance = label[7:]
            detected[instance] = detected.get(instance, False) or verdict.is_alert
        else:
            legit_packets += 1
            if verdict.is_alert:
                false_alerts += 1
    instances_total = len(detected)
    instances_detected = sum(detected.values())
    dr = instances_detected / instances_total * 100.0 if instances_total else None
    fpr = false_alerts / legit_packets * 100.0 if legit_packets else None
    return EvalReport(
        dr=dr,
        fpr=fpr,
        instances_total=instances_total,
        instances_detected=instances_detected,
        legit_packets=legit_packets,
        false_alerts=false_alerts,
        unclassifiable=unclassifiable,
        config={
            "n": model.chunking.n,
            "chunk_len": model.chunking.chunk_len,
            "th_s": cfg.th_s,
            "score_threshold": cfg.score_threshold,
            "chunks_enabled": cfg.chunks_enabled,
        },
    )


@dataclass(frozen=True)
class GridSpec:
    """Sweep axes; an empty axis simply yields no rows."""

    ns: tuple[int, ...]
    chunk_lens: tuple[int, ...]
    score_thresholds: tuple[float, ...]
    chunk_modes: tuple[bool, ...] = (True, False)


@dataclass(frozen=True)
class SweepRow:
    n: int
    chunk_len: int
    th_s: float
    score_threshold: float
    chunks_enabled: bool
    report: EvalReport | None  # None marks a skipped (invalid) cell


SWEEP_CSV_HEADER = [
    "n", "len_ck", "th_s", "score_threshold", "chunks", "dr", "fpr",
    "instances", "detected", "legit_packets", "false_alerts", "unclassifiable",
]


def sweep(
    train_records: Sequence[PacketRecord],
    test_records: Sequence[PacketRecord],
    labels: LabelSet,
    grid: GridSpec,
    *,
    protocol: Protocol,
    port: int | None = None,
    alpha: float = 0.1,
    th_s: float = 5.0,
) -> list[SweepRow]:
    """Train one model per (n, chunk_len) and evaluate every grid cell.

    Invalid cells (n > chunk_len) produce a row without a report and a
    warning on stderr. Rows come out in deterministic grid order.
    """
    rows: list[SweepRow] = []
    for n in grid.ns:
        for chunk_len in grid.chunk_lens:
            if n > chunk_len:
                print(f"sweep: skipping invalid cell n={n} chunk_len={chunk_len}", file=sys.stderr)
                for threshold in grid.score_thresholds:
                    for chunks_enabled in grid.chunk_modes:
                        rows.append(SweepRow(n, chunk_len, th_s, threshold, chunks_enabled, None))
                continue
            model = train(
                iter(train_records),
                protocol=protocol,
                chunking=ChunkingConfig(n=n, chunk_len=chunk_len),
                port=port,
                alpha=alpha,
                th_s=th_s,
            )
            for threshold in grid.score_thresholds:
                for chunks_enabled in grid.chunk_modes:
                    cfg = DetectorConfig(
                        score_threshold=threshold, th_s=th_s, chunks_enabled=chunks_enabled
                    )
                    report = evaluate(model, test_records, labels, cfg)
                    rows.append(SweepRow(n, chunk_len, th_s, threshold, chunks_enabled, report))
    return rows


def write_sweep_csv(rows: Iterable[SweepRow], path) -> None:
    try:
        f = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise EvaluationError(f"cannot write report {path}: {exc}") from exc
    with f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_CSV_HEADER)
        for row in rows:
            rep = row.report
            writer.writerow([
                row.n,
                row.chunk_len,
                row.th_s,
                row.score_threshold,
                "on" if row.chunks_enabled else "off",
                "" if rep is None or rep.dr is None else repr(rep.dr),
                "" if rep is None or rep.fpr is None else repr(rep.fpr),
                "" if rep is None else rep.instances_total,
                "" if rep is None else rep.instances_detected,
                "" if rep is None else rep.legit_packets,
                "" if rep is None else rep.false_alerts,
                "" if rep is None else rep.unclassifiable,
            ])
