"""Semi-supervised traffic model: training and persistence.

Training packets are grouped into classes by (destination port, total chunk
count). For every n-gram ever observed in a class, the mean and population
standard deviation of its occurrence count are recorded, both for the whole
relevant payload and per chunk position; samples where the n-gram is absent
contribute a count of zero.

Model files are a single JSON document with sorted classes/n-grams so that
identical models serialize to identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

from .chunking import ChunkingConfig, NGramCounts, extract_ngrams, split_chunks
from .corpus import PacketRecord
from .errors import CorpusError, ModelFormatError
from .protocols import Malformed, Protocol, extract_relevant

FORMAT_VERSION = 1


class ClassKey(NamedTuple):
    port: int
    chunk_count: int


@dataclass(frozen=True)
class NGramStats:
    """Mean/std of one n-gram's occurrence count within a class.

    chunks is sparse: positions where the n-gram never occurred in training
    are simply absent and read as (0.0, 0.0).
    """

    mean: float
    std: float
    chunks: dict[int, tuple[float, float]]

    def chunk_stats(self, j: int) -> tuple[float, float]:
        return self.chunks.get(j, (0.0, 0.0))


@dataclass(frozen=True)
class ClassModel:
    sample_count: int
    stats: dict[bytes, NGramStats]


@dataclass
class TrainingSummary:
    """What happened to each record offered for training."""

    read: int = 0
    trained: int = 0
    skipped_other_port: int = 0
    skipped_empty: int = 0
    skipped_malformed: int = 0
    skipped_short: int = 0

    @property
    def skipped(self) -> int:
        return self.read - self.trained


@dataclass
class TrafficModel:
    protocol: Protocol
    port: int
    chunking: ChunkingConfig
    alpha: float
    th_s: float
    classes: dict[ClassKey, ClassModel]
    summary: TrainingSummary | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.th_s <= 0:
            raise ValueError("th_s must be > 0")


class _ClassAccumulator:
    """Running sums sufficient for exact mean/population-std per n-gram."""

    __slots__ = ("count", "payload", "chunks")

    def __init__(self):
        self.count = 0
        self.payload: dict[bytes, list[int]] = {}
        self.chunks: dict[bytes, dict[int, list[int]]] = {}

    def add(self, counts: NGramCounts) -> None:
        self.count += 1
        for gram, x in counts.payload_counts.items():
            cell = self.payload.get(gram)
            if cell is None:
                self.payload[gram] = [x, x * x]
            else:
                cell[0] += x
                cell[1] += x * x
        for gram, per_chunk in counts.chunk_counts.items():
            slots = self.chunks.setdefault(gram, {})
            for j, x in per_chunk.items():
                cell = slots.get(j)
                if cell is None:
                    slots[j] = [x, x * x]
                else:
                    cell[0] += x
                    cell[1] += x * x

    def finalize(self) -> ClassModel:
        k = self.count
        stats: dict[bytes, NGramStats] = {}
        for gram, (s1, s2) in self.payload.items():
            mean = s1 / k
            var = s2 / k - mean * mean
            chunk_stats: dict[int, tuple[float, float]] = {}
            for j, (c1, c2) in sorted(self.chunks.get(gram, {}).items()):
                cmean = c1 / k
                cvar = c2 / k - cmean * cmean
                chunk_stats[j] = (cmean, math.sqrt(cvar) if cvar > 0 else 0.0)
            stats[gram] = NGramStats(
                mean=mean,
                std=math.sqrt(var) if var > 0 else 0.0,
                chunks=chunk_stats,
            )
        return ClassModel(sample_count=k, stats=stats)


def train(
    records: Iterable[PacketRecord],
    *,
    protocol: Protocol,
    chunking: ChunkingConfig,
    port: int | None = None,
    alpha: float = 0.1,
    th_s: float = 5.0,
    ignore_labels: bool = False,
) -> TrafficModel:
    """Build a model from an attack-free corpus.

    Records labeled as attacks abort training unless ignore_labels is set
    (then the labels are disregarded and the packets are used). Chunk
    statistics are always recorded; disabling the chunk rules is a
    detection-time choice.
    """
    if port is None:
        port = protocol.default_port
    extraction_cfg = replace(chunking, chunks_enabled=True)
    summary = TrainingSummary()
    accumulators: dict[ClassKey, _ClassAccumulator] = {}

    for rec in records:
        summary.read += 1
        if rec.is_attack and not ignore_labels:
            raise CorpusError(
                f"record {rec.id} is labeled {rec.label!r}; the training corpus "
                "must be attack-free (use ignore_labels to override)"
            )
        if rec.dst_port != port:
            summary.skipped_other_port += 1
            continue
        if not rec.payload:
            summary.skipped_empty += 1
            continue
        relevant = extract_relevant(protocol, rec.payload)
        if isinstance(relevant, Malformed):
            summary.skipped_malformed += 1
            continue
        if relevant.total_len < extraction_cfg.n:
            summary.skipped_short += 1
            continue
        layout = split_chunks(relevant, extraction_cfg)
        counts = extract_ngrams(relevant, layout, extraction_cfg)
        if counts.tot_seqs == 0:
            summary.skipped_short += 1
            continue
        key = ClassKey(port, layout.nck_total)
        acc = accumulators.get(key)
        if acc is None:
            acc = accumulators[key] = _ClassAccumulator()
        acc.add(counts)
        summary.trained += 1

    if summary.trained == 0:
        raise CorpusError("no trainable packets in corpus")
    return TrafficModel(
        protocol=protocol,
        port=port,
        chunking=extraction_cfg,
        alpha=alpha,
        th_s=th_s,
        classes={key: acc.finalize() for key, acc in accumulators.items()},
        summary=summary,
    )


def _model_to_doc(model: TrafficModel) -> dict:
    classes = []
    for key in sorted(model.classes):
        cls = model.classes[key]
        ngrams = []
        for gram in sorted(cls.stats):
            st = cls.stats[gram]
            ngrams.append({
                "gram_hex": gram.hex(),
                "mean": st.mean,
                "std": st.std,
                "chunks": [
                    {"j": j, "mean": m, "std": s}
                    for j, (m, s) in sorted(st.chunks.items())
                ],
            })
        classes.append({
            "port": key.port,
            "nck_total": key.chunk_count,
            "sample_count": cls.sample_count,
            "ngrams": ngrams,
        })
    return {
        "format_version": FORMAT_VERSION,
        "protocol": model.protocol.value,
        "port": model.port,
        "n": model.chunking.n,
        "chunk_len": model.chunking.chunk_len,
        "alpha": model.alpha,
        "th_s": model.th_s,
        "classes": classes,
    }


def save_model(model: TrafficModel, path) -> int:
    """Serialize the model to a JSON file; returns bytes written."""
    data = json.dumps(_model_to_doc(model), separators=(",", ":"), allow_nan=False)
    encoded = data.encode("utf-8") + b"\n"
    try:
        with open(path, "wb") as f:
            f.write(encoded)
    except OSError as exc:
        raise ModelFormatError(f"cannot write model {path}: {exc}") from exc
    return len(encoded)


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise ModelFormatError(f"invalid model file: {msg}")


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def load_model(path) -> TrafficModel:
    """Load and validate a model file written by save_model."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except ValueError as exc:
        raise ModelFormatError(f"{path}: not a valid model file ({exc})") from exc

    _expect(isinstance(doc, dict), "top level must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version: {version!r}")
    proto_name = doc.get("protocol")
    _expect(proto_name in ("http", "ftp"), f"unknown protocol {proto_name!r}")
    protocol = Protocol(proto_name)
    port = doc.get("port")
    _expect(_is_int(port) and 0 <= port <= 65535, "bad port")
    n = doc.get("n")
    chunk_len = doc.get("chunk_len")
    _expect(_is_int(n) and n >= 1, "bad n")
    _expect(_is_int(chunk_len) and chunk_len >= n, "chunk_len must be >= n")
    alpha = doc.get("alpha")
    _expect(_is_num(alpha) and alpha > 0, "alpha must be > 0")
    th_s = doc.get("th_s")
    _expect(_is_num(th_s) and th_s > 0, "th_s must be > 0")
    raw_classes = doc.get("classes")
    _expect(isinstance(raw_classes, list), "classes must be a list")

    classes: dict[ClassKey, ClassModel] = {}
    for rc in raw_classes:
        _expect(isinstance(rc, dict), "class entry must be an object")
        _expect(rc.get("port") == port, "class port differs from model port")
        nck_total = rc.get("nck_total")
        _expect(_is_int(nck_total) and nck_total >= 1, "bad nck_total")
        sample_count = rc.get("sample_count")
        _expect(_is_int(sample_count) and sample_count >= 1, "sample_count must be >= 1")
        key = ClassKey(port, nck_total)
        _expect(key not in classes, f"duplicate class {key}")
        raw_ngrams = rc.get("ngrams")
        _expect(isinstance(raw_ngrams, list), "ngrams must be a list")
        stats: dict[bytes, NGramStats] = {}
        for rg in raw_ngrams:
            _expect(isinstance(rg, dict), "ngram entry must be an object")
            gram_hex = rg.get("gram_hex")
            _expect(isinstance(gram_hex, str) and len(gram_hex) == 2 * n, "bad gram_hex length")
            try:
                gram = bytes.fromhex(gram_hex)
            except ValueError:
                raise ModelFormatError(f"invalid model file: bad gram_hex {gram_hex!r}") from None
            _expect(gram not in stats, f"duplicate n-gram {gram_hex}")
            mean = rg.get("mean")
            std = rg.get("std")
            _expect(_is_num(mean) and mean >= 0, "mean must be >= 0")
            _expect(_is_num(std) and std >= 0, "std must be >= 0")
            chunk_stats: dict[int, tuple[float, float]] = {}
            raw_chunks = rg.get("chunks")
            _expect(isinstance(raw_chunks, list), "chunks must be a list")
            for ch in raw_chunks:
                _expect(isinstance(ch, dict), "chunk entry must be an object")
                j = ch.get("j")
                _expect(_is_int(j) and 0 <= j < nck_total, "chunk index out of range")
                _expect(j not in chunk_stats, f"duplicate chunk index {j}")
                cm = ch.get("mean")
                cs = ch.get("std")
                _expect(_is_num(cm) and cm >= 0, "chunk mean must be >= 0")
                _expect(_is_num(cs) and cs >= 0, "chunk std must be >= 0")
                chunk_stats[j] = (float(cm), float(cs))
            chunk_mean_sum = sum(m for m, _ in chunk_stats.values())
            _expect(
                abs(chunk_mean_sum - mean) <= 1e-9 * nck_total,
                f"chunk means sum to {chunk_mean_sum!r}, payload mean is {mean!r}",
            )
            stats[gram] = NGramStats(float(mean), float(std), chunk_stats)
        classes[key] = ClassModel(sample_count=sample_count, stats=stats)

    return TrafficModel(
        protocol=protocol,
        port=port,
        chunking=ChunkingConfig(n=n, chunk_len=chunk_len, chunks_enabled=True),
        alpha=float(alpha),
        th_s=float(th_s),
        classes=classes,
    )
