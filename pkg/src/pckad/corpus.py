"""Packet corpus ingestion and storage.

Two corpus formats are supported:

* classic pcap (magic 0xa1b2c3d4 / 0xd4c3b2a1, either endianness, Ethernet
  link type) from which inbound TCP segments are decapsulated, and
* a portable JSONL format, one record per line:
  ``{"port": int, "payload_hex": str, "label": "legit"|"attack:<id>", "ts": int}``
  where ``label`` and ``ts`` are optional and ``ts`` is microseconds since
  the epoch.

The data unit is the single packet; no TCP stream reassembly is performed.
"""

from __future__ import annotations

import ipaddress
import json
import re
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import CorpusError

_HEX_RE = re.compile(r"\A[0-9a-fA-F]*\Z")

_PCAP_ENDIAN = {b"\xa1\xb2\xc3\xd4": ">", b"\xd4\xc3\xb2\xa1": "<"}
_LINKTYPE_ETHERNET = 1


def _validate_label(label: str) -> None:
    if label == "legit":
        return
    if label.startswith("attack:") and len(label) > len("attack:"):
        return
    raise ValueError(f"label must be 'legit' or 'attack:<id>', got {label!r}")


@dataclass(frozen=True)
class PacketRecord:
    """One captured packet: destination port, raw payload, optional label."""

    id: int
    dst_port: int
    payload: bytes
    label: str | None = None
    ts: int | None = None

    def __post_init__(self):
        if not 0 <= self.dst_port <= 65535:
            raise ValueError(f"dst_port out of range: {self.dst_port}")
        if self.label is not None:
            _validate_label(self.label)

    @property
    def is_attack(self) -> bool:
        return self.label is not None and self.label.startswith("attack:")

    @property
    def attack_instance(self) -> str | None:
        """Attack instance id, or None for legit/unlabeled records."""
        if not self.is_attack:
            return None
        return self.label[len("attack:"):]


@dataclass(frozen=True)
class TrafficFilter:
    """Selects the traffic of interest while reading a capture."""

    ports: frozenset[int]
    dst_prefix: ipaddress.IPv4Network | None = None
    tcp_only: bool = True

    def __post_init__(self):
        if not self.ports:
            raise ValueError("filter needs at least one port")

    def matches(self, dst_port: int, dst_addr: bytes | None) -> bool:
        if dst_port not in self.ports:
            return False
        if self.dst_prefix is not None:
            if dst_addr is None:
                return False
            if ipaddress.IPv4Address(dst_addr) not in self.dst_prefix:
                return False
        return True


@dataclass
class IngestSummary:
    """Counters filled in while a capture is consumed."""

    frames: int = 0
    truncated: int = 0
    non_ipv4_tcp: int = 0
    filtered_out: int = 0
    yielded: int = 0


class _TruncatedFrame(Exception):
    pass


def _decode_tcp_frame(data: bytes) -> tuple[int, bytes, bytes] | None:
    """Decapsulate Ethernet/IPv4/TCP; (dst_port, dst_addr, payload) or None.

    Returns None for frames of other protocols (non-IPv4 ethertype, non-TCP,
    non-first IP fragments). Raises _TruncatedFrame when a header is cut off.
    """
    if len(data) < 14:
        raise _TruncatedFrame
    if data[12:14] != b"\x08\x00":
        return None
    ip = data[14:]
    if len(ip) < 20:
        raise _TruncatedFrame
    if ip[0] >> 4 != 4:
        return None
    ihl = (ip[0] & 0x0F) * 4
    if ihl < 20 or len(ip) < ihl:
        raise _TruncatedFrame
    if ip[9] != 6:
        return None
    if int.from_bytes(ip[6:8], "big") & 0x1FFF:
        # non-first fragment: the TCP header is in another packet
        return None
    total_len = int.from_bytes(ip[2:4], "big")
    if total_len < ihl + 20:
        raise _TruncatedFrame
    if len(ip) < total_len:
        # snaplen cut the datagram short; a partial payload would skew counts
        raise _TruncatedFrame
    # trailing link-layer padding (minimum frame size) is not payload
    datagram = ip[:total_len]
    tcp = datagram[ihl:]
    if len(tcp) < 20:
        raise _TruncatedFrame
    data_off = (tcp[12] >> 4) * 4
    if data_off < 20 or data_off > len(tcp):
        raise _TruncatedFrame
    dst_port = int.from_bytes(tcp[2:4], "big")
    return dst_port, ip[16:20], tcp[data_off:]


def read_pcap(
    path,
    flt: TrafficFilter,
    summary: IngestSummary | None = None,
) -> Iterator[PacketRecord]:
    """Yield one PacketRecord per TCP segment matching the filter.

    Empty TCP payloads are yielded too (length 0); downstream layers decide
    whether such packets are classifiable. Truncated frames are skipped and
    counted in the summary; frames of other protocols are skipped silently.
    """
    if summary is None:
        summary = IngestSummary()
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise CorpusError(f"cannot open capture {path}: {exc}") from exc
    with f:
        header = f.read(24)
        if len(header) < 24:
            raise CorpusError(f"{path}: truncated pcap global header")
        endian = _PCAP_ENDIAN.get(header[:4])
        if endian is None:
            raise CorpusError(f"{path}: unrecognized pcap magic {header[:4].hex()}")
        link_type = struct.unpack(endian + "I", header[20:24])[0]
        if link_type != _LINKTYPE_ETHERNET:
            raise CorpusError(f"{path}: unsupported link type {link_type} (Ethernet required)")

        next_id = 0
        while True:
            rec_hdr = f.read(16)
            if not rec_hdr:
                break
            if len(rec_hdr) < 16:
                summary.truncated += 1
                break
            ts_sec, ts_usec, incl_len, _ = struct.unpack(endian + "IIII", rec_hdr)
            data = f.read(incl_len)
            summary.frames += 1
            if len(data) < incl_len:
                summary.truncated += 1
                break
            try:
                decoded = _decode_tcp_frame(data)
            except _TruncatedFrame:
                summary.truncated += 1
                continue
            if decoded is None:
                summary.non_ipv4_tcp += 1
                continue
            dst_port, dst_addr, payload = decoded
            if not flt.matches(dst_port, dst_addr):
                summary.filtered_out += 1
                continue
            summary.yielded += 1
            yield PacketRecord(
                id=next_id,
                dst_port=dst_port,
                payload=payload,
                ts=ts_sec * 1_000_000 + ts_usec,
            )
            next_id += 1


def read_jsonl(path) -> Iterator[PacketRecord]:
    """Yield records from a JSONL corpus; any malformed line is fatal."""
    try:
        f = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot open corpus {path}: {exc}") from exc
    with f:
        for lineno, line in enumerate(f):
            line = line.rstrip("\r\n")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}: line {lineno}: record must be an object")
            yield _record_from_obj(obj, lineno, path)


def _record_from_obj(obj: dict, lineno: int, path) -> PacketRecord:
    port = obj.get("port")
    if not isinstance(port, int) or isinstance(port, bool) or not 0 <= port <= 65535:
        raise CorpusError(f"{path}: line {lineno}: missing or invalid 'port'")
    payload_hex = obj.get("payload_hex")
    if not isinstance(payload_hex, str):
        raise CorpusError(f"{path}: line {lineno}: missing or invalid 'payload_hex'")
    if len(payload_hex) % 2 != 0:
        raise CorpusError(f"{path}: line {lineno}: odd-length payload_hex")
    if not _HEX_RE.match(payload_hex):
        raise CorpusError(f"{path}: line {lineno}: payload_hex is not hexadecimal")
    label = obj.get("label")
    if label is not None:
        if not isinstance(label, str):
            raise CorpusError(f"{path}: line {lineno}: label must be a string")
        try:
            _validate_label(label)
        except ValueError as exc:
            raise CorpusError(f"{path}: line {lineno}: {exc}") from exc
    ts = obj.get("ts")
    if ts is not None and (not isinstance(ts, int) or isinstance(ts, bool)):
        raise CorpusError(f"{path}: line {lineno}: ts must be an integer")
    return PacketRecord(
        id=lineno,
        dst_port=port,
        payload=bytes.fromhex(payload_hex),
        label=label,
        ts=ts,
    )


def write_jsonl(records: Iterable[PacketRecord], path) -> int:
    """Write records to a JSONL corpus file; returns the record count.

    Round-trips with read_jsonl on (port, payload, label): ids are
    reassigned from line numbers on the next read.
    """
    count = 0
    try:
        with open(path, "w", encoding="utf-8") as f:
            for rec in records:
                obj: dict = {"port": rec.dst_port, "payload_hex": rec.payload.hex()}
                if rec.label is not None:
                    obj["label"] = rec.label
                if rec.ts is not None:
                    obj["ts"] = rec.ts
                f.write(json.dumps(obj, separators=(",", ":")) + "\n")
                count += 1
    except OSError as exc:
        raise CorpusError(f"cannot write corpus {path}: {exc}") from exc
    return count
