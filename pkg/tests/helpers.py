"""Builders for synthetic pcap fixtures used across the test suite."""

import struct


def ipv4(addr: str) -> bytes:
    return bytes(int(part) for part in addr.split("."))


def tcp_frame(
    payload: bytes,
    dst_port: int,
    src_port: int = 40000,
    dst_ip: str = "172.16.0.5",
    src_ip: str = "10.0.0.9",
    pad_to: int | None = None,
) -> bytes:
    eth = b"\x02" * 6 + b"\x04" * 6 + b"\x08\x00"
    ip = struct.pack(
        ">BBHHHBBH4s4s",
        0x45, 0, 20 + 20 + len(payload), 0x1234, 0, 64, 6, 0,
        ipv4(src_ip), ipv4(dst_ip),
    )
    tcp = struct.pack(">HHIIBBHHH", src_port, dst_port, 1, 1, 5 << 4, 0x18, 65535, 0, 0)
    frame = eth + ip + tcp + payload
    if pad_to is not None and len(frame) < pad_to:
        frame += b"\x00" * (pad_to - len(frame))
    return frame


def udp_frame(payload: bytes, dst_port: int, dst_ip: str = "172.16.0.5") -> bytes:
    eth = b"\x02" * 6 + b"\x04" * 6 + b"\x08\x00"
    ip = struct.pack(
        ">BBHHHBBH4s4s",
        0x45, 0, 20 + 8 + len(payload), 0x1234, 0, 64, 17, 0,
        ipv4("10.0.0.9"), ipv4(dst_ip),
    )
    udp = struct.pack(">HHHH", 40000, dst_port, 8 + len(payload), 0)
    return eth + ip + udp + payload


def pcap_bytes(
    frames: list[bytes],
    big_endian: bool = False,
    link_type: int = 1,
    ts: tuple[int, int] = (0, 0),
) -> bytes:
    endian = ">" if big_endian else "<"
    out = struct.pack(endian + "IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, link_type)
    for i, frame in enumerate(frames):
        out += struct.pack(endian + "IIII", ts[0] + i, ts[1], len(frame), len(frame))
        out += frame
    return out
