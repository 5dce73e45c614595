"""File formats: PTAG binary time tags, CSV tags, and ground-truth dumps.

PTAG layout: magic ``PTAG``, u8 version=1, u64 LE resolution_ps, u64 LE
duration_ps, u32 LE channel count, then one record per tag interleaved in
global time order: u8 channel, u64 LE timestamp.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .kmc import BRANCH_ZPL, PhotonStream, TimeTagSet

PTAG_MAGIC = b"PTAG"
PTAG_VERSION = 1
_HEADER = struct.Struct("<BQQI")
_RECORD_DTYPE = np.dtype([("channel", "u1"), ("timestamp", "<u8")])


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file and rename so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _interleave(tagset: TimeTagSet):
    """All tags in global time order (channel id breaks ties)."""
    if not tagset.channels:
        return np.empty(0, dtype=np.uint8), np.empty(0, dtype=np.uint64)
    chans = sorted(tagset.channels)
    ts = np.concatenate([tagset.channels[c] for c in chans])
    ch = np.concatenate([np.full(len(tagset.channels[c]), c, dtype=np.uint8)
                         for c in chans])
    order = np.lexsort((ch, ts))
    return ch[order], ts[order].astype(np.uint64)


def ptag_bytes(tagset: TimeTagSet) -> bytes:
    ch, ts = _interleave(tagset)
    records = np.empty(len(ts), dtype=_RECORD_DTYPE)
    records["channel"] = ch
    records["timestamp"] = ts
    duration_ps = int(round(tagset.duration * 1e12))
    header = PTAG_MAGIC + _HEADER.pack(PTAG_VERSION, tagset.resolution_ps,
                                       duration_ps, len(tagset.channels))
    return header + records.tobytes()


def write_ptag(tagset: TimeTagSet, path) -> None:
    atomic_write_bytes(path, ptag_bytes(tagset))


def read_ptag(path) -> TimeTagSet:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != PTAG_MAGIC:
        raise ValueError(f"{path}: not a PTAG file")
    version, resolution_ps, duration_ps, n_channels = _HEADER.unpack_from(data, 4)
    if version != PTAG_VERSION:
        raise ValueError(f"{path}: unsupported PTAG version {version}")
    records = np.frombuffer(data, dtype=_RECORD_DTYPE, offset=4 + _HEADER.size)
    channels = {}
    for c in range(n_channels):
        channels[c] = records["timestamp"][records["channel"] == c].astype(np.int64)
    return TimeTagSet(resolution_ps=int(resolution_ps), channels=channels,
                      duration=duration_ps * 1e-12)


def tags_csv_text(tagset: TimeTagSet) -> str:
    ch, ts = _interleave(tagset)
    lines = ["channel,time_ps"]
    res = tagset.resolution_ps
    for c, t in zip(ch.tolist(), ts.tolist()):
        lines.append(f"{c},{t * res}")
    return "\n".join(lines) + "\n"


def write_tags_csv(tagset: TimeTagSet, path) -> None:
    atomic_write_text(path, tags_csv_text(tagset))


def read_tags_csv(path, resolution_ps: int = 1, duration: float = 0.0) -> TimeTagSet:
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    channels: dict[int, np.ndarray] = {}
    if data.size:
        for c in np.unique(data[:, 0]):
            time_ps = data[data[:, 0] == c, 1]
            channels[int(c)] = time_ps // resolution_ps
    if duration <= 0 and data.size:
        duration = float(data[:, 1].max()) * 1e-12
    return TimeTagSet(resolution_ps=resolution_ps, channels=channels, duration=duration)


def read_tags(path) -> TimeTagSet:
    """Dispatch on extension: .ptag binary, anything else CSV."""
    if str(path).endswith(".ptag"):
        return read_ptag(path)
    return read_tags_csv(path)


def truth_csv_text(photons: PhotonStream) -> str:
    lines = ["time_s,freq_hz,source,branch"]
    rows = zip(photons.times.tolist(), photons.frequencies.tolist(),
               photons.source_ids.tolist(), photons.branches.tolist())
    for t, f, src, br in rows:
        branch = "ZPL" if br == BRANCH_ZPL else "vibronic"
        lines.append(f"{t!r},{f!r},{src},{branch}")
    return "\n".join(lines) + "\n"


def write_truth_csv(photons: PhotonStream, path) -> None:
    atomic_write_text(path, truth_csv_text(photons))
