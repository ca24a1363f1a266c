"""The ``.akbin`` kernel container.

Layout::

    b"AKB1"
    u64be length + JSON metadata (fixed key order, compact separators)
    u64be length + canonical IR text
    u64be length + schedule, one "index:start" line per stage

No timestamps or host paths are stored, so identical inputs produce identical
bytes.
"""

import json
import struct

from ..errors import ContainerError, ParseError
from .compiler import KernelArtifact, content_hash_of, estimate_resources, schedule_pipeline
from .ir import KernelConfig, parse_kernel

MAGIC = b"AKB1"
META_KEYS = (
    "kernel", "platform", "type", "clock_mhz", "depth", "ii",
    "dsps", "luts", "inputs", "outputs", "content_hash",
)
_LEN = struct.Struct(">Q")


def _section(data):
    return _LEN.pack(len(data)) + data


def encode_artifact(a):
    meta = json.dumps(a.metadata(), separators=(",", ":"), ensure_ascii=True).encode("ascii")
    sched = "".join(f"{i}:{start}\n" for i, start in enumerate(a.schedule)).encode("ascii")
    return MAGIC + _section(meta) + _section(a.ir_text.encode("utf-8")) + _section(sched)


def _read_sections(data, count):
    pos = len(MAGIC)
    out = []
    for _ in range(count):
        if pos + _LEN.size > len(data):
            raise ContainerError("truncated")
        (n,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        if pos + n > len(data):
            raise ContainerError("truncated")
        out.append(data[pos:pos + n])
        pos += n
    if pos != len(data):
        raise ContainerError("trailing bytes after last section")
    return out


def _parse_schedule(text):
    if text and not text.endswith("\n"):
        raise ContainerError("malformed schedule")
    starts = []
    for i, line in enumerate(text.split("\n")[:-1]):
        idx, sep, start = line.partition(":")
        if not sep or idx != str(i) or not start.isdigit():
            raise ContainerError("malformed schedule")
        starts.append(int(start))
    return tuple(starts)


def decode_artifact(data):
    data = bytes(data)
    if len(data) < len(MAGIC):
        raise ContainerError("truncated")
    if data[:len(MAGIC)] != MAGIC:
        raise ContainerError("bad magic")
    meta_raw, ir_raw, sched_raw = _read_sections(data, 3)
    try:
        meta = json.loads(meta_raw.decode("ascii"))
        ir_text = ir_raw.decode("utf-8")
        sched_text = sched_raw.decode("ascii")
    except (UnicodeDecodeError, ValueError):
        raise ContainerError("malformed metadata") from None
    if not isinstance(meta, dict) or tuple(meta) != META_KEYS:
        raise ContainerError("malformed metadata")

    try:
        expected = content_hash_of(ir_text, meta["platform"], meta["type"], meta["clock_mhz"], meta["ii"])
    except (TypeError, ValueError):
        raise ContainerError("malformed metadata") from None
    if expected != meta["content_hash"]:
        raise ContainerError("hash mismatch")

    # The hash covers inputs; everything derived from them is re-checked.
    try:
        ir = parse_kernel(ir_text)
        sched = schedule_pipeline(ir, KernelConfig(meta["platform"], meta["ii"]))
    except (ParseError, TypeError, ValueError):
        raise ContainerError("malformed IR") from None
    res = estimate_resources(ir)
    derived = {
        "kernel": ir.name,
        "depth": sched.depth,
        "dsps": res.dsps,
        "luts": res.luts,
        "inputs": [list(p) for p in ir.inputs],
        "outputs": [list(p) for p in ir.outputs],
    }
    for key, value in derived.items():
        if meta[key] != value:
            raise ContainerError(f"metadata field {key} does not match the IR")
    if _parse_schedule(sched_text) != sched.stage_start:
        raise ContainerError("schedule does not match the IR")

    return KernelArtifact(
        kernel=meta["kernel"],
        platform=meta["platform"],
        build_type=meta["type"],
        clock_mhz=meta["clock_mhz"],
        depth=meta["depth"],
        ii=meta["ii"],
        dsps=meta["dsps"],
        luts=meta["luts"],
        inputs=tuple(tuple(p) for p in meta["inputs"]),
        outputs=tuple(tuple(p) for p in meta["outputs"]),
        content_hash=meta["content_hash"],
        ir_text=ir_text,
        schedule=sched.stage_start,
    )
