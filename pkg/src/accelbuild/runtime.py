"""Emulated device: load kernel containers and run them.

``run_functional`` evaluates a kernel with whole-vector numpy operations
(the sw_emu view).  ``run_timed`` pushes elements one at a time through a
cycle-stepped model of the scheduled pipeline (the hw_emu view) and reports
cycle counts next to the fetch-compute-store baseline.  Both are emulation
models, not measurements of real hardware.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .backend.container import decode_artifact
from .backend.ir import COSTS, ELEMENT_TYPES, parse_kernel
from .errors import PlatformMismatchError, SignatureError

CYCLE_MODEL = "emulated streaming pipeline (depth + (n-1)*ii) vs fetch-compute-store (L+2 per stage)"
# one fetch and one store charged per stage per element
FETCH_STORE_OVERHEAD = 2

_DTYPES = {"i32": (np.int32, np.uint32), "i64": (np.int64, np.uint64)}


@dataclass
class LoadedKernel:
    artifact: object
    ir: object

    @property
    def inputs(self):
        return self.ir.inputs

    @property
    def outputs(self):
        return self.ir.outputs


@dataclass
class Device:
    platform: object
    loaded: LoadedKernel | None = None
    buffer_pool: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CycleReport:
    n: int
    pipeline_cycles: int
    sequential_cycles: int
    speedup: Fraction
    wall_estimate_us: Fraction
    model: str = CYCLE_MODEL

    def format(self):
        return (
            f"n={self.n} pipeline={self.pipeline_cycles} sequential={self.sequential_cycles} "
            f"speedup={_fixed3(self.speedup)} est_us={_fixed3(self.wall_estimate_us)}"
        )


def _fixed3(q):
    """Exact decimal rendering of a rational, rounded half-up to 3 places."""
    q = Fraction(q)
    sign = "-" if q < 0 else ""
    scaled = abs(q) * 1000
    whole = int(scaled)
    if scaled - whole >= Fraction(1, 2):
        whole += 1
    return f"{sign}{whole // 1000}.{whole % 1000:03d}"


def load_artifact(dev, data):
    """Decode *data* and place it in the device's single slot.

    Whatever was loaded before is replaced; the buffer pool is not touched.
    """
    artifact = decode_artifact(data)
    if artifact.build_type == "hw" and artifact.platform != dev.platform.platform:
        raise PlatformMismatchError(artifact.platform, dev.platform.platform)
    kernel = LoadedKernel(artifact, parse_kernel(artifact.ir_text))
    dev.loaded = kernel
    return kernel


def _wrap(value, bits):
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


def _check_inputs(k, inputs):
    declared = [name for name, _ in k.inputs]
    missing = sorted(set(declared) - set(inputs))
    extra = sorted(set(inputs) - set(declared))
    if missing:
        raise SignatureError(f"missing input stream(s): {', '.join(missing)}")
    if extra:
        raise SignatureError(f"unexpected input stream(s): {', '.join(extra)}")
    vectors = {}
    lengths = set()
    for name, etype in k.inputs:
        values = [int(v) for v in np.asarray(inputs[name]).ravel().tolist()]
        bits = ELEMENT_TYPES[etype]
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
        for v in values:
            if not lo <= v <= hi:
                raise SignatureError(f"value {v} on stream {name} does not fit {etype}")
        vectors[name] = values
        lengths.add(len(values))
    if len(lengths) > 1:
        raise SignatureError(f"input streams have different lengths: {sorted(lengths)}")
    n = lengths.pop() if lengths else 0
    return vectors, n


def _np_stage(st, operands, dtype, udtype, bits):
    a = operands[0].astype(dtype)
    if st.op == "copy":
        return a.copy()
    if st.op in ("addi", "muli"):
        imm = dtype(_wrap(st.imm, bits))
        return a + imm if st.op == "addi" else a * imm
    if st.op == "shri":
        if st.imm >= bits:
            return np.zeros_like(a)
        return (a.view(udtype) >> udtype(st.imm)).view(dtype)
    b = operands[1].astype(dtype)
    return {
        "add": np.add,
        "sub": np.subtract,
        "mul": np.multiply,
        "min": np.minimum,
        "max": np.maximum,
    }[st.op](a, b)


def run_functional(k, inputs):
    """Whole-vector evaluation in stage order with wraparound arithmetic."""
    vectors, n = _check_inputs(k, inputs)
    streams = {}
    for name, etype in k.inputs:
        streams[name] = np.array(vectors[name], dtype=_DTYPES[etype][0])
    types = k.ir.stream_types()
    with np.errstate(over="ignore"):
        for st in k.ir.stages:
            etype = types[st.result]
            dtype, udtype = _DTYPES[etype]
            streams[st.result] = _np_stage(st, [streams[a] for a in st.args], dtype, udtype, ELEMENT_TYPES[etype])
    return {name: streams[name].copy() for name, _ in k.outputs}


def _scalar_stage(st, operands, bits):
    a = operands[0]
    op = st.op
    if op == "copy":
        return a
    if op == "addi":
        return _wrap(a + st.imm, bits)
    if op == "muli":
        return _wrap(a * st.imm, bits)
    if op == "shri":
        return _wrap((a & ((1 << bits) - 1)) >> st.imm, bits)
    b = operands[1]
    if op == "add":
        return _wrap(a + b, bits)
    if op == "sub":
        return _wrap(a - b, bits)
    if op == "mul":
        return _wrap(a * b, bits)
    if op == "min":
        return min(a, b)
    return max(a, b)


class _PipelineEngine:
    """Cycle-stepped streaming pipeline.

    Element ``i`` enters at cycle ``i * ii``.  Each stage unit is fully
    pipelined and starts an element as soon as all of its operands for that
    element are ready; its result is ready ``latency`` cycles later.  An
    element retires when every output stream has its value.
    """

    def __init__(self, ir, ii):
        self.ir = ir
        self.ii = ii
        self.types = ir.stream_types()

    def run(self, vectors, n):
        ir = self.ir
        values = {name: [None] * n for name in self.types}
        ready_at = {name: [None] * n for name in self.types}
        next_elem = [0] * len(ir.stages)
        entered = 0
        retired = 0
        last_retire = 0
        inputs = {name for name, _ in ir.inputs}
        cycle = 0
        while retired < n:
            if entered < n and cycle == entered * self.ii:
                for name in inputs:
                    values[name][entered] = vectors[name][entered]
                    ready_at[name][entered] = cycle
                entered += 1
            for si, st in enumerate(ir.stages):
                i = next_elem[si]
                # one issue per stage per cycle
                if i < entered and all(ready_at[a][i] is not None and ready_at[a][i] <= cycle for a in st.args):
                    bits = ELEMENT_TYPES[self.types[st.result]]
                    values[st.result][i] = _scalar_stage(st, [values[a][i] for a in st.args], bits)
                    ready_at[st.result][i] = cycle + st.latency
                    next_elem[si] = i + 1
            while retired < entered:
                done = self._retire_time(ready_at, retired, inputs)
                if done is None or done > cycle:
                    break
                last_retire = done
                retired += 1
            cycle += 1
        outputs = {name: values[name] for name, _ in ir.outputs}
        return outputs, last_retire

    def _retire_time(self, ready_at, i, inputs):
        times = []
        for name, _ in self.ir.outputs:
            t = ready_at[name][i]
            if t is None:
                return None
            times.append(t + COSTS["copy"].latency if name in inputs else t)
        return max(times)


def sequential_cycle_model(ir, n):
    """Fetch-compute-store baseline: every element pays (latency + 2) per stage."""
    return n * sum(lat + FETCH_STORE_OVERHEAD for lat in ir.effective_latencies())


def run_timed(k, inputs):
    vectors, n = _check_inputs(k, inputs)
    raw, pipeline = _PipelineEngine(k.ir, k.artifact.ii).run(vectors, n)
    outputs = {name: np.array(raw[name], dtype=_DTYPES[etype][0]) for name, etype in k.outputs}
    sequential = sequential_cycle_model(k.ir, n)
    speedup = Fraction(sequential, pipeline) if pipeline else Fraction(0)
    report = CycleReport(
        n=n,
        pipeline_cycles=pipeline,
        sequential_cycles=sequential,
        speedup=speedup,
        wall_estimate_us=Fraction(pipeline, k.artifact.clock_mhz),
    )
    return outputs, report
