"""Resource estimation, ASAP pipeline scheduling and artifact generation."""

import hashlib
from dataclasses import dataclass

from .. import TOOL_VERSION
from ..errors import ConfigError, ResourceOverflowError
from ..workspace import BUILD_TYPES
from .ir import COSTS, render_kernel


@dataclass(frozen=True)
class ResourceEstimate:
    dsps: int = 0
    luts: int = 0

    def __add__(self, other):
        return ResourceEstimate(self.dsps + other.dsps, self.luts + other.luts)


@dataclass(frozen=True)
class PipelineSchedule:
    depth: int
    ii: int
    stage_start: tuple  # start cycle per stage index

    def completion(self, ir):
        return [start + st.latency for start, st in zip(self.stage_start, ir.stages)]


@dataclass(frozen=True)
class KernelArtifact:
    kernel: str
    platform: str
    build_type: str
    clock_mhz: int
    depth: int
    ii: int
    dsps: int
    luts: int
    inputs: tuple
    outputs: tuple
    content_hash: str
    ir_text: str
    schedule: tuple

    def metadata(self):
        # key order is part of the container format
        return {
            "kernel": self.kernel,
            "platform": self.platform,
            "type": self.build_type,
            "clock_mhz": self.clock_mhz,
            "depth": self.depth,
            "ii": self.ii,
            "dsps": self.dsps,
            "luts": self.luts,
            "inputs": [list(p) for p in self.inputs],
            "outputs": [list(p) for p in self.outputs],
            "content_hash": self.content_hash,
        }


def estimate_resources(ir):
    total = ResourceEstimate()
    for st in ir.stages:
        cost = COSTS[st.op]
        total += ResourceEstimate(cost.dsps, cost.luts)
    return total


def schedule_pipeline(ir, cfg):
    """ASAP schedule; inputs are available at cycle 0."""
    ready = {name: 0 for name, _ in ir.inputs}
    starts = []
    for st in ir.stages:
        start = max(ready[a] for a in st.args)
        starts.append(start)
        ready[st.result] = start + st.latency
    copy = COSTS["copy"].latency
    inputs = {name for name, _ in ir.inputs}
    depth = max(copy if name in inputs else ready[name] for name, _ in ir.outputs)
    return PipelineSchedule(depth=max(depth, 1), ii=cfg.ii, stage_start=tuple(starts))


def canonical_inputs(ir_text, platform, build_type, clock_mhz, ii):
    """The exact byte string whose SHA-256 is an artifact's content hash."""
    header = (
        f"tool: {TOOL_VERSION}\n"
        f"type: {build_type}\n"
        f"platform: {platform}\n"
        f"clock-mhz: {clock_mhz}\n"
        f"ii: {ii}\n"
        "--\n"
    )
    return (header + ir_text).encode("utf-8")


def content_hash_of(ir_text, platform, build_type, clock_mhz, ii):
    return hashlib.sha256(canonical_inputs(ir_text, platform, build_type, clock_mhz, ii)).hexdigest()


def check_budget(res, platform):
    if res.dsps > platform.budget_dsps:
        raise ResourceOverflowError("dsps", res.dsps, platform.budget_dsps)
    if res.luts > platform.budget_luts:
        raise ResourceOverflowError("luts", res.luts, platform.budget_luts)


def compile_kernel(ir, cfg, platform, build_type):
    """Lower *ir* for *platform*.

    ``sw_emu`` skips the resource check; ``hw_emu`` and ``hw`` enforce the
    platform budget.  A ``hw`` artifact only loads on its own platform.
    """
    if build_type not in BUILD_TYPES:
        raise ConfigError(f"unknown build type {build_type!r}")
    if cfg.platform != platform.platform:
        raise ConfigError(
            f"kernel config targets {cfg.platform!r} but the platform is {platform.platform!r}"
        )
    res = estimate_resources(ir)
    if build_type != "sw_emu":
        check_budget(res, platform)
    sched = schedule_pipeline(ir, cfg)
    clock = cfg.clock_mhz if cfg.clock_mhz is not None else platform.clock_mhz
    ir_text = render_kernel(ir)
    return KernelArtifact(
        kernel=ir.name,
        platform=platform.platform,
        build_type=build_type,
        clock_mhz=clock,
        depth=sched.depth,
        ii=sched.ii,
        dsps=res.dsps,
        luts=res.luts,
        inputs=ir.inputs,
        outputs=ir.outputs,
        content_hash=content_hash_of(ir_text, platform.platform, build_type, clock, sched.ii),
        ir_text=ir_text,
        schedule=sched.stage_start,
    )
