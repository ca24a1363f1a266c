"""Emulated acceleration backend: kernel DSL, scheduler and container."""

from .compiler import (
    KernelArtifact,
    PipelineSchedule,
    ResourceEstimate,
    compile_kernel,
    estimate_resources,
    schedule_pipeline,
)
from .container import decode_artifact, encode_artifact
from .ir import COSTS, KernelConfig, KernelIR, Stage, parse_config, parse_kernel, render_kernel

__all__ = [
    "COSTS", "KernelArtifact", "KernelConfig", "KernelIR", "PipelineSchedule",
    "ResourceEstimate", "Stage", "compile_kernel", "decode_artifact",
    "encode_artifact", "estimate_resources", "parse_config", "parse_kernel",
    "render_kernel", "schedule_pipeline",
]
