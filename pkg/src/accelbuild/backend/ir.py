"""Kernel DSL, its intermediate representation, and the op cost table.

A kernel is a straight-line dataflow program over integer streams::

    kernel chain3
    in x i32
    out y i32
    stage muli x =2 -> t0
    stage addi t0 =1 -> t1
    stage add t1 x -> y

Every stream is assigned exactly once.  The element type of a stage result is
the wider of its operand types; a declared output must agree with the type of
the stream it names.
"""

import re
from dataclasses import dataclass

from ..errors import ParseError
from ..workspace import check_identifier


@dataclass(frozen=True)
class OpCost:
    latency: int
    luts: int
    dsps: int


COSTS = {
    "add": OpCost(1, 8, 0),
    "sub": OpCost(1, 8, 0),
    "min": OpCost(1, 8, 0),
    "max": OpCost(1, 8, 0),
    "addi": OpCost(1, 8, 0),
    "copy": OpCost(1, 0, 0),
    "shri": OpCost(1, 4, 0),
    "mul": OpCost(3, 16, 1),
    "muli": OpCost(3, 16, 1),
}
BINARY_OPS = ("add", "sub", "mul", "min", "max")
UNARY_OPS = ("copy",)
IMMEDIATE_OPS = ("addi", "muli", "shri")
ELEMENT_TYPES = {"i32": 32, "i64": 64}

I64_MIN, I64_MAX = -(1 << 63), (1 << 63) - 1

STREAM_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_STAGE_RE = re.compile(r"^stage\s+(\S+)\s+(.*?)\s*->\s*(\S+)$")


@dataclass(frozen=True)
class Stage:
    op: str
    args: tuple  # operand stream names
    result: str
    imm: int | None = None

    @property
    def latency(self):
        return COSTS[self.op].latency


@dataclass(frozen=True)
class KernelIR:
    name: str
    inputs: tuple  # ((stream, type), ...)
    outputs: tuple
    stages: tuple

    def stream_types(self):
        types = dict(self.inputs)
        for s in self.stages:
            types[s.result] = max((types[a] for a in s.args), key=ELEMENT_TYPES.get)
        return types

    def producers(self):
        """Map stream name -> index of the stage that defines it."""
        return {s.result: i for i, s in enumerate(self.stages)}

    def passthrough_outputs(self):
        """Outputs that name an input directly; each gets an implicit copy."""
        ins = {name for name, _ in self.inputs}
        return [name for name, _ in self.outputs if name in ins]

    def effective_latencies(self):
        """Per-stage latencies including implicit pass-through copies."""
        copy = COSTS["copy"].latency
        return [s.latency for s in self.stages] + [copy] * len(self.passthrough_outputs())


def _check_stream(name, line):
    if not STREAM_RE.match(name):
        raise ParseError(f"invalid stream name {name!r}", line)
    return name


def _parse_immediate(token, line):
    if not re.match(r"^=-?\d+$", token):
        raise ParseError(f"expected an immediate like =3, got {token!r}", line)
    value = int(token[1:])
    if not I64_MIN <= value <= I64_MAX:
        raise ParseError(f"immediate {value} out of 64-bit range", line)
    return value


def _parse_stage(text, line, defined):
    m = _STAGE_RE.match(text)
    if not m:
        raise ParseError(f"expected 'stage <op> <args> -> <stream>', got {text!r}", line)
    op, argtext, result = m.groups()
    args = argtext.split()
    if op not in COSTS:
        raise ParseError(f"unknown op {op!r}", line)
    arity = 2 if op in BINARY_OPS else 1
    imm = None
    if op in IMMEDIATE_OPS:
        if len(args) != 2:
            raise ParseError(f"{op} takes one stream and one immediate", line)
        imm = _parse_immediate(args[1], line)
        if op == "shri" and not 0 <= imm <= 63:
            raise ParseError(f"shri amount {imm} outside [0, 63]", line)
        args = args[:1]
    elif len(args) != arity:
        raise ParseError(f"{op} takes {arity} stream operand(s), got {len(args)}", line)
    for a in args:
        if a.startswith("="):
            raise ParseError(f"{op} does not take an immediate", line)
        _check_stream(a, line)
        if a not in defined:
            raise ParseError(f"use-before-def {a}", line)
    _check_stream(result, line)
    if result in defined:
        raise ParseError(f"redefinition {result}", line)
    return Stage(op, tuple(args), result, imm)


def parse_kernel(text):
    name = None
    inputs, outputs, stages = [], [], []
    defined = {}  # stream -> type
    out_lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word = line.split()[0]
        if name is None:
            if word != "kernel":
                raise ParseError("first statement must be 'kernel <name>'", lineno)
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("expected 'kernel <name>'", lineno)
            name = check_identifier(parts[1], "kernel name", lineno)
            continue
        if word == "kernel":
            raise ParseError("duplicate kernel statement", lineno)
        if word in ("in", "out"):
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected '{word} <stream> <i32|i64>'", lineno)
            _, stream, etype = parts
            _check_stream(stream, lineno)
            if etype not in ELEMENT_TYPES:
                raise ParseError(f"unknown element type {etype!r}", lineno)
            if word == "in":
                if stream in defined:
                    raise ParseError(f"redefinition {stream}", lineno)
                defined[stream] = etype
                inputs.append((stream, etype))
            else:
                if stream in out_lines:
                    raise ParseError(f"duplicate output {stream}", lineno)
                out_lines[stream] = lineno
                outputs.append((stream, etype))
            continue
        if word == "stage":
            stage = _parse_stage(line, lineno, defined)
            defined[stage.result] = max((defined[a] for a in stage.args), key=ELEMENT_TYPES.get)
            stages.append(stage)
            continue
        raise ParseError(f"unknown statement {word!r}", lineno)
    if name is None:
        raise ParseError("empty kernel source")
    if not outputs:
        raise ParseError("kernel declares no outputs")
    for stream, etype in outputs:
        if stream not in defined:
            raise ParseError(f"undefined output {stream}", out_lines[stream])
        if defined[stream] != etype:
            raise ParseError(
                f"output {stream} declared {etype} but the stream is {defined[stream]}",
                out_lines[stream],
            )
    return KernelIR(name, tuple(inputs), tuple(outputs), tuple(stages))


def render_kernel(ir):
    """Canonical DSL text; parsing it gives back an equal IR."""
    lines = [f"kernel {ir.name}"]
    lines += [f"in {s} {t}" for s, t in ir.inputs]
    lines += [f"out {s} {t}" for s, t in ir.outputs]
    for st in ir.stages:
        args = list(st.args)
        if st.imm is not None:
            args.append(f"={st.imm}")
        lines.append(f"stage {st.op} {' '.join(args)} -> {st.result}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class KernelConfig:
    platform: str
    ii: int = 1
    clock_mhz: int | None = None


def _positive_int(value, key, line):
    if not re.match(r"^\d+$", value) or int(value) < 1:
        raise ParseError(f"{key} must be a positive integer, got {value!r}", line)
    return int(value)


def parse_config(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        if key not in ("platform", "ii", "clock-mhz"):
            raise ParseError(f"unknown config key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate config key {key!r}", lineno)
        if key == "platform":
            values[key] = check_identifier(value, "platform", lineno)
        else:
            values[key] = _positive_int(value, key, lineno)
    if "platform" not in values:
        raise ParseError("config is missing 'platform'")
    return KernelConfig(values["platform"], values.get("ii", 1), values.get("clock-mhz"))


def render_config(cfg):
    lines = [f"platform: {cfg.platform}", f"ii: {cfg.ii}"]
    if cfg.clock_mhz is not None:
        lines.append(f"clock-mhz: {cfg.clock_mhz}")
    return "\n".join(lines) + "\n"
