import random
from fractions import Fraction

import numpy as np
import pytest

from accelbuild.backend import KernelConfig, compile_kernel, encode_artifact, parse_kernel
from accelbuild.errors import PlatformMismatchError, SignatureError
from accelbuild.firmware import PlatformDescriptor
from accelbuild.runtime import Device, load_artifact, run_functional, run_timed, sequential_cycle_model

from oracles import event_driven_cycles, random_inputs, random_kernel, reference_eval, sequential_cycles

VADD = "kernel vadd\nin a i32\nin b i32\nout c i32\nstage add a b -> c\n"
CHAIN = "kernel chain\nin a i32\nin b i32\nout y i32\nstage add a b -> t\nstage mul t a -> y\n"
ZCU102 = PlatformDescriptor("zcu102", "aarch64-accel-eabi", 200, 120000, 1200, 4000)
KV260 = PlatformDescriptor("kv260", "aarch64-accel-eabi", 200, 100000, 1000, 4000)
WIDE = PlatformDescriptor("p", "t", 100, 10**9, 10**9, 1)


def artifact_bytes(text, platform=ZCU102, build_type="hw", ii=1):
    cfg = KernelConfig(platform.platform, ii)
    return encode_artifact(compile_kernel(parse_kernel(text), cfg, platform, build_type))


def loaded(text, platform=ZCU102, build_type="hw", ii=1):
    return load_artifact(Device(platform), artifact_bytes(text, platform, build_type, ii))


def test_vadd_functional():
    out = run_functional(loaded(VADD), {"a": [1, 2, 3], "b": [4, 5, 6]})
    assert out["c"].tolist() == [5, 7, 9]
    assert out["c"].dtype == np.int32


def test_empty_input():
    k = loaded(VADD)
    assert run_functional(k, {"a": [], "b": []})["c"].tolist() == []
    out, report = run_timed(k, {"a": [], "b": []})
    assert out["c"].tolist() == [] and report.pipeline_cycles == 0 and report.speedup == 0


def test_immediates_match_reference():
    text = "kernel s\nin x i32\nout y i32\nstage muli x =3 -> t\nstage addi t =1 -> y\n"
    k = loaded(text)
    assert run_functional(k, {"x": [0, 1, 2]})["y"].tolist() == [1, 4, 7]
    assert reference_eval(k.ir, {"x": [0, 1, 2]}) == {"y": [1, 4, 7]}


def test_wraparound_and_logical_shift():
    text = "kernel w\nin x i32\nout y i32\nout z i32\nstage addi x =1 -> y\nstage shri x =28 -> z\n"
    out = run_functional(loaded(text), {"x": [2**31 - 1, -1]})
    assert out["y"].tolist() == [-(2**31), 0]
    assert out["z"].tolist() == [7, 15]


def test_timed_vadd():
    out, report = run_timed(loaded(VADD), {"a": list(range(8)), "b": [1] * 8})
    assert out["c"].tolist() == list(range(1, 9))
    assert (report.n, report.pipeline_cycles, report.sequential_cycles) == (8, 8, 24)
    assert report.speedup == 3


def test_timed_chain():
    k = loaded(CHAIN)
    _, report = run_timed(k, {"a": [2] * 100, "b": [3] * 100})
    assert report.pipeline_cycles == 4 + 99 == event_driven_cycles(k.ir, 1, 100)
    _, one = run_timed(k, {"a": [1], "b": [1]})
    assert one.pipeline_cycles == 4


@pytest.mark.parametrize("text, n, expected", [
    (VADD, 8, 24),
    ("kernel m\nin x i32\nout y i32\nstage mul x x -> y\n", 3, 15),
    (CHAIN, 10, 80),
])
def test_sequential_model(text, n, expected):
    ir = parse_kernel(text)
    assert sequential_cycle_model(ir, n) == expected == sequential_cycles(ir, n)


def test_report_format():
    _, report = run_timed(loaded(CHAIN), {"a": [1] * 3, "b": [1] * 3})
    # depth 4, n 3: 6 cycles; sequential 3 * (3 + 5) = 24
    assert report.format() == "n=3 pipeline=6 sequential=24 speedup=4.000 est_us=0.030"
    _, report = run_timed(loaded(CHAIN), {"a": [1] * 2, "b": [1] * 2})
    assert report.speedup == Fraction(16, 5)
    assert report.format().endswith("speedup=3.200 est_us=0.025")


def test_hw_artifact_needs_matching_platform():
    data = artifact_bytes(VADD)
    with pytest.raises(PlatformMismatchError):
        load_artifact(Device(KV260), data)
    # emulation builds are not tied to the board
    load_artifact(Device(KV260), artifact_bytes(VADD, build_type="hw_emu"))


def test_swap_keeps_buffers():
    dev = Device(ZCU102)
    load_artifact(dev, artifact_bytes(VADD))
    dev.buffer_pool["scratch"] = np.arange(16, dtype=np.int64)
    before = dev.buffer_pool["scratch"].tobytes()
    k = load_artifact(dev, artifact_bytes(CHAIN))
    assert dev.loaded is k and k.artifact.kernel == "chain"
    assert dev.buffer_pool["scratch"].tobytes() == before


@pytest.mark.parametrize("inputs, fragment", [
    ({"a": [1]}, "missing"),
    ({"a": [1], "b": [1], "z": [1]}, "unexpected"),
    ({"a": [1, 2], "b": [1]}, "different lengths"),
    ({"a": [2**31], "b": [0]}, "does not fit"),
])
def test_signature_errors(inputs, fragment):
    k = loaded(VADD)
    for run in (run_functional, run_timed):
        with pytest.raises(SignatureError, match=fragment):
            run(k, inputs)


def test_random_kernels_agree_with_oracles():
    rng = random.Random(5)
    for _ in range(150):
        text, ii = random_kernel(rng)
        k = loaded(text, WIDE, rng.choice(["sw_emu", "hw_emu"]), ii)
        inputs = random_inputs(rng, k.ir, max_n=24)
        n = len(next(iter(inputs.values())))
        expected = reference_eval(k.ir, inputs)
        fun = run_functional(k, inputs)
        timed, report = run_timed(k, inputs)
        for name in expected:
            assert fun[name].tolist() == expected[name] == timed[name].tolist()
        assert report.pipeline_cycles == event_driven_cycles(k.ir, ii, n)
        if n:
            assert report.pipeline_cycles == k.artifact.depth + (n - 1) * ii
