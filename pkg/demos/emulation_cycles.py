"""Functional and cycle-level emulation of small kernels.

The streaming model finishes n elements in depth + (n-1)*ii cycles.  The
fetch-compute-store baseline pays L+2 cycles per stage per element, so the
speedup climbs toward sum(L+2)/ii as n grows.
"""
import numpy as np

from accelbuild.backend import KernelConfig, compile_kernel, encode_artifact, parse_kernel
from accelbuild.firmware import PlatformDescriptor
from accelbuild.runtime import Device, load_artifact, run_functional, run_timed

board = PlatformDescriptor("kv260", "aarch64-accel-eabi", 200, 100000, 1000, 4000)
dev = Device(board)

saxpy = """\
kernel saxpy
in x i32
in y i32
out r i32
stage muli x =3 -> ax
stage add ax y -> r
"""

for ii in (1, 2):
    blob = encode_artifact(compile_kernel(parse_kernel(saxpy), KernelConfig("kv260", ii), board, "hw_emu"))
    k = load_artifact(dev, blob)
    print(f"saxpy ii={ii}: depth={k.artifact.depth} luts={k.artifact.luts} dsps={k.artifact.dsps}")
    for n in (1, 4, 16, 256, 1024):
        x = np.arange(n, dtype=np.int32)
        y = np.ones(n, dtype=np.int32)
        out, report = run_timed(k, {"x": x, "y": y})
        assert (out["r"] == run_functional(k, {"x": x, "y": y})["r"]).all()
        print("  " + report.format())

# Arithmetic wraps at the element width, like the hardware would.
k = load_artifact(dev, encode_artifact(compile_kernel(parse_kernel(saxpy), KernelConfig("kv260"), board, "sw_emu")))
print("\nwraparound:", run_functional(k, {"x": [2**30], "y": [2**30]})["r"].tolist())
