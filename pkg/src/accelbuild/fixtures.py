"""End-to-end smoke harness over the reference workspace in ``fixtures/``."""

import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AccelError, ResourceOverflowError
from .executor import build
from .firmware import load_deployed
from .runtime import Device, load_artifact, run_functional
from .workspace import discover_workspace

REAL_PLATFORMS = ("zcu102", "zcu104", "kv260")
VADD_EXPECTED = {"type": "hw", "depth": 1, "ii": 1, "dsps": 0, "luts": 8}


class FixtureError(AccelError):
    code = "E_FIXTURE"


def fixture_root():
    env = os.environ.get("ACCEL_FIXTURES")
    return Path(env) if env else Path(__file__).resolve().parents[2] / "fixtures"


def copy_fixture(dest, name="ws1"):
    """Copy a fixture workspace to *dest* (which must not exist) and return it."""
    dest = Path(dest)
    shutil.copytree(fixture_root() / name, dest)
    return dest


def cross_flags(platform):
    """The flag set of the two-phase walkthrough's second invocation."""
    return {
        "build-base": f"build-{platform}",
        "install-base": f"install-{platform}",
        "merge-install": True,
    }


@dataclass
class FixtureReport:
    vadd: dict = field(default_factory=dict)  # platform -> metadata
    vadd_output: list = field(default_factory=list)
    overflow: tuple | None = None


def _expect(cond, message):
    if not cond:
        raise FixtureError(message)


def verify_fixture(root, platforms=REAL_PLATFORMS):
    """Phase A, Phase B per platform, then run vadd; raise on first divergence."""
    root = Path(root)
    ws = discover_workspace(root)
    report = FixtureReport()
    native = build(ws)
    _expect(native.ok, f"native build failed: {native.lines()}")

    for p in platforms:
        r = build(ws, [p], cross_flags(p))
        _expect(r.ok, f"cross build for {p} failed: {r.lines()}")
        path = root / f"build-{p}" / "acceleration_examples" / "kernels" / "vadd.akbin"
        _expect(path.is_file(), f"missing {path}")
        kernel = load_artifact(Device(load_deployed(ws, p)), path.read_bytes())
        meta = kernel.artifact.metadata()
        for key, want in {**VADD_EXPECTED, "platform": p}.items():
            _expect(meta[key] == want, f"{p}: vadd {key} is {meta[key]!r}, expected {want!r}")
        out = run_functional(kernel, {"a": [1, 2, 3], "b": [4, 5, 6]})["c"].tolist()
        _expect(out == [5, 7, 9], f"{p}: vadd([1,2,3],[4,5,6]) gave {out}")
        report.vadd[p] = meta
        report.vadd_output = out

    if any(pkg.kind == "firmware" and pkg.firmware.platform == "tiny" for pkg in ws.packages):
        r = build(ws, ["tiny"], cross_flags("tiny"))
        res = r.packages["acceleration_examples"]
        _expect(res.status == "failed" and ResourceOverflowError.code in (res.error or ""),
                f"tiny platform did not overflow: {res.error}")
        report.overflow = res.error
    return report
