"""Firmware packages: platform descriptors, deployment and mixin generation.

Deploying a firmware package copies its descriptor, sysroot and rootfs into
``<ws>/acceleration/firmware/<platform>/`` and renders its mixin template into
``<ws>/.accel/mixins/<platform>.mixin``.  Retargeting a workspace means
swapping which firmware package sits in ``src/``.
"""

import hashlib
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    FirmwareIncompleteError,
    ParseError,
    PlatformConflictError,
)
from .mixins import render_mixin, render_template
from .workspace import check_identifier, firmware_dir

DESCRIPTOR_NAME = "platform.desc"
ROOTFS_NAME = "rootfs.img"
SYSROOT_NAME = "sysroot"
DEPLOY_STAMP = ".deployed"

_DESC_KEYS = ("platform", "triple", "clock-mhz", "budget-luts", "budget-dsps", "budget-bram-kb")


@dataclass(frozen=True)
class PlatformDescriptor:
    platform: str
    triple: str
    clock_mhz: int
    budget_luts: int
    budget_dsps: int
    budget_bram_kb: int


@dataclass(frozen=True)
class DeployedFirmware:
    platform: str
    dir: Path
    descriptor: PlatformDescriptor
    sysroot_dir: Path
    generated_mixin: str
    changed: bool = field(default=False, compare=False)


def load_platform(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        if key not in _DESC_KEYS:
            raise ParseError(f"unknown descriptor key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate descriptor key {key!r}", lineno)
        if key == "platform":
            check_identifier(value, "platform", lineno)
        elif key == "triple":
            if not value or any(c.isspace() for c in value):
                raise ParseError(f"invalid target triple {value!r}", lineno)
        else:
            if not value.isdigit():
                raise ParseError(f"{key} must be a nonnegative integer, got {value!r}", lineno)
            if key == "clock-mhz" and int(value) == 0:
                raise ParseError("clock-mhz must be positive", lineno)
            value = int(value)
        values[key] = value
    missing = [k for k in _DESC_KEYS if k not in values]
    if missing:
        raise ParseError(f"platform descriptor missing {', '.join(missing)}")
    return PlatformDescriptor(
        platform=values["platform"],
        triple=values["triple"],
        clock_mhz=values["clock-mhz"],
        budget_luts=values["budget-luts"],
        budget_dsps=values["budget-dsps"],
        budget_bram_kb=values["budget-bram-kb"],
    )


def render_platform(d):
    return (
        f"platform: {d.platform}\n"
        f"triple: {d.triple}\n"
        f"clock-mhz: {d.clock_mhz}\n"
        f"budget-luts: {d.budget_luts}\n"
        f"budget-dsps: {d.budget_dsps}\n"
        f"budget-bram-kb: {d.budget_bram_kb}\n"
    )


def _tree_files(root):
    """Sorted (posix relpath, bytes) pairs for every file under *root*."""
    root = Path(root)
    out = []
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out.append((path.relative_to(root).as_posix(), path.read_bytes()))
    return out


def _tree_digest(files):
    h = hashlib.sha256()
    for rel, data in files:
        h.update(rel.encode("utf-8") + b"\0" + str(len(data)).encode() + b"\0" + data)
    return h.hexdigest()


def _desired_tree(pkg):
    """Files the deployed firmware directory should contain (minus the stamp)."""
    spec = pkg.firmware
    base = Path(pkg.path)
    artifacts = [
        ("descriptor", base / spec.descriptor, "file"),
        ("sysroot", base / spec.sysroot, "dir"),
        ("rootfs", base / spec.rootfs, "file"),
        ("mixin-template", base / spec.mixin_template, "file"),
    ]
    for label, path, want in artifacts:
        ok = path.is_file() if want == "file" else path.is_dir()
        if not ok:
            raise FirmwareIncompleteError(label, path)
    files = [(DESCRIPTOR_NAME, (base / spec.descriptor).read_bytes()),
             (ROOTFS_NAME, (base / spec.rootfs).read_bytes())]
    files += [(f"{SYSROOT_NAME}/{rel}", data) for rel, data in _tree_files(base / spec.sysroot)]
    return sorted(files)


def _read_stamp(target):
    stamp = target / DEPLOY_STAMP
    if not stamp.is_file():
        return None, None
    owner, _, digest = stamp.read_text(encoding="utf-8").strip().partition("\t")
    return owner, digest


def _write_atomic(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _generate_mixin(pkg, ws, target):
    spec = pkg.firmware
    template = (Path(pkg.path) / spec.mixin_template).read_text(encoding="utf-8")
    mixin = render_template(template, {
        "WORKSPACE": str(ws.root),
        "PLATFORM": spec.platform,
        "FIRMWARE_DIR": str(target),
    })
    if mixin.get("platform") != spec.platform:
        raise ParseError(f"mixin template of {pkg.name} must set 'platform: ${{PLATFORM}}'")
    if mixin.get("firmware-dir") != str(target):
        raise ParseError(f"mixin template of {pkg.name} must set 'firmware-dir: ${{FIRMWARE_DIR}}'")
    return mixin


def deploy_firmware(pkg, ws):
    """Deploy one firmware package into *ws*; a no-op when already current."""
    if pkg.kind != "firmware" or pkg.firmware is None:
        raise ParseError(f"{pkg.name} is not a firmware package")
    spec = pkg.firmware
    files = _desired_tree(pkg)
    descriptor = load_platform(dict(files)[DESCRIPTOR_NAME].decode("utf-8"))
    if descriptor.platform != spec.platform:
        raise ParseError(
            f"{pkg.name}: manifest platform {spec.platform!r} but descriptor says {descriptor.platform!r}"
        )
    target = firmware_dir(ws, spec.platform)
    mixin = _generate_mixin(pkg, ws, target)
    digest = _tree_digest(files)

    changed = False
    owner, current = _read_stamp(target)
    if current != digest or not target.is_dir():
        if owner not in (None, pkg.name) and owner in ws.names() and current is not None:
            raise PlatformConflictError(
                f"platform {spec.platform} is already deployed by {owner} with different content"
            )
        target.parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(dir=target.parent, prefix=f".{spec.platform}."))
        for rel, data in files:
            dest = staging / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(data)
        (staging / SYSROOT_NAME).mkdir(exist_ok=True)
        (staging / DEPLOY_STAMP).write_text(f"{pkg.name}\t{digest}\n", encoding="utf-8")
        if target.exists():
            shutil.rmtree(target)
        os.replace(staging, target)
        changed = True
    elif owner != pkg.name and owner not in ws.names():
        # identical content left behind by a package that was swapped out
        (target / DEPLOY_STAMP).write_text(f"{pkg.name}\t{digest}\n", encoding="utf-8")
        changed = True

    mixin_path = ws.mixin_dir / f"{spec.platform}.mixin"
    text = render_mixin(mixin).encode("utf-8")
    if not mixin_path.is_file() or mixin_path.read_bytes() != text:
        _write_atomic(mixin_path, text)
        changed = True

    return DeployedFirmware(
        platform=spec.platform,
        dir=target,
        descriptor=descriptor,
        sysroot_dir=target / SYSROOT_NAME,
        generated_mixin=mixin.name,
        changed=changed,
    )


def deployed_digest(pkg):
    """Digest deploy_firmware would record for *pkg*, or None if incomplete."""
    try:
        return _tree_digest(_desired_tree(pkg))
    except FirmwareIncompleteError:
        return None


def is_deployed(pkg, ws):
    """True when *pkg*'s current content is what sits in its firmware dir."""
    target = firmware_dir(ws, pkg.firmware.platform)
    _, current = _read_stamp(target)
    return current is not None and current == deployed_digest(pkg)


def load_deployed(ws, platform):
    path = firmware_dir(ws, platform) / DESCRIPTOR_NAME
    return load_platform(path.read_text(encoding="utf-8"))


def list_platforms(ws):
    root = ws.firmware_root
    if not root.is_dir():
        return []
    out = []
    for child in sorted(root.iterdir()):
        desc = child / DESCRIPTOR_NAME
        if child.name.startswith(".") or not desc.is_file():
            continue
        try:
            out.append(load_platform(desc.read_text(encoding="utf-8")))
        except (ParseError, UnicodeDecodeError) as exc:
            raise ParseError(f"{desc}: {exc}") from None
    return sorted(out, key=lambda d: d.platform)
