"""Overlay workspace discovery and the ``package.accel`` manifest format.

A workspace is a directory with a ``src/`` tree.  Every directory below
``src/`` that holds a ``package.accel`` file is a package root; discovery does
not look inside a package root for further packages.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

from .errors import DuplicatePackageError, NoSrcError, ParseError

MANIFEST_NAME = "package.accel"
BUILD_TYPES = ("sw_emu", "hw_emu", "hw")
KINDS = ("source", "firmware")

IDENT_RE = re.compile(r"^[a-z0-9_]+$")
VERSION_RE = re.compile(r"^\d+\.\d+\.\d+$")


def is_identifier(text):
    return bool(text) and IDENT_RE.match(text) is not None


def check_identifier(text, what, line=None):
    if not is_identifier(text):
        raise ParseError(f"{what} must be lowercase alphanumeric/underscore, got {text!r}", line)
    return text


def check_relpath(text, what, line=None):
    """Validate a package- or workspace-relative path and return it unchanged."""
    if not text:
        raise ParseError(f"{what}: empty path", line)
    if text.startswith(("/", "\\")) or re.match(r"^[A-Za-z]:", text):
        raise ParseError(f"{what}: absolute path {text!r} not allowed", line)
    if ".." in PurePosixPath(text.replace("\\", "/")).parts:
        raise ParseError(f"{what}: path {text!r} escapes its root", line)
    return text


@dataclass(frozen=True)
class KernelDecl:
    name: str
    file: str
    config: str
    build_type: str
    include: tuple = ()
    package_flag: bool = False


@dataclass(frozen=True)
class FirmwareSpec:
    platform: str
    descriptor: str
    sysroot: str
    rootfs: str
    mixin_template: str


@dataclass(frozen=True)
class PackageManifest:
    name: str
    kind: str
    version: str = "0.0.0"
    depends: tuple = ()
    kernels: tuple = ()
    firmware: FirmwareSpec | None = None
    # Where the manifest was found; not part of the manifest's identity.
    path: Path | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Workspace:
    root: Path
    packages: tuple

    @property
    def src_dir(self):
        return self.root / "src"

    @property
    def mixin_dir(self):
        return self.root / ".accel" / "mixins"

    @property
    def firmware_root(self):
        return self.root / "acceleration" / "firmware"

    def package(self, name):
        for pkg in self.packages:
            if pkg.name == name:
                return pkg
        raise KeyError(name)

    def names(self):
        return [pkg.name for pkg in self.packages]


def firmware_dir(ws, platform):
    """Deployment directory for *platform*; computed, never touches the disk."""
    if not isinstance(platform, str) or not is_identifier(platform):
        raise ParseError(f"invalid platform identifier {platform!r}")
    return ws.root / "acceleration" / "firmware" / platform


# -- manifest parsing ---------------------------------------------------------

_TOP_KEYS = {"package", "version", "kind", "depends", "kernel", "firmware"}
_KERNEL_KEYS = {"name", "file", "config", "include", "type", "package"}
_FIRMWARE_KEYS = {"platform", "descriptor", "sysroot", "rootfs", "mixin-template"}


def _split_list(value):
    return [item.strip() for item in value.split(",")] if value.strip() else []


def _logical_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            yield lineno, line


def _key_value(line, lineno):
    key, sep, value = line.partition(":")
    if not sep:
        raise ParseError(f"expected 'key: value', got {line.strip()!r}", lineno)
    key = key.strip()
    if not key or " " in key:
        raise ParseError(f"malformed key {key!r}", lineno)
    return key, value.strip()


def _build_kernel(entries, lineno):
    missing = [k for k in ("name", "file", "config", "type") if k not in entries]
    if missing:
        raise ParseError(f"kernel block missing {', '.join(missing)}", lineno)
    name = check_identifier(entries["name"][0], "kernel name", entries["name"][1])
    file = check_relpath(entries["file"][0], "kernel file", entries["file"][1])
    config = check_relpath(entries["config"][0], "kernel config", entries["config"][1])
    build_type, type_line = entries["type"]
    if build_type not in BUILD_TYPES:
        raise ParseError(f"invalid build type {build_type!r} (expected one of {', '.join(BUILD_TYPES)})", type_line)
    include = ()
    if "include" in entries:
        value, line = entries["include"]
        include = tuple(check_relpath(p, "include", line) for p in _split_list(value))
    package_flag = False
    if "package" in entries:
        value, line = entries["package"]
        if value not in ("true", "false"):
            raise ParseError(f"package flag must be true or false, got {value!r}", line)
        package_flag = value == "true"
    return KernelDecl(name, file, config, build_type, include, package_flag)


def _build_firmware(entries, lineno):
    missing = sorted(_FIRMWARE_KEYS - entries.keys())
    if missing:
        raise ParseError(f"firmware block missing {', '.join(missing)}", lineno)
    platform = check_identifier(entries["platform"][0], "firmware platform", entries["platform"][1])
    paths = {}
    for key in ("descriptor", "sysroot", "rootfs", "mixin-template"):
        value, line = entries[key]
        paths[key] = check_relpath(value, key, line)
    return FirmwareSpec(platform, paths["descriptor"], paths["sysroot"], paths["rootfs"], paths["mixin-template"])


def parse_manifest(text, path=None):
    """Parse ``package.accel`` text into a :class:`PackageManifest`."""
    top = {}
    kernels = []
    firmware = None
    block = None  # (kind, entries, opening line)

    def close_block():
        nonlocal firmware
        if block is None:
            return
        kind, entries, opened = block
        if kind == "kernel":
            kernels.append((_build_kernel(entries, opened), opened))
        else:
            firmware = (_build_firmware(entries, opened), opened)

    for lineno, line in _logical_lines(text):
        indent = len(line) - len(line.lstrip(" "))
        if "\t" in line[: len(line) - len(line.lstrip())]:
            raise ParseError("tabs are not allowed for indentation", lineno)
        if indent:
            if indent != 2:
                raise ParseError(f"block members are indented by exactly two spaces, got {indent}", lineno)
            if block is None:
                raise ParseError("indented line outside a kernel/firmware block", lineno)
            key, value = _key_value(line, lineno)
            allowed = _KERNEL_KEYS if block[0] == "kernel" else _FIRMWARE_KEYS
            if key not in allowed:
                raise ParseError(f"unknown {block[0]} key {key!r}", lineno)
            if key in block[1]:
                raise ParseError(f"duplicate {block[0]} key {key!r}", lineno)
            block[1][key] = (value, lineno)
            continue

        close_block()
        block = None
        key, value = _key_value(line, lineno)
        if key not in _TOP_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in ("kernel", "firmware"):
            if value:
                raise ParseError(f"'{key}:' opens a block and takes no value", lineno)
            if key == "firmware" and (firmware is not None or "firmware" in top):
                raise ParseError("duplicate firmware block", lineno)
            if key == "firmware":
                top["firmware"] = ("", lineno)
            block = (key, {}, lineno)
            continue
        if key in top:
            raise ParseError(f"duplicate key {key!r}", lineno)
        top[key] = (value, lineno)
    close_block()

    for required in ("package", "kind"):
        if required not in top:
            raise ParseError(f"missing required key {required!r}")
    name = check_identifier(top["package"][0], "package name", top["package"][1])
    kind, kind_line = top["kind"]
    if kind not in KINDS:
        raise ParseError(f"invalid kind {kind!r} (expected source or firmware)", kind_line)
    version = "0.0.0"
    if "version" in top:
        version, line = top["version"]
        if not VERSION_RE.match(version):
            raise ParseError(f"version must be a dotted triple, got {version!r}", line)
    depends = ()
    if "depends" in top:
        value, line = top["depends"]
        names = _split_list(value)
        for dep in names:
            check_identifier(dep, "dependency", line)
        if len(set(names)) != len(names):
            raise ParseError("duplicate dependency", line)
        if name in names:
            raise ParseError(f"package {name} depends on itself", line)
        depends = tuple(names)

    if kind == "firmware":
        if kernels:
            raise ParseError("firmware packages cannot declare kernels", kernels[0][1])
        if firmware is None:
            raise ParseError("kind firmware requires a firmware block")
    elif firmware is not None:
        raise ParseError("firmware block requires kind firmware", firmware[1])
    seen = set()
    for decl, line in kernels:
        if decl.name in seen:
            raise ParseError(f"duplicate kernel name {decl.name!r}", line)
        seen.add(decl.name)

    return PackageManifest(
        name=name,
        kind=kind,
        version=version,
        depends=depends,
        kernels=tuple(decl for decl, _ in kernels),
        firmware=firmware[0] if firmware else None,
        path=path,
    )


def render_manifest(m):
    """Canonical text form; ``parse_manifest(render_manifest(m)) == m``."""
    lines = [f"package: {m.name}", f"version: {m.version}", f"kind: {m.kind}"]
    if m.depends:
        lines.append("depends: " + ", ".join(m.depends))
    for k in m.kernels:
        lines += ["kernel:", f"  name: {k.name}", f"  file: {k.file}", f"  config: {k.config}"]
        if k.include:
            lines.append("  include: " + ", ".join(k.include))
        lines.append(f"  type: {k.build_type}")
        lines.append(f"  package: {'true' if k.package_flag else 'false'}")
    if m.firmware is not None:
        fw = m.firmware
        lines += [
            "firmware:",
            f"  platform: {fw.platform}",
            f"  descriptor: {fw.descriptor}",
            f"  sysroot: {fw.sysroot}",
            f"  rootfs: {fw.rootfs}",
            f"  mixin-template: {fw.mixin_template}",
        ]
    return "\n".join(lines) + "\n"


# -- discovery ------------------------------------------------------------------

def _package_roots(directory):
    if (directory / MANIFEST_NAME).is_file():
        yield directory
        return
    for child in sorted(p for p in directory.iterdir() if p.is_dir() and not p.name.startswith(".")):
        yield from _package_roots(child)


def discover_workspace(root):
    root = Path(root)
    src = root / "src"
    if not src.is_dir():
        raise NoSrcError(f"{root} has no src/ directory")
    packages = []
    seen = {}
    for child in sorted(p for p in src.iterdir() if p.is_dir() and not p.name.startswith(".")):
        for pkg_dir in _package_roots(child):
            manifest_path = pkg_dir / MANIFEST_NAME
            try:
                text = manifest_path.read_text(encoding="utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"{manifest_path}: not UTF-8 ({exc})") from None
            try:
                manifest = parse_manifest(text, path=pkg_dir)
            except ParseError as exc:
                raise ParseError(f"{manifest_path}: {exc.args[0]}") from None
            if manifest.name in seen:
                raise DuplicatePackageError(
                    f"package {manifest.name!r} declared in both {seen[manifest.name]} and {pkg_dir}"
                )
            seen[manifest.name] = pkg_dir
            packages.append(manifest)
    return Workspace(root=root, packages=tuple(packages))
