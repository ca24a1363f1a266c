"""Two-phase build orchestration.

Phase A (native, no platform in the configuration) builds source packages
for the host, deploys firmware packages and generates their mixins.  Phase B
(cross, with a platform mixin) stages every source package into the
platform's own build/install bases and compiles declared kernels.

Packages are stamped with a content hash per (package, platform); a package
is rebuilt when its own hash changed or any of its dependencies is rebuilt.
"""

import enum
import hashlib
import logging
import os
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import TOOL_VERSION
from .backend import compile_kernel, encode_artifact, parse_config, parse_kernel
from .errors import (
    AccelError,
    AccelIOError,
    ConfigError,
    FirmwareIncompleteError,
    LockedError,
    NoFirmwareError,
    PhaseOrderError,
    UnknownMixinError,
)
from .firmware import DESCRIPTOR_NAME, SYSROOT_NAME, deploy_firmware, is_deployed, load_platform
from .graph import build_graph, dirty_set, schedule_waves
from .mixins import HOST, load_registry, merge_mixins, resolve_mixin
from .workspace import render_manifest

log = logging.getLogger(__name__)

STAMP_FILE = ".accel-stamps"
LOCK_FILE = ".accel-lock"
TARGET_STAMP = "target.stamp"
INSTALL_MANIFEST = "files.manifest"
BACKENDS_MARKER = Path(".accel") / "backends"


class Phase(str, enum.Enum):
    NATIVE = "native"
    CROSS = "cross"


class Action(str, enum.Enum):
    HOST_BUILD = "host_build"
    DEPLOY_FIRMWARE = "deploy_firmware"
    CROSS_BUILD = "cross_build"
    COMPILE_KERNELS = "compile_kernels"
    SKIP_UNCHANGED = "skip_unchanged"


@dataclass(frozen=True)
class PackageStep:
    name: str
    actions: tuple
    input_hash: str


@dataclass(frozen=True)
class BuildPlan:
    phase: Phase
    config: object
    waves: tuple
    steps: dict
    graph: object

    def actions(self, name):
        return self.steps[name].actions


@dataclass
class KernelResult:
    package: str
    name: str
    path: Path
    installed: Path | None
    metadata: dict


@dataclass
class PackageResult:
    name: str
    actions: tuple
    status: str  # built | skipped | failed
    input_hash: str
    error: str | None = None
    kernels: list = field(default_factory=list)
    exception: Exception | None = field(default=None, repr=False, compare=False)


@dataclass
class BuildReport:
    phase: Phase
    platform: str
    packages: dict
    elapsed_s: float = 0.0

    @property
    def ok(self):
        return all(r.status != "failed" for r in self.packages.values())

    def with_status(self, status):
        return {name for name, r in self.packages.items() if r.status == status}

    @property
    def rebuilt(self):
        return self.with_status("built")

    @property
    def kernels(self):
        return [k for r in self.packages.values() for k in r.kernels]

    def lines(self, root=None):
        """Report lines; artifact paths are shown relative to *root* when given."""
        out = []
        for name in sorted(self.packages):
            r = self.packages[name]
            acts = ",".join(a.value for a in r.actions)
            line = f"{name}\t{acts}\t{r.status}"
            if r.error:
                line += f"\t{r.error}"
            out.append(line)
        for k in sorted(self.kernels, key=lambda k: (k.package, k.name)):
            m = k.metadata
            path = k.path
            if root is not None and k.path.is_relative_to(root):
                path = k.path.relative_to(root).as_posix()
            out.append(
                f"kernel {k.package}/{k.name}\t{path}\ttype={m['type']} platform={m['platform']} "
                f"depth={m['depth']} ii={m['ii']} dsps={m['dsps']} luts={m['luts']}"
            )
        return out


class StampStore:
    """(package, platform) -> input hash of the last successful build."""

    def __init__(self, path):
        self.path = Path(path)
        self.entries = {}
        if self.path.is_file():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                parts = line.split("\t")
                if len(parts) == 3:
                    self.entries[(parts[0], parts[1])] = parts[2]

    def get(self, package, platform):
        return self.entries.get((package, platform))

    def set(self, package, platform, digest):
        self.entries[(package, platform)] = digest

    def discard(self, package, platform):
        self.entries.pop((package, platform), None)

    def save(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        text = "".join(f"{p}\t{plat}\t{h}\n" for (p, plat), h in sorted(self.entries.items()))
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, self.path)


def resolve_base(ws, path):
    path = Path(path)
    return path if path.is_absolute() else ws.root / path


def platform_key(cfg):
    return cfg.platform if cfg.platform is not None else HOST


def _firmware_providers(ws, platform):
    return [p.name for p in ws.packages if p.kind == "firmware" and p.firmware.platform == platform]


def configure(ws, mixin_names=(), cli=None):
    """Resolve ``--mixin`` names against the generated registry and merge.

    A mixin that is missing while a firmware package for that platform sits
    in ``src/`` means Phase A has not run yet.
    """
    registry = load_registry(ws.mixin_dir)
    mixins = []
    for name in mixin_names:
        try:
            mixins.append(resolve_mixin(name, registry))
        except UnknownMixinError as exc:
            if _firmware_providers(ws, name):
                raise PhaseOrderError(
                    f"mixin {name!r} is generated by the native build; run 'build' without --mixin first"
                ) from None
            raise NoFirmwareError(name, exc.known) from None
    return merge_mixins(mixins, dict(cli or {}))


def _package_files(pkg):
    root = Path(pkg.path)
    try:
        return [
            (p.relative_to(root).as_posix(), p.read_bytes())
            for p in sorted(root.rglob("*"), key=lambda p: p.relative_to(root).as_posix())
            if p.is_file()
        ]
    except OSError as exc:
        raise AccelIOError(f"{pkg.name}: {exc}") from None


def content_hash(pkg, ws, cfg):
    h = hashlib.sha256()

    def put(label, data):
        if isinstance(data, str):
            data = data.encode("utf-8")
        h.update(label.encode("utf-8") + b"\0" + str(len(data)).encode() + b"\0" + data)

    put("tool", TOOL_VERSION)
    put("manifest", render_manifest(pkg))
    for rel, data in _package_files(pkg):
        put("file:" + rel, data)
    relevant = cfg.as_entries()
    for key in ("platform", "target-triple", "kernel-type", "clock-mhz", "merge-install"):
        put("cfg:" + key, relevant.get(key, ""))
    if pkg.kernels and cfg.platform is not None:
        desc = resolve_base(ws, cfg.firmware_dir) / DESCRIPTOR_NAME
        try:
            put("descriptor", desc.read_bytes())
        except OSError as exc:
            raise AccelIOError(f"cannot read platform descriptor: {exc}") from None
    return h.hexdigest()


def _check_cross_ready(ws, cfg):
    desc = resolve_base(ws, cfg.firmware_dir) / DESCRIPTOR_NAME
    if desc.is_file():
        return
    if _firmware_providers(ws, cfg.platform):
        raise PhaseOrderError(
            f"firmware for {cfg.platform} is not deployed; run the native build before cross-building"
        )
    raise NoFirmwareError(cfg.platform)


def plan_build(ws, cfg, selected=None):
    graph = build_graph(ws.packages)
    if selected:
        unknown = sorted(set(selected) - graph.nodes)
        if unknown:
            raise ConfigError(f"unknown package(s) selected: {', '.join(unknown)}")
        graph = graph.restrict(selected)
    phase = Phase.CROSS if cfg.is_cross else Phase.NATIVE
    if phase is Phase.CROSS:
        _check_cross_ready(ws, cfg)

    stamps = StampStore(resolve_base(ws, cfg.build_base) / STAMP_FILE)
    key = platform_key(cfg)
    hashes = {}
    changed = set()
    for pkg in ws.packages:
        if pkg.name not in graph.nodes:
            continue
        hashes[pkg.name] = content_hash(pkg, ws, cfg)
        if pkg.kind == "firmware":
            if phase is Phase.NATIVE and not _firmware_current(pkg, ws):
                changed.add(pkg.name)
        elif stamps.get(pkg.name, key) != hashes[pkg.name]:
            changed.add(pkg.name)
    rebuild = dirty_set(graph, changed)

    steps = {}
    for pkg in ws.packages:
        if pkg.name not in graph.nodes:
            continue
        if pkg.name not in rebuild or (phase is Phase.CROSS and pkg.kind == "firmware"):
            actions = (Action.SKIP_UNCHANGED,)
        elif pkg.kind == "firmware":
            actions = (Action.DEPLOY_FIRMWARE,)
        elif phase is Phase.NATIVE:
            actions = (Action.HOST_BUILD,)
        elif pkg.kernels:
            actions = (Action.CROSS_BUILD, Action.COMPILE_KERNELS)
        else:
            actions = (Action.CROSS_BUILD,)
        steps[pkg.name] = PackageStep(pkg.name, actions, hashes[pkg.name])
    waves = tuple(schedule_waves(graph))
    return BuildPlan(phase, cfg, waves, steps, graph)


def _firmware_current(pkg, ws):
    mixin = ws.mixin_dir / f"{pkg.firmware.platform}.mixin"
    return is_deployed(pkg, ws) and mixin.is_file()


# -- execution --------------------------------------------------------------------

class _Lock:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockedError(f"another build holds {self.path}") from None
        with os.fdopen(fd, "w") as fh:
            fh.write(f"{os.getpid()}\n")
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


def _install_path(pkg_name, rel, merge):
    prefix = "" if merge else f"{pkg_name}/"
    if rel.startswith("include/"):
        return prefix + rel
    return f"{prefix}share/{pkg_name}/{rel}"


def _manifest_rel(pkg_name, merge):
    return _install_path(pkg_name, INSTALL_MANIFEST, merge)


class _Runner:
    def __init__(self, plan, ws):
        self.plan = plan
        self.ws = ws
        self.cfg = plan.config
        self.build_base = resolve_base(ws, self.cfg.build_base)
        self.install_base = resolve_base(ws, self.cfg.install_base)
        self.descriptor = None
        if plan.phase is Phase.CROSS:
            fw = resolve_base(ws, self.cfg.firmware_dir)
            self.descriptor = load_platform((fw / DESCRIPTOR_NAME).read_text(encoding="utf-8"))
            self.firmware = fw

    def build_package(self, pkg, step):
        """Work done inside the thread pool; returns (result, files to install)."""
        result = PackageResult(pkg.name, step.actions, "built", step.input_hash)
        install = []
        try:
            for action in step.actions:
                if action is Action.DEPLOY_FIRMWARE:
                    deploy_firmware(pkg, self.ws)
                elif action in (Action.HOST_BUILD, Action.CROSS_BUILD):
                    install += self._stage(pkg, action)
                elif action is Action.COMPILE_KERNELS:
                    install += self._compile(pkg, result)
        except AccelError as exc:
            result.status = "failed"
            result.error = str(exc)
            result.exception = exc
            install = []
        return result, install

    def _stage(self, pkg, action):
        stage_dir = self.build_base / pkg.name
        if stage_dir.exists():
            shutil.rmtree(stage_dir)
        if action is Action.CROSS_BUILD and not (self.firmware / SYSROOT_NAME).is_dir():
            raise FirmwareIncompleteError("sysroot", self.firmware / SYSROOT_NAME)
        install = []
        for rel, data in _package_files(pkg):
            dest = stage_dir / "src" / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(data)
            install.append((_install_path(pkg.name, rel, self.cfg.merge_install), data))
        triple = self.cfg.target_triple if action is Action.CROSS_BUILD else HOST
        (stage_dir / TARGET_STAMP).write_text(triple + "\n", encoding="utf-8")
        return install

    def _compile(self, pkg, result):
        base = Path(pkg.path)
        out_dir = self.build_base / pkg.name / "kernels"
        out_dir.mkdir(parents=True, exist_ok=True)
        install = []
        for decl in pkg.kernels:
            try:
                source = (base / decl.file).read_text(encoding="utf-8")
                cfg_text = (base / decl.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise AccelIOError(f"kernel {decl.name}: {exc}") from None
            for inc in decl.include:
                if not (base / inc).is_dir():
                    raise AccelIOError(f"kernel {decl.name}: include directory {inc!r} not found")
            ir = parse_kernel(source)
            kcfg = parse_config(cfg_text)
            # the mixin picks the target; the config file keeps ii/clock settings
            kcfg = replace(kcfg, platform=self.descriptor.platform)
            if self.cfg.clock_mhz_override is not None:
                kcfg = replace(kcfg, clock_mhz=self.cfg.clock_mhz_override)
            build_type = self.cfg.kernel_type_override or decl.build_type
            artifact = compile_kernel(ir, kcfg, self.descriptor, build_type)
            data = encode_artifact(artifact)
            path = out_dir / f"{decl.name}.akbin"
            path.write_bytes(data)
            installed = None
            if decl.package_flag:
                rel = f"{pkg.name}/kernels/{decl.name}.akbin"
                install.append((rel, data))
                installed = self.install_base / rel
            result.kernels.append(KernelResult(pkg.name, decl.name, path, installed, artifact.metadata()))
        return install

    def install(self, pkg_name, files):
        merge = self.cfg.merge_install
        manifest_rel = _manifest_rel(pkg_name, merge)
        manifest_path = self.install_base / manifest_rel
        previous = []
        if manifest_path.is_file():
            previous = manifest_path.read_text(encoding="utf-8").splitlines()
        if merge:
            owned = set(previous) | {manifest_rel}
            for rel, _ in files:
                if rel not in owned and (self.install_base / rel).exists():
                    raise ConfigError(f"merge-install conflict: {rel} is already installed by another package")
        for rel in previous:
            (self.install_base / rel).unlink(missing_ok=True)
        for rel, data in files:
            dest = self.install_base / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(data)
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text("".join(f"{rel}\n" for rel in sorted(r for r, _ in files)), encoding="utf-8")


def _write_backend_marker(ws):
    path = ws.root / BACKENDS_MARKER
    text = f"emu\t{TOOL_VERSION}\n"
    if not path.is_file() or path.read_text(encoding="utf-8") != text:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def execute(plan, ws, jobs=None):
    start = time.perf_counter()
    runner = _Runner(plan, ws)
    key = platform_key(plan.config)
    report = BuildReport(plan.phase, key, {})
    by_name = {p.name: p for p in ws.packages}
    failed = set()

    with _Lock(runner.build_base / LOCK_FILE):
        if plan.phase is Phase.NATIVE:
            _write_backend_marker(ws)
        stamps = StampStore(runner.build_base / STAMP_FILE)
        with ThreadPoolExecutor(max_workers=jobs or min(8, os.cpu_count() or 1)) as pool:
            for wave in plan.waves:
                runnable = []
                for name in sorted(wave):
                    step = plan.steps[name]
                    blocked = [d for d in plan.graph.dependencies(name) if d in failed]
                    if blocked:
                        report.packages[name] = PackageResult(
                            name, step.actions, "failed", step.input_hash,
                            error=f"dependency failed: {', '.join(blocked)}",
                        )
                        failed.add(name)
                    elif step.actions == (Action.SKIP_UNCHANGED,):
                        report.packages[name] = PackageResult(name, step.actions, "skipped", step.input_hash)
                    else:
                        runnable.append(name)
                futures = {n: pool.submit(runner.build_package, by_name[n], plan.steps[n]) for n in runnable}
                # installs and stamps are serialized at the wave boundary, in name order
                for name in runnable:
                    result, files = futures[name].result()
                    if result.status == "built" and by_name[name].kind == "source":
                        try:
                            runner.install(name, files)
                        except AccelError as exc:
                            result.status = "failed"
                            result.error = str(exc)
                            result.exception = exc
                    if result.status == "failed":
                        failed.add(name)
                        stamps.discard(name, key)
                        log.error("%s failed: %s", name, result.error)
                    elif by_name[name].kind == "source":
                        stamps.set(name, key, result.input_hash)
                    report.packages[name] = result
                stamps.save()
    report.elapsed_s = time.perf_counter() - start
    return report


def build(ws, mixins=(), cli=None, selected=None, jobs=None):
    """Configure, plan and execute in one call."""
    cfg = configure(ws, mixins, cli)
    return execute(plan_build(ws, cfg, selected), ws, jobs=jobs)
