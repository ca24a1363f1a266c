from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from accelbuild.errors import DuplicatePackageError, NoSrcError, ParseError
from accelbuild.workspace import (
    FirmwareSpec,
    KernelDecl,
    PackageManifest,
    Workspace,
    discover_workspace,
    firmware_dir,
    parse_manifest,
    render_manifest,
)

VADD_MANIFEST = """\
package: vadd_example
kind: source
kernel:
  name: vadd
  file: src/vadd.kdl
  config: src/zcu102.cfg
  include: include
  type: hw
  package: true
"""


def write_pkg(root, dirname, name, extra=""):
    d = root / "src" / dirname
    d.mkdir(parents=True)
    (d / "package.accel").write_text(f"package: {name}\nkind: source\n{extra}")
    return d


def test_parse_listing_style_kernel():
    m = parse_manifest(VADD_MANIFEST)
    assert m.name == "vadd_example"
    assert m.kind == "source"
    assert len(m.kernels) == 1
    k = m.kernels[0]
    assert k == KernelDecl("vadd", "src/vadd.kdl", "src/zcu102.cfg", "hw", ("include",), True)


def test_minimal_manifest_defaults():
    m = parse_manifest("package: core\nkind: source\n")
    assert (m.version, m.depends, m.kernels, m.firmware) == ("0.0.0", (), (), None)


def test_invalid_build_type_rejected():
    text = VADD_MANIFEST.replace("type: hw", "type: fast_emu")
    with pytest.raises(ParseError, match="invalid build type") as exc:
        parse_manifest(text)
    assert exc.value.line == 8


def test_key_order_free_and_kernels_accumulate():
    text = """\
# two kernels, keys shuffled
kind: source
depends: core_lib, util
package: multi
kernel:
  type: sw_emu
  config: a.cfg
  file: a.kdl
  name: ka
kernel:
  name: kb
  file: b.kdl   # trailing comment
  config: b.cfg
  type: hw_emu
"""
    m = parse_manifest(text)
    assert [k.name for k in m.kernels] == ["ka", "kb"]
    assert m.depends == ("core_lib", "util")
    assert m.kernels[1].package_flag is False


@pytest.mark.parametrize("text, fragment", [
    ("kind: source\n", "package"),
    ("package: a\n", "kind"),
    ("package: a\nkind: library\n", "invalid kind"),
    ("package: a\nkind: source\ncolour: red\n", "unknown key"),
    ("package: a\nkind: source\nkernel:\n  name: k\n  file: /abs.kdl\n  config: c\n  type: hw\n", "absolute"),
    ("package: a\nkind: source\nkernel:\n  name: k\n  file: ../x.kdl\n  config: c\n  type: hw\n", "escapes"),
    ("package: a\nkind: source\nkernel:\n  name: k\n  file: x.kdl\n  type: hw\n", "missing config"),
    ("package: a\nkind: source\nkernel:\n   name: k\n", "two spaces"),
    ("package: a\nkind: source\n  name: k\n", "outside"),
    ("package: a\nkind: source\ndepends: a\n", "itself"),
    ("package: a\nkind: source\ndepends: b, b\n", "duplicate dependency"),
    ("package: a\nkind: source\nversion: 1.2\n", "dotted triple"),
    ("package: A\nkind: source\n", "lowercase"),
    ("package: a\nkind: firmware\n", "firmware block"),
    ("package: a\nkind: source\nfirmware:\n  platform: p\n  descriptor: d\n  sysroot: s\n"
     "  rootfs: r\n  mixin-template: m\n", "requires kind firmware"),
    ("package: a\nkind: source\nthis line is junk\n", "key: value"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_manifest(text)


def test_firmware_manifest():
    m = parse_manifest(
        "package: acceleration_firmware_kv260\nkind: firmware\nfirmware:\n  platform: kv260\n"
        "  descriptor: platform.desc\n  sysroot: sysroot\n  rootfs: rootfs.img\n"
        "  mixin-template: mixin.template\n"
    )
    assert m.firmware == FirmwareSpec("kv260", "platform.desc", "sysroot", "rootfs.img", "mixin.template")
    with pytest.raises(ParseError, match="cannot declare kernels"):
        parse_manifest(render_manifest(m).replace("firmware:", "kernel:\n  name: k\n  file: f\n"
                                                  "  config: c\n  type: hw\nfirmware:"))


# -- round trip -----------------------------------------------------------------------

idents = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True)
relpaths = st.lists(st.from_regex(r"[a-z][a-z0-9_.]{0,6}", fullmatch=True), min_size=1, max_size=3).map("/".join)


@st.composite
def manifests(draw):
    name = draw(idents)
    kind = draw(st.sampled_from(["source", "firmware"]))
    deps = draw(st.lists(idents.filter(lambda d: d != name), unique=True, max_size=4))
    kernels, firmware = (), None
    if kind == "source":
        kernels = tuple(draw(st.lists(st.builds(
            KernelDecl,
            name=idents, file=relpaths, config=relpaths,
            build_type=st.sampled_from(["sw_emu", "hw_emu", "hw"]),
            include=st.lists(relpaths, max_size=2).map(tuple),
            package_flag=st.booleans(),
        ), max_size=3, unique_by=lambda k: k.name)))
    else:
        firmware = draw(st.builds(FirmwareSpec, idents, relpaths, relpaths, relpaths, relpaths))
    version = draw(st.from_regex(r"\d{1,3}\.\d{1,3}\.\d{1,3}", fullmatch=True))
    return PackageManifest(name, kind, version, tuple(deps), kernels, firmware)


@given(manifests())
def test_render_parse_round_trip(m):
    first = parse_manifest(render_manifest(m))
    assert first == m
    assert parse_manifest(render_manifest(first)) == first


# -- discovery --------------------------------------------------------------------------

def test_discover_two_packages(tmp_path):
    write_pkg(tmp_path, "b", "b")
    write_pkg(tmp_path, "a", "a")
    ws = discover_workspace(tmp_path)
    assert ws.names() == ["a", "b"]
    assert ws.packages[0].path == tmp_path / "src" / "a"


def test_discover_empty_src(tmp_path):
    (tmp_path / "src").mkdir()
    assert discover_workspace(tmp_path).packages == ()


def test_discover_duplicate_name(tmp_path):
    write_pkg(tmp_path, "p1", "vadd_example")
    write_pkg(tmp_path, "p2", "vadd_example")
    with pytest.raises(DuplicatePackageError):
        discover_workspace(tmp_path)


def test_discover_requires_src(tmp_path):
    with pytest.raises(NoSrcError):
        discover_workspace(tmp_path)


def test_discover_does_not_descend_into_packages(tmp_path):
    outer = write_pkg(tmp_path, "outer", "outer")
    nested = outer / "vendor" / "inner"
    nested.mkdir(parents=True)
    (nested / "package.accel").write_text("package: inner\nkind: source\n")
    group = tmp_path / "src" / "group" / "member"
    group.mkdir(parents=True)
    (group / "package.accel").write_text("package: member\nkind: source\n")
    assert discover_workspace(tmp_path).names() == ["member", "outer"]


def test_discover_parse_error_names_file(tmp_path):
    write_pkg(tmp_path, "bad", "bad", "kernel:\n  name: k\n")
    with pytest.raises(ParseError, match="bad/package.accel"):
        discover_workspace(tmp_path)


def test_discover_is_deterministic(ws1):
    assert discover_workspace(ws1) == discover_workspace(ws1)
    assert discover_workspace(ws1).names() == sorted(discover_workspace(ws1).names())


def test_workspace_layout_paths(tmp_path):
    (tmp_path / "src").mkdir()
    ws = discover_workspace(tmp_path)
    assert ws.src_dir == tmp_path / "src"
    assert ws.firmware_root == tmp_path / "acceleration" / "firmware"
    assert ws.mixin_dir == tmp_path / ".accel" / "mixins"


# -- firmware_dir ----------------------------------------------------------------------------

WS = Workspace(Path("/ws"), ())


@pytest.mark.parametrize("platform", ["kv260", "zcu102"])
def test_firmware_dir(platform):
    assert firmware_dir(WS, platform) == Path(f"/ws/acceleration/firmware/{platform}")


@pytest.mark.parametrize("bad", ["", "Bad", "a/b", "..", None])
def test_firmware_dir_rejects_bad_identifiers(bad):
    with pytest.raises(ParseError):
        firmware_dir(WS, bad)


@given(idents)
def test_firmware_dir_prefix_and_last_component(p):
    d = firmware_dir(WS, p)
    assert d.parts[: len(WS.root.parts)] == WS.root.parts
    assert d.name == p
