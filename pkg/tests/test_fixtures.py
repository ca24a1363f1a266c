import pytest

from accelbuild.executor import build
from accelbuild.fixtures import FixtureError, copy_fixture, cross_flags, fixture_root, verify_fixture
from accelbuild.workspace import discover_workspace


def snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_fixture_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ACCEL_FIXTURES", str(tmp_path))
    assert fixture_root() == tmp_path


def test_verify_reference_workspace(ws1):
    report = verify_fixture(ws1)
    assert sorted(report.vadd) == ["kv260", "zcu102", "zcu104"]
    assert report.vadd_output == [5, 7, 9]
    assert report.overflow == "E_RESOURCE_OVERFLOW: luts: kernel needs 32, platform budget is 24"


def test_verify_detects_wrong_kernel(ws1):
    kdl = ws1 / "src" / "acceleration_examples" / "src" / "vadd.kdl"
    kdl.write_text(kdl.read_text().replace("stage add a b -> c", "stage sub a b -> c"))
    with pytest.raises(FixtureError, match="vadd"):
        verify_fixture(ws1, platforms=("zcu102",))


def test_clock_swap_touches_only_that_platform(tmp_path):
    root = copy_fixture(tmp_path / "ws")
    ws = discover_workspace(root)
    build(ws)
    for p in ("zcu102", "kv260"):
        assert build(ws, [p], cross_flags(p)).ok
    before = snapshot(root)

    desc = root / "src" / "acceleration_firmware_zcu102" / "platform.desc"
    desc.write_text(desc.read_text().replace("clock-mhz: 200", "clock-mhz: 300"))
    ws = discover_workspace(root)
    assert build(ws).rebuilt == {"acceleration_firmware_zcu102"}
    report = build(ws, ["zcu102"], cross_flags("zcu102"))
    assert report.rebuilt == {"acceleration_examples"}
    assert build(ws, ["kv260"], cross_flags("kv260")).rebuilt == set()

    after = snapshot(root)
    changed = {k for k in before.keys() | after.keys() if before.get(k) != after.get(k)}
    allowed = ("src/acceleration_firmware_zcu102/", "build-zcu102/", "install-zcu102/",
               "acceleration/firmware/zcu102/")
    assert changed and all(k.startswith(allowed) for k in changed), sorted(changed)
    assert {k.metadata["clock_mhz"] for k in report.kernels} == {300}
