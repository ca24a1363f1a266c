"""Moving to a respun board by replacing one firmware package.

Only the swapped platform's build/install bases and firmware directory
change; every other platform's outputs stay byte-identical.
"""
import hashlib
import shutil
import tempfile
from pathlib import Path

from accelbuild.executor import build
from accelbuild.fixtures import copy_fixture, cross_flags
from accelbuild.workspace import discover_workspace


def tree(root):
    return {p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


def build_all(root):
    ws = discover_workspace(root)
    build(ws)
    for board in ("zcu102", "kv260"):
        build(ws, [board], cross_flags(board))


root = copy_fixture(Path(tempfile.mkdtemp()) / "ws")
build_all(root)

old = root / "src" / "acceleration_firmware_zcu102"
new = root / "src" / "acceleration_firmware_zcu102_rev2"
shutil.move(old, new)
manifest = new / "package.accel"
manifest.write_text(manifest.read_text().replace("acceleration_firmware_zcu102", "acceleration_firmware_zcu102_rev2"))
desc = new / "platform.desc"
desc.write_text(desc.read_text().replace("clock-mhz: 200", "clock-mhz: 300"))

before = tree(root)
build_all(root)
after = tree(root)
changed = sorted(k for k in before.keys() | after.keys() if before.get(k) != after.get(k))
print(f"{len(changed)} files changed after the swap:")
for path in changed:
    print("  " + path)
