"""Two-phase build of the reference workspace.

Run from the repository root:  python3 demos/walkthrough.py
"""
import tempfile
from pathlib import Path

from accelbuild.executor import build
from accelbuild.fixtures import copy_fixture, cross_flags
from accelbuild.graph import build_graph, topo_order
from accelbuild.workspace import discover_workspace

tmp = Path(tempfile.mkdtemp())
root = copy_fixture(tmp / "ws")
ws = discover_workspace(root)
print("packages:", ", ".join(topo_order(build_graph(ws.packages))))

# Phase A builds for the host and deploys every firmware package.
# The per-platform mixins only exist after this step.
report = build(ws)
print("\nnative build")
for line in report.lines(root):
    print("  " + line)
print("generated mixins:", sorted(p.name for p in ws.mixin_dir.glob("*.mixin")))

# Phase B, once per board.  Same flags as:
#   accelbuild build --build-base build-zcu102 --install-base install-zcu102 \
#       --merge-install --mixin zcu102
for board in ("zcu102", "zcu104", "kv260"):
    report = build(ws, [board], cross_flags(board))
    print(f"\ncross build for {board} ({report.elapsed_s:.2f}s)")
    for line in report.lines(root):
        print("  " + line)

# The tiny board is too small for chain3.
report = build(ws, ["tiny"], cross_flags("tiny"))
print("\ntiny:", report.packages["acceleration_examples"].error)

# A second run with nothing changed does no work.
print("\nrebuilt on a no-op run:", sorted(build(ws, ["kv260"], cross_flags("kv260")).rebuilt))
print("\nworkspace left in", root)
