"""``accelbuild`` command line.

Exit codes: 0 success, 1 build or runtime error, 2 usage error.  Data goes to
stdout, diagnostics to stderr.
"""

import argparse
import os
import re
import shutil
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AccelError, NoFirmwareError, UsageError
from .executor import build as run_build
from .executor import configure, resolve_base
from .firmware import list_platforms
from .graph import build_graph, to_dot, topo_order
from .mixins import load_registry
from .runtime import Device, load_artifact, run_functional, run_timed
from .workspace import MANIFEST_NAME, discover_workspace, is_identifier

SYNOPSIS = """\
usage: accelbuild build [--build-base D] [--install-base D] [--merge-install]
                        [--mixin NAME]... [--packages-select NAME]...
       accelbuild graph [--dot]
       accelbuild mixin list
       accelbuild platform list
       accelbuild kernel run FILE --platform ID --in STREAM=CSV... [--report-cycles]
       accelbuild clean [--platform ID]"""

COMMANDS = ("build", "graph", "mixin_list", "platform_list", "kernel_run", "clean")


@dataclass
class CliInvocation:
    command: str
    flags: dict = field(default_factory=dict)
    positionals: list = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        m = (re.search(r"invalid choice: '([^']*)'", message)
             or re.search(r"unrecognized arguments: (\S+)", message)
             or re.search(r"^argument ([^:]+):", message))
        if m:
            token = m.group(1).split("/")[0]
        elif "required" in message:
            token = "<missing " + message.rsplit(":", 1)[1].strip() + ">"
        else:
            token = message
        raise UsageError(token, SYNOPSIS, message)

    def exit(self, status=0, message=None):
        raise UsageError(message or "", SYNOPSIS)


def _identifier(value):
    if not is_identifier(value):
        raise argparse.ArgumentTypeError(f"invalid identifier {value!r}")
    return value


def _stream_arg(value):
    name, sep, csv = value.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected STREAM=CSV, got {value!r}")
    try:
        values = [int(v) for v in csv.split(",")] if csv.strip() else []
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-integer value in {value!r}") from None
    return name, values


def _make_parser():
    common = dict(add_help=False, allow_abbrev=False)
    parser = _Parser(prog="accelbuild", **common)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    b = sub.add_parser("build", **common)
    b.add_argument("--build-base")
    b.add_argument("--install-base")
    b.add_argument("--merge-install", action="store_true")
    b.add_argument("--mixin", action="append", default=[], type=_identifier)
    b.add_argument("--packages-select", action="append", default=[], type=_identifier)

    g = sub.add_parser("graph", **common)
    g.add_argument("--dot", action="store_true")

    for name in ("mixin", "platform"):
        p = sub.add_parser(name, **common)
        ps = p.add_subparsers(dest="sub", parser_class=_Parser)
        ps.required = True
        ps.add_parser("list", **common)

    k = sub.add_parser("kernel", **common)
    ks = k.add_subparsers(dest="sub", parser_class=_Parser)
    ks.required = True
    run = ks.add_parser("run", **common)
    run.add_argument("file")
    run.add_argument("--platform", required=True, type=_identifier)
    run.add_argument("--in", dest="inputs", action="append", default=[], type=_stream_arg)
    run.add_argument("--report-cycles", action="store_true")

    c = sub.add_parser("clean", **common)
    c.add_argument("--platform", type=_identifier)
    return parser


def parse_cli(argv):
    args = _make_parser().parse_args(list(argv))
    command = args.command
    if command in ("mixin", "platform", "kernel"):
        command = f"{command}_{args.sub}"
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "sub", "file")}
    positionals = [args.file] if command == "kernel_run" else []
    if command == "kernel_run":
        names = [name for name, _ in flags["inputs"]]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise UsageError(f"--in {dup[0]}", SYNOPSIS, "stream given twice")
    return CliInvocation(command, flags, positionals)


def find_workspace(cwd):
    env = os.environ.get("ACCEL_WORKSPACE")
    if env:
        return Path(env)
    here = Path(cwd).resolve()
    chain = (here, *here.parents)
    for i, candidate in enumerate(chain):
        # a package's own src/ is not a workspace
        inside_package = any((d / MANIFEST_NAME).is_file() for d in chain[i:])
        if (candidate / "src").is_dir() and not inside_package:
            return candidate
    raise UsageError(str(cwd), "no workspace found: no src/ directory in any parent")


def _cmd_build(inv, root, out):
    ws = discover_workspace(root)
    f = inv.flags
    cli = {}
    if f.get("build_base"):
        cli["build-base"] = f["build_base"]
    if f.get("install_base"):
        cli["install-base"] = f["install_base"]
    if f.get("merge_install"):
        cli["merge-install"] = True
    report = run_build(ws, f.get("mixin", []), cli, selected=f.get("packages_select") or None)
    for line in report.lines(root):
        print(line, file=out)
    built = len(report.rebuilt)
    failed = len(report.with_status("failed"))
    print(f"summary: phase={report.phase.value} platform={report.platform} built={built} "
          f"skipped={len(report.with_status('skipped'))} failed={failed}", file=sys.stderr)
    return 0 if report.ok else 1


def _cmd_graph(inv, root, out):
    g = build_graph(discover_workspace(root).packages)
    if inv.flags.get("dot"):
        out.write(to_dot(g))
    else:
        for name in topo_order(g):
            print(name, file=out)
    return 0


def _cmd_kernel_run(inv, root, out):
    platform = inv.flags["platform"]
    ws = discover_workspace(root)
    deployed = list_platforms(ws)
    match = [d for d in deployed if d.platform == platform]
    if not match:
        raise NoFirmwareError(platform, [d.platform for d in deployed])
    dev = Device(match[0])
    data = Path(inv.positionals[0]).read_bytes()
    kernel = load_artifact(dev, data)
    inputs = dict(inv.flags["inputs"])
    if inv.flags.get("report_cycles"):
        outputs, report = run_timed(kernel, inputs)
    else:
        outputs, report = run_functional(kernel, inputs), None
    for name in sorted(outputs):
        print(f"{name}=" + ",".join(str(int(v)) for v in outputs[name]), file=out)
    if report is not None:
        print(report.format(), file=out)
    return 0


def _cmd_clean(inv, root, out):
    platform = inv.flags.get("platform")
    root = Path(root)
    if platform:
        try:
            ws = discover_workspace(root)
            cfg = configure(ws, [platform])
            targets = [resolve_base(ws, cfg.build_base), resolve_base(ws, cfg.install_base)]
        except AccelError:
            targets = [root / f"build-{platform}", root / f"install-{platform}"]
    else:
        targets = [root / "build", root / "install", root / ".accel", root / "acceleration"]
    for path in targets:
        if path.exists():
            shutil.rmtree(path)
            print(f"removed {path}", file=sys.stderr)
    return 0


def run_cli(inv, cwd, out=None):
    out = out or sys.stdout
    try:
        root = find_workspace(cwd)
        if inv.command == "build":
            return _cmd_build(inv, root, out)
        if inv.command == "graph":
            return _cmd_graph(inv, root, out)
        if inv.command == "mixin_list":
            for m in sorted(load_registry(discover_workspace(root).mixin_dir), key=lambda m: m.name):
                print(m.name, file=out)
            return 0
        if inv.command == "platform_list":
            for d in list_platforms(discover_workspace(root)):
                print(d.platform, file=out)
            return 0
        if inv.command == "kernel_run":
            return _cmd_kernel_run(inv, root, out)
        if inv.command == "clean":
            return _cmd_clean(inv, root, out)
    except UsageError as exc:
        print(f"error: {exc}\n{exc.synopsis}", file=sys.stderr)
        return 2
    except AccelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: E_IO: {exc}", file=sys.stderr)
        return 1
    raise UsageError(inv.command, SYNOPSIS)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv or argv[0] in ("-h", "--help"):
        print(SYNOPSIS)
        return 0 if argv else 2
    try:
        inv = parse_cli(argv)
    except UsageError as exc:
        print(f"error: {exc}\n{exc.synopsis}", file=sys.stderr)
        return 2
    return run_cli(inv, os.getcwd())


if __name__ == "__main__":
    sys.exit(main())
