"""Named configuration bundles (mixins) and their layering with CLI flags.

Precedence, lowest first: built-in defaults, mixins in the order given
(later wins), explicit command-line keys.
"""

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, ParseError, TemplateError, UnknownMixinError
from .workspace import BUILD_TYPES, check_identifier

KEYS = (
    "build-base",
    "install-base",
    "merge-install",
    "target-triple",
    "firmware-dir",
    "platform",
    "kernel-type",
    "clock-mhz",
)
HOST = "host"
DEFAULTS = {
    "build-base": "build",
    "install-base": "install",
    "merge-install": "false",
    "target-triple": HOST,
}
BINDINGS = ("WORKSPACE", "PLATFORM", "FIRMWARE_DIR")

PLACEHOLDER_RE = re.compile(r"\$\{([A-Z][A-Z0-9_]*)\}")


@dataclass(frozen=True)
class Mixin:
    name: str
    entries: tuple  # ordered (key, value) pairs

    def get(self, key, default=None):
        return dict(self.entries).get(key, default)

    def as_dict(self):
        return dict(self.entries)


@dataclass(frozen=True)
class EffectiveConfig:
    build_base: Path
    install_base: Path
    merge_install: bool = False
    target_triple: str = HOST
    firmware_dir: Path | None = None
    platform: str | None = None
    kernel_type_override: str | None = None
    clock_mhz_override: int | None = None

    @property
    def is_cross(self):
        return self.platform is not None

    def as_entries(self):
        """Key/value view using mixin key names (omits unset optionals)."""
        out = {
            "build-base": str(self.build_base),
            "install-base": str(self.install_base),
            "merge-install": "true" if self.merge_install else "false",
            "target-triple": self.target_triple,
        }
        if self.firmware_dir is not None:
            out["firmware-dir"] = str(self.firmware_dir)
        if self.platform is not None:
            out["platform"] = self.platform
        if self.kernel_type_override is not None:
            out["kernel-type"] = self.kernel_type_override
        if self.clock_mhz_override is not None:
            out["clock-mhz"] = str(self.clock_mhz_override)
        return out


def _check_value(key, value, line=None):
    if key == "merge-install" and value not in ("true", "false"):
        raise ParseError(f"merge-install must be true or false, got {value!r}", line)
    if key == "kernel-type" and value not in BUILD_TYPES:
        raise ParseError(f"invalid kernel-type {value!r}", line)
    if key == "clock-mhz" and not (value.isdigit() and int(value) > 0):
        raise ParseError(f"clock-mhz must be a positive integer, got {value!r}", line)
    if key == "platform":
        check_identifier(value, "platform", line)
    if not value:
        raise ParseError(f"empty value for {key}", line)


def _parse_raw(text):
    """Structure of a mixin file with values left unchecked: (name, entries)."""
    name = None
    entries = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ParseError(f"expected 'key: value', got {line!r}", lineno)
        key, value = key.strip(), value.strip()
        if name is None:
            if key != "mixin":
                raise ParseError("first statement must be 'mixin: <name>'", lineno)
            name = (value, lineno)
            continue
        if key not in KEYS:
            raise ParseError(f"unknown mixin key {key!r}", lineno)
        if key in seen:
            raise ParseError(f"duplicate mixin key {key!r}", lineno)
        seen.add(key)
        entries.append((key, value, lineno))
    if name is None:
        raise ParseError("empty mixin: missing 'mixin: <name>' line")
    return name, entries


def _validated(name, entries):
    check_identifier(name[0], "mixin name", name[1])
    for key, value, lineno in entries:
        _check_value(key, value, lineno)
    return Mixin(name[0], tuple((k, v) for k, v, _ in entries))


def parse_mixin(text):
    return _validated(*_parse_raw(text))


def render_mixin(m):
    return "\n".join([f"mixin: {m.name}"] + [f"{k}: {v}" for k, v in m.entries]) + "\n"


def substitute(value, bindings, line=None):
    def repl(match):
        key = match.group(1)
        if key not in bindings:
            raise TemplateError(key)
        return str(bindings[key])

    out = PLACEHOLDER_RE.sub(repl, value)
    # anything still looking like a placeholder is malformed, e.g. ${lower}
    leftover = PLACEHOLDER_RE.sub("", value)
    if "${" in leftover:
        raise ParseError(f"malformed placeholder in {value!r}", line)
    return out


def render_template(template, bindings):
    """Parse a mixin template, then substitute ``${NAME}`` placeholders."""
    (name, name_line), entries = _parse_raw(template)
    name = (substitute(name, bindings, name_line), name_line)
    entries = [(k, substitute(v, bindings, line), line) for k, v, line in entries]
    return _validated(name, entries)


def load_registry(mixin_dir):
    """Every ``*.mixin`` file in *mixin_dir*, sorted by file name."""
    mixin_dir = Path(mixin_dir)
    if not mixin_dir.is_dir():
        return []
    out = []
    for path in sorted(mixin_dir.glob("*.mixin")):
        try:
            out.append(parse_mixin(path.read_text(encoding="utf-8")))
        except ParseError as exc:
            raise ParseError(f"{path}: {exc.args[0]}") from None
    return out


def resolve_mixin(name, registry):
    matches = [m for m in registry if m.name == name]
    if not matches:
        raise UnknownMixinError(name, {m.name for m in registry})
    if len(matches) > 1 and len(set(matches)) > 1:
        raise ConfigError(f"mixin {name!r} is defined more than once with different content")
    return matches[0]


def layer(mixins):
    """Fold mixins left to right into one key/value map (no defaults)."""
    out = {}
    for m in mixins:
        out.update(m.entries)
    return out


def _cli_value(key, value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def merge_mixins(mixins, cli):
    values = dict(DEFAULTS)
    values.update(layer(mixins))
    for key, value in cli.items():
        if key not in KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        values[key] = _cli_value(key, value)
    for key, value in values.items():
        try:
            _check_value(key, value)
        except ParseError as exc:
            raise ConfigError(exc.args[0]) from None

    build_base = Path(values["build-base"])
    install_base = Path(values["install-base"])
    if build_base == install_base:
        raise ConfigError(f"build base and install base are both {str(build_base)!r}")
    platform = values.get("platform")
    fw = values.get("firmware-dir")
    if (platform is None) != (fw is None):
        raise ConfigError("platform and firmware-dir must be given together")
    clock = values.get("clock-mhz")
    return EffectiveConfig(
        build_base=build_base,
        install_base=install_base,
        merge_install=values["merge-install"] == "true",
        target_triple=values["target-triple"],
        firmware_dir=Path(fw) if fw is not None else None,
        platform=platform,
        kernel_type_override=values.get("kernel-type"),
        clock_mhz_override=int(clock) if clock is not None else None,
    )
