"""Exception hierarchy.

Every error carries a stable ``code`` (``E_PARSE``, ``E_CYCLE``, ...) so the
command line and tests can match on it without parsing messages.
"""


class AccelError(Exception):
    code = "E_ACCEL"

    def __str__(self):
        return f"{self.code}: {super().__str__()}"


class ParseError(AccelError):
    code = "E_PARSE"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoSrcError(AccelError):
    code = "E_NO_SRC"


class DuplicatePackageError(AccelError):
    code = "E_DUPLICATE_PACKAGE"


class MissingDependencyError(AccelError):
    code = "E_MISSING_DEP"

    def __init__(self, package, missing):
        self.package = package
        self.missing = missing
        super().__init__(f"{package} depends on unknown package {missing!r}")


class CycleError(AccelError):
    code = "E_CYCLE"

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("dependency cycle: " + " -> ".join(self.cycle + self.cycle[:1]))


class TemplateError(AccelError):
    code = "E_TEMPLATE"

    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound placeholder ${{{name}}}")


class UnknownMixinError(AccelError):
    code = "E_UNKNOWN_MIXIN"

    def __init__(self, name, known, message=None):
        self.name = name
        self.known = sorted(known)
        if message is None:
            message = f"unknown mixin {name!r}; known: {', '.join(self.known) or '(none)'}"
        super().__init__(message)


class ConfigError(AccelError):
    code = "E_CONFIG"


class FirmwareIncompleteError(AccelError):
    code = "E_FIRMWARE_INCOMPLETE"

    def __init__(self, artifact, path=None):
        self.artifact = artifact
        where = f" ({path})" if path is not None else ""
        super().__init__(f"firmware package is missing its {artifact}{where}")


class PlatformConflictError(AccelError):
    code = "E_PLATFORM_CONFLICT"


class ResourceOverflowError(AccelError):
    code = "E_RESOURCE_OVERFLOW"

    def __init__(self, resource, needed, budget):
        self.resource = resource
        self.needed = needed
        self.budget = budget
        super().__init__(f"{resource}: kernel needs {needed}, platform budget is {budget}")


class ContainerError(AccelError):
    code = "E_CONTAINER"

    def __init__(self, reason):
        self.reason = reason
        super().__init__(reason)


class PlatformMismatchError(AccelError):
    code = "E_PLATFORM_MISMATCH"

    def __init__(self, artifact_platform, device_platform):
        self.artifact_platform = artifact_platform
        self.device_platform = device_platform
        super().__init__(
            f"hw artifact is sealed to {artifact_platform}, device is {device_platform}"
        )


class SignatureError(AccelError):
    code = "E_SIGNATURE"


class PhaseOrderError(AccelError):
    code = "E_PHASE_ORDER"


class NoFirmwareError(UnknownMixinError):
    """No firmware package in the workspace provides the requested platform.

    Subclasses :class:`UnknownMixinError` because the failure usually surfaces
    while resolving ``--mixin <platform>``.
    """

    code = "E_NO_FIRMWARE"

    def __init__(self, platform, known=()):
        super().__init__(
            platform, known,
            f"no firmware package for platform {platform!r} in the workspace",
        )


class LockedError(AccelError):
    code = "E_LOCKED"


class UsageError(AccelError):
    code = "E_USAGE"

    def __init__(self, token, synopsis="", detail=None):
        self.token = token
        self.synopsis = synopsis
        message = f"bad argument {token!r}"
        if detail and detail != token:
            message += f" ({detail})"
        super().__init__(message)


class AccelIOError(AccelError):
    code = "E_IO"
