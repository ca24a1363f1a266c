"""Hardware-acceleration-aware workspace build orchestrator.

Packages declare acceleration kernels in ``package.accel`` manifests,
firmware packages describe target boards, and a two-phase build first
prepares the workspace natively and then cross-builds it for one board,
lowering kernels through an emulated backend.
"""

__version__ = "0.1.0"
TOOL_VERSION = f"accelbuild {__version__}"

from .errors import AccelError  # noqa: E402
from .workspace import (  # noqa: E402
    KernelDecl,
    PackageManifest,
    Workspace,
    discover_workspace,
    firmware_dir,
    parse_manifest,
    render_manifest,
)

__all__ = [
    "AccelError",
    "KernelDecl",
    "PackageManifest",
    "TOOL_VERSION",
    "Workspace",
    "discover_workspace",
    "firmware_dir",
    "parse_manifest",
    "render_manifest",
]
