"""Distributed MU-MIMO synchronization / calibration simulation core.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface. When working from a plain CMake build tree, the
extension sits next to the build outputs instead of inside the package, so
fall back to a top-level import in that case.
"""

try:
    from ._dmimo import *  # noqa: F401,F403
    from ._dmimo import ARTIFACT_VERSION  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout
    from _dmimo import *  # noqa: F401,F403
    from _dmimo import ARTIFACT_VERSION  # noqa: F401
