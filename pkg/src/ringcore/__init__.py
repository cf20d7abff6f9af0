"""Ring-decomposition coresets for (k, z)-clustering under assignment constraints.

Submodules are imported on demand: ``ringcore.composer`` holds the builders,
``ringcore.oracle`` the evaluation harness and ``ringcore.cli`` the entry point.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
