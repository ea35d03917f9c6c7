"""Python bindings for the perfforge core operations."""

try:
    # installed package layout: the extension lives inside the package
    from ._perfforge import *  # noqa: F401,F403
    from ._perfforge import __version__  # noqa: F401
except ImportError:
    # build-tree layout: the extension sits on sys.path as a top-level module
    from _perfforge import *  # noqa: F401,F403
    from _perfforge import __version__  # noqa: F401
