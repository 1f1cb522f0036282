try:
    from diracutils._version import version as __version__
except ImportError:  # pragma: no cover - source tree without a build
    from importlib.metadata import version as _dist_version

    __version__ = _dist_version("diracutils")

__all__ = ["__version__"]
