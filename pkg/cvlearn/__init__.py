try:
    from ._version import __version__
except ImportError:  # pragma: no cover
    __version__ = "0.1.0"

__all__ = ["__version__"]
