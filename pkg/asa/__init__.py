from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("axisymmetric-sturm-attractor")
except PackageNotFoundError:
    __version__ = "0.0.0+unknown"

__all__ = ["attractor", "__version__"]
