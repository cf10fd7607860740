"""Taylor-series optimal regulators for control-affine nonlinear systems."""
from importlib import resources

__version__ = "0.1.0"

__all__ = ["__version__", "fixture_path", "load_fixture"]


def fixture_path(name):
    """Path of a bundled model file, e.g. ``fixture_path("f8")``."""
    name = name if name.endswith(".json") else name + ".json"
    path = resources.files(__name__) / "fixtures" / name
    if not path.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}")
    return str(path)


def load_fixture(name):
    """Parsed :class:`~nlreg.model.ModelSpec` of a bundled model."""
    from .model import load_model
    return load_model(fixture_path(name))
