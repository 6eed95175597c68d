"""scikit-learn pipeline executor for the pipesynth engine.

Runs as a subprocess speaking newline-delimited JSON on stdin/stdout:
a hello handshake declaring the primitive registry, then one evaluate
response per request line.  Scores come from seeded 5-fold cross
validation on a CSV dataset.
"""

from importlib import resources

from .registry import primitive_names, validate_pipeline
from .scoring import score_pipeline
from .server import serve

__all__ = [
    "bundled_dataset",
    "primitive_names",
    "score_pipeline",
    "serve",
    "validate_pipeline",
]


def bundled_dataset() -> str:
    """Path of the packaged 150-row, 3-class demo CSV."""
    return str(resources.files("sklexec").joinpath("data/three_class.csv"))
