"""Exact analysis of directed nonabelian sandpile chains on arborescences."""

__version__ = "0.1.0"

from .arborescence import Arborescence, load_tree, validate  # noqa: E402
from .chain import build_transition, stationary_exact  # noqa: E402
from .configuration import StateSpace  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .monoid import generate_monoid  # noqa: E402
from .operators import LANDSLIDE, SOURCE, TRICKLE  # noqa: E402

__all__ = [
    "Arborescence", "StateSpace", "BACKEND", "LANDSLIDE", "SOURCE", "TRICKLE",
    "build_transition", "generate_monoid", "load_tree", "stationary_exact", "validate",
]
