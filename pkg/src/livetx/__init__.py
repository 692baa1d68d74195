"""Live programming kernel with dynamically scoped edit transactions."""

from livetx.world import World

__version__ = "0.1.0"

__all__ = ["World", "__version__"]
