"""Module importing all types."""
from .poly import *  # noqa: F401, F403
from .named import *  # noqa: F401, F403
from .structs import *  # noqa: F401, F403
