from ._core import *  # noqa: F401,F403
from ._core import GridError, load_fixture, solve_scopf, synthesize, verify

__version__ = "0.1.0"
