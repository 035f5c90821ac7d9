"""Perplexity-bias diagnosis, correction and evaluation toolkit.

The compiled extension does all the work; this package re-exports it.
"""

from pplbias._core import *  # noqa: F401,F403

__version__ = "0.1.0"
