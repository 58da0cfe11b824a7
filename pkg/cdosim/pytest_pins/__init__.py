"""
Pytest plugin pinning simulated regression values.

The first run records each value passed to the ``pinned`` fixture; later runs
compare against it. ``--pins-refreeze`` records them again.
"""

from .plugin import (
    pinned,
    pytest_addoption,
    pytest_configure,
    pytest_sessionfinish,
)

__all__ = [
    "pinned",
    "pytest_addoption",
    "pytest_configure",
    "pytest_sessionfinish",
]
