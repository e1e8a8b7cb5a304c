# -*- coding: utf-8 -*-

"""Version information for :mod:`irvrla`."""

__all__ = [
    "VERSION",
    "get_version",
]

VERSION = "0.1.0-dev"


def get_version() -> str:
    """Get the :mod:`irvrla` version string."""
    return VERSION
