"""Shared exception hierarchy."""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(ToolkitError):
    """A sample mesh is unusable: too coarse, non-uniform, or not increasing."""
