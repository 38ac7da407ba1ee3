class FormatError(ValueError):
    """A file is malformed, truncated or inconsistent."""


class UnsupportedFeature(FormatError):
    """A file is well-formed but uses a feature outside the supported subset."""
