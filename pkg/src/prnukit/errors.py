"""Exception types shared across the toolkit."""


class FormatError(ValueError):
    """A file does not conform to its declared format."""


class ShapeError(ValueError):
    """Array dimensions are incompatible with the requested operation."""


class DegenerateInputError(ValueError):
    """An input carries no usable signal (constant plane, all-zero surface)."""
