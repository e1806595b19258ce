"""Exception taxonomy shared across the package.

Argument problems (bad shapes, out-of-range bounds, malformed files) raise
plain ``ValueError``.  Failures discovered during computation get their own
classes so callers (and the CLI exit-code mapping) can tell them apart.
"""


class NumericError(RuntimeError):
    """A numerical procedure failed to converge or produced an ill-posed result."""


class StructureError(NumericError):
    """A structural precondition on the input fails (e.g. a chain is not ergodic)."""
