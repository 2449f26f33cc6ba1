"""Exception types shared across the package."""


class ModelError(ValueError):
    """A model definition is inconsistent or violates a physical constraint.

    Raised for shape mismatches, non-passive scattering data, grids that
    cannot close under the antipodal map, malformed input files, and other
    conditions where the inputs themselves are wrong.
    """


class NumericsError(RuntimeError):
    """A computation could not be completed reliably.

    Raised when a linear system that the model requires is singular or so
    ill-conditioned that the result would be meaningless.
    """
