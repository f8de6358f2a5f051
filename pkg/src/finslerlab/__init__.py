"""finslerlab: anisotropic norms, nonlinear heat semigroups and isoperimetry at desk scale."""

from finslerlab import errors, jets

__all__ = ["errors", "jets"]

__version__ = "0.1.0"
