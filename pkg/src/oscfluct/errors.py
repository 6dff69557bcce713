"""Exception types shared across the package.

Every numeric failure carries the name of the module that raised it so the
CLI can emit a tagged message and a distinct exit code.
"""

from __future__ import annotations


class OscfluctError(Exception):
    """Base class for all package-specific errors."""

    module = "oscfluct"


class ConfigError(OscfluctError):
    """Bad or unknown configuration input (CLI exit code 2)."""

    module = "config"


class NumericsError(OscfluctError):
    """Numeric failure in a computation (CLI exit code 3)."""


class EvalOverflowError(NumericsError):
    """A potential evaluation produced a non-finite value."""

    module = "potential"


class DivergenceError(NumericsError):
    """A quadrature over the real line failed to converge (integrand does
    not decay; the requested parameters lie outside the validity region)."""

    module = "gibbs"


class EnvelopeError(NumericsError):
    """No valid rejection-sampling envelope could be established."""

    module = "gibbs"


class StepSizeUnderflowError(NumericsError):
    """The adaptive integrator pushed the step below the representable
    resolution of the event clock (stiff regime)."""

    module = "chain"


class WindowOverflowError(NumericsError):
    """A moving frame carried the test-function support outside the safe
    lattice window."""

    module = "fields"


class AliasingError(NumericsError):
    """Kernel mass leaked outside the periodic box."""

    module = "spectral"


class DegenerateModesError(NumericsError):
    """Flux Jacobian eigen-decomposition is degenerate at this state point."""

    module = "nlfh"


class AmbiguousClassificationError(NumericsError):
    """A coupling-matrix entry sits in the grey zone between zero and
    clearly non-zero; the universality-class lookup refuses to guess."""

    module = "nlfh"
