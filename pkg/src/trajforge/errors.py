"""Exception taxonomy for trajforge.

Domain errors all derive from :class:`TrajforgeError` so the CLI can map
them to exit code 2 with a machine-readable payload.  Errors that occur at
a specific simulation time carry the time in ``.t``.
"""


class TrajforgeError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidInput(TrajforgeError):
    pass


class NotFunctionLike(TrajforgeError):
    """Graph input has (near-)vertical tangents and cannot be treated as y=f(x)."""


class DegenerateCurve(TrajforgeError):
    """Repeated points or otherwise unusable curve sampling."""


class NotC1Periodic(TrajforgeError):
    """Seam tangents of a would-be periodic curve do not match."""


class InvalidRadius(TrajforgeError):
    pass


class ResolutionExceeded(TrajforgeError):
    """A discretization request is too coarse or too fine to honor."""


class NoClosureInBracket(TrajforgeError):
    """No closing radius was bracketed during the scan."""

    def __init__(self, message, phi_range=None):
        super().__init__(message)
        self.phi_range = phi_range


class NoSimpleClosure(TrajforgeError):
    """Closing radii exist in the bracket but every candidate loop self-intersects."""

    def __init__(self, message, witnesses=None):
        super().__init__(message)
        self.witnesses = witnesses or []


class SeamMismatch(TrajforgeError):
    """Concatenated loop pieces disagree at a seam beyond tolerance."""


class RequiresSimpleLoop(TrajforgeError):
    pass


class GrooveOverlap(TrajforgeError):
    """Loop clearance is too small for the requested groove width."""


class MeshInvalid(TrajforgeError):
    """Mesh fails watertightness or orientation invariants."""


class _TimedError(TrajforgeError):
    def __init__(self, message, t):
        super().__init__(f"{message} (t={t:.6g})")
        self.t = t


class TrackingLost(_TimedError):
    """Body barycenter left the stability wedge during a rolling run."""


class StallDetected(_TimedError):
    """Speed reached zero on an uphill section."""


class ContactLost(_TimedError):
    """No mesh vertex was found near the plane at a trajectory step."""


class PoleSingularity(_TimedError):
    """Spherical-coordinate integration hit the coordinate pole."""
