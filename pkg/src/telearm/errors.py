"""Exception types shared across the package."""


class TelearmError(Exception):
    """Base class for all package-specific errors."""


class NotInSubgroup(TelearmError):
    """Rotation is not expressible as yaw-about-z composed with roll-about-x."""


class DegenerateGeometry(TelearmError):
    """Arm geometry cannot support the requested computation (zero-length link)."""


class Unreachable(TelearmError):
    """Target point lies outside the arm's reachable set."""


class NoConvergence(TelearmError):
    """Iterative solver hit its iteration cap before meeting tolerance."""


class DuplicateCenter(TelearmError):
    """Two calibrated target centers coincide within the trigger radius."""


class TrialTimeout(TelearmError):
    """A hit was not achieved within the per-hit time cap."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class UnstableResponse(TelearmError):
    """Step response diverged beyond the divergence guard."""


class TargetInfeasible(TelearmError):
    """No gains within the search bounds meet the tuning targets."""


class ConfigInvalid(TelearmError):
    """Session configuration failed validation; ``field`` is the offending path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ProtocolViolation(TelearmError):
    """A wire client sent a malformed or illegal message."""


class PortBusy(TelearmError):
    """Requested TCP port is already bound."""
