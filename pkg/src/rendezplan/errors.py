"""Exception types shared across the package."""


class RendezplanError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(RendezplanError):
    """Invalid configuration value or malformed scenario input."""


class MapInputError(RendezplanError):
    """Unreadable or malformed map input (PGM/CSV/JSON)."""


class UnplaceableObstacleError(RendezplanError):
    """Obstacle placement failed after the retry cap."""
