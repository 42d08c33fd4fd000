"""Exception types raised by the package."""


class InvalidConfigurationError(ValueError):
    """A parameter or configuration value is outside its valid range."""


class InvalidAssignmentError(ValueError):
    """A sub-carrier assignment violates OFDMA exclusivity."""


class RateDomainError(ValueError):
    """The high-SNR rate expression is undefined (zero destination or eavesdropper gain)."""
