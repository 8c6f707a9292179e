class TreeError(ValueError):
    """Malformed tree input or an invalid query against a tree."""


class DataError(ValueError):
    """Malformed count table or probability vector."""


class ConstraintError(ValueError):
    """A parameter point lies outside its admissible region."""


class UnsupportedRegimeError(Exception):
    """No closed-form score is available for the requested configuration."""


class CapacityError(Exception):
    """Input exceeds a configured size cap."""
