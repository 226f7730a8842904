"""Exception types shared across the package."""


class QuantumStateError(ValueError):
    """An input is not a valid state, operator or projector set."""


class DimensionError(QuantumStateError):
    """Operand shapes do not agree."""


class ZeroProbabilityError(QuantumStateError):
    """A requested outcome has (numerically) zero probability."""


class InvariantBreach(RuntimeError):
    """Integration drifted outside the allowed invariant tolerances."""
