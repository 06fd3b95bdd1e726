"""Exception types raised by the simulator."""


class EitLampError(Exception):
    """Base class for all simulator errors."""


class SingularSystem(EitLampError):
    """The constrained steady-state linear system is rank deficient.

    Usually signals degenerate parameters (for example all decay rates zero
    while drives are on). Carries a condition-number estimate when one could
    be computed.
    """

    def __init__(self, message: str, condition: float | None = None,
                 node_index: int | None = None,
                 detuning_index: int | None = None):
        self.base_message = message
        self.condition = condition
        self.node_index = node_index
        self.detuning_index = detuning_index
        if condition is not None:
            message += f" (condition estimate {condition:.3e})"
        if node_index is not None:
            message += f" [velocity node {node_index}]"
        if detuning_index is not None:
            message += f" [detuning index {detuning_index}]"
        super().__init__(message)


class ZeroProbe(EitLampError):
    """Susceptibility requested at zero probe Rabi frequency.

    The susceptibility is defined as a driven response and diverges as the
    coherence-to-drive ratio for a vanishing drive.
    """


class NoConvergence(EitLampError):
    """A fixed-point iteration failed to converge."""

    def __init__(self, message: str, last_residual: float | None = None,
                 iterations: int | None = None):
        self.last_residual = last_residual
        self.iterations = iterations
        if iterations is not None:
            message += f" after {iterations} iterations"
        if last_residual is not None:
            message += f" (last residual {last_residual:.3e})"
        super().__init__(message)


class StepUnderflow(EitLampError):
    """Beam propagation required an unreasonably small integration step."""


class InvariantViolation(EitLampError):
    """A domain-type invariant failed validation."""


class ConfigError(EitLampError):
    """Base class for configuration problems (CLI exit code 2)."""


class ParseError(ConfigError):
    """Malformed configuration text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ConfigError):
    """A configuration value is out of range or unknown."""

    def __init__(self, message: str, key: str | None = None,
                 line: int | None = None):
        self.key = key
        self.line = line
        if key is not None:
            message = f"{key}: {message}"
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
