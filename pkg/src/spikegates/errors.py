"""Exception hierarchy shared across the toolchain."""


class SpikeGatesError(Exception):
    """Base class for all errors raised by spikegates."""


class NumericalDivergenceError(SpikeGatesError, ArithmeticError):
    def __init__(self, neuron_id, t_ms=None):
        self.neuron_id = neuron_id
        self.t_ms = t_ms
        where = f" at t={t_ms:g} ms" if t_ms is not None else ""
        super().__init__(f"non-finite state in neuron {neuron_id!r}{where}")


class InsufficientSpikesError(SpikeGatesError, ValueError):
    pass


class CircuitError(SpikeGatesError, ValueError):
    """Invalid circuit construction (bad kind, arity, dangling or double-driven net)."""


class NetlistError(SpikeGatesError, ValueError):
    """Netlist diagnostics; carries a 1-based source position when known."""

    def __init__(self, message, line=None, col=None, code="netlist"):
        self.line = line
        self.col = col
        self.code = code
        self.message = message
        loc = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{loc}{code}: {message}")


class UnannotatedFeedbackError(NetlistError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        path = " -> ".join(str(c) for c in self.cycle)
        super().__init__(
            f"cycle among non-feedback synapses: {path}; annotate it with 'feedback'",
            code="unannotated-cycle",
        )


class CalibrationError(SpikeGatesError, RuntimeError):
    pass


class NoThresholdError(CalibrationError):
    pass


class NoSuppressionError(CalibrationError):
    pass


class NoTonicFiringError(CalibrationError):
    pass


class AndSingleInputFiresError(CalibrationError):
    pass


class StimulusError(SpikeGatesError, ValueError):
    pass


class ConfigError(SpikeGatesError, ValueError):
    """Malformed config or weights file."""
