"""Exception hierarchy shared by the engine, the backends and the oracles."""


class LagrelaxError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(LagrelaxError, ValueError):
    """Invalid solver configuration (step schedule, iteration limits, flags)."""


class PreconditionError(LagrelaxError, ValueError):
    """An operation was called with arguments violating its precondition."""


class OracleError(LagrelaxError):
    """A backend oracle produced an unusable result (e.g. a non-finite dual)."""


class NoParse(LagrelaxError):
    """The sentence has no derivation under the grammar."""


class NoTagging(LagrelaxError):
    """Every tag sequence has score -inf under the tagging model."""


class CapExceeded(LagrelaxError):
    """Exhaustive enumeration would exceed the configured cap."""


class BudgetExceeded(CapExceeded):
    """An exact oracle ran past its enumeration budget."""


class NoFeasiblePair(LagrelaxError):
    """A brute-force oracle found no structure satisfying the hard constraints."""


class CoverageError(LagrelaxError, ValueError):
    """A tree cover does not cover the edge set of the MRF."""


class AcyclicityError(LagrelaxError, ValueError):
    """An edge set that must be a forest contains a cycle."""


class InfeasibleError(LagrelaxError):
    """The relaxed problem has no feasible structure for this input."""


class InstanceFormatError(LagrelaxError, ValueError):
    """An instance file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        if path is not None:
            where = f"{path}:{line}:" if line is not None else f"{path}:"
        else:
            where = f"line {line}:" if line is not None else ""
        super().__init__(f"{where} {message}" if where else message)
