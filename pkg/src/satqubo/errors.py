"""Exception types raised across the package."""


class SatQuboError(ValueError):
    """Base class for all errors raised by satqubo."""


class InputError(SatQuboError):
    """An argument has the wrong length, range or shape."""


class FormatError(SatQuboError):
    """A DIMACS or QUBO text could not be parsed."""


class ConfigurationError(SatQuboError):
    """A configuration object violates its invariants."""


class ContractError(SatQuboError):
    """A precondition on the semantic state of an argument does not hold."""


class ExperimentError(SatQuboError):
    """An experiment could not be carried out (e.g. too few satisfiable instances)."""
