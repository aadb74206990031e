"""Exceptions raised by gpgraph.

Every class carries ``gpgraph_exc`` so interactive sessions print a one-line
message instead of a traceback, and an ``exit_code`` used by the command line.
"""


class GpgError(Exception):
    gpgraph_exc = True
    exit_code = 1


class ParameterError(GpgError):
    """Invalid parameter value (negative regularization, bad grid, ...)"""

    exit_code = 2


class OracleCapError(ParameterError):
    """Dense oracle requested for a problem larger than the configured cap"""


class DataError(GpgError):
    """Malformed, inconsistent or non-finite input data"""

    exit_code = 3


class DimensionError(DataError):
    pass


class GraphError(DataError):
    """Adjacency matrix violates the graph invariants"""


class DomainError(DataError):
    pass


class NumericalError(GpgError):
    exit_code = 4


class DecompositionError(NumericalError):
    pass


class FactorizationError(NumericalError):
    pass


class NormalizationError(NumericalError):
    pass
