"""Exception hierarchy shared by every fedsim module."""


class FedSimError(Exception):
    """Base class for all errors raised by fedsim."""


class ConfigurationError(FedSimError, ValueError):
    """Inconsistent or invalid configuration (layer stacks, run configs, empty inputs)."""


class ShapeError(FedSimError, ValueError):
    """Array widths, lengths or parameter layouts do not line up."""


class DegenerateBatchError(FedSimError, ValueError):
    """A train-mode batch too small for batch statistics."""


class InternalConsistencyError(FedSimError, RuntimeError):
    """A cached forward pass no longer matches the parameters it was computed with."""


class DataError(FedSimError, ValueError):
    """Bad input data: unreadable files, unmapped labels, unseen categories."""


class IngestionError(DataError):
    """CSV or schema parsing failure, with row/column context in the message."""


class InfeasiblePartitionError(DataError):
    """Requested client class proportions cannot be met by the available rows."""
