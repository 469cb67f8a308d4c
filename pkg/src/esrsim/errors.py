"""Exception types shared by the esrsim modules."""


class EsrError(Exception):
    """Base class for all esrsim errors."""


class DimensionMismatch(EsrError):
    """Operands have incompatible Hilbert-space dimensions."""


class NotHermitian(EsrError):
    """A matrix required to be Hermitian fails the symmetry check."""


class OutcomeCollision(EsrError):
    """The no-registration outcome coincides with an eigenvalue."""


class ContainsNoRegistration(EsrError):
    """Operation requires an outcome set without the no-registration value."""


class DetectionOutOfRange(EsrError):
    """A detection probability falls outside [0, 1]."""


class UndefinedRatio(EsrError):
    """Detection probability is 0/0: the conditional probability vanishes."""


class ComponentUndetectable(EsrError):
    """A mixture component has zero conditional probability for the property."""


class ZeroProbabilityBranch(EsrError):
    """State update conditioned on an outcome branch of zero probability."""


class AllBranchesZero(EsrError):
    """Every component of a mixture has zero probability for the outcome."""


class UnregisteredProperty(EsrError):
    """The physical property has no registered microscopic counterpart."""


class EtaOutOfRange(EsrError):
    """Detector efficiency outside [0, 1]."""


class NormalizationViolation(EsrError):
    """Branch amplitudes fail the per-eigenvalue normalization constraint."""


class PointerCountMismatch(EsrError):
    """Pointer basis size does not match the outcome count of the observable."""


class ConfigInvalid(EsrError):
    """An experiment configuration failed validation."""


class IoFailure(EsrError):
    """A referenced file could not be read or written."""


class InvariantViolation(EsrError):
    """A numerical invariant (e.g. probabilities summing to 1) failed at runtime."""
