"""Exception hierarchy for the net2rdm engine.

Every error carries a machine-parseable ``code`` used by the CLI
(``code: message`` on stderr, exit 1). Data/validation problems map to
``E_DATA``, file-format problems to ``E_FORMAT``, missing files to ``E_IO``.
"""

from __future__ import annotations


class Net2RdmError(Exception):
    """Base class for all engine errors."""

    code = "E_DATA"


# --- core-model validation ---------------------------------------------------


class MismatchedStimulusCount(Net2RdmError):
    pass


class NonFiniteValue(Net2RdmError):
    pass


class DuplicateLayerName(Net2RdmError):
    pass


class DuplicateConditionId(Net2RdmError):
    pass


class InsufficientOverlap(Net2RdmError):
    pass


class ConditionMismatch(Net2RdmError):
    pass


class SubjectMismatch(Net2RdmError):
    pass


# --- rdm-engine ---------------------------------------------------------------


class TooFewConditions(Net2RdmError):
    pass


class ConstantRow(Net2RdmError):
    pass


class ZeroNormRow(Net2RdmError):
    pass


class EmptyInput(Net2RdmError):
    pass


# --- stats-kernel -------------------------------------------------------------


class LengthMismatch(Net2RdmError):
    pass


class ConstantInput(Net2RdmError):
    pass


class AllTied(Net2RdmError):
    pass


class TooFewSubjects(Net2RdmError):
    pass


class InvalidP(Net2RdmError):
    pass


class InvalidParameter(Net2RdmError):
    pass


# --- wrsa-engine ----------------------------------------------------------------


class TooManyFolds(Net2RdmError):
    pass


class TestFoldTooSmall(Net2RdmError):
    __test__ = False  # keep pytest from collecting this as a test class



# --- searchlight-engine ---------------------------------------------------------


class AllCentersInvalid(Net2RdmError):
    code = "E_EMPTY_MAP"


# --- io-formats -----------------------------------------------------------------


class FormatError(Net2RdmError):
    code = "E_FORMAT"


class BadMagic(FormatError):
    pass


class BadHeader(FormatError):
    pass


class UnsupportedDescr(FormatError):
    pass


class FortranOrderUnsupported(FormatError):
    pass


class UnsupportedShape(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class ManifestError(FormatError):
    pass


class MissingFile(Net2RdmError):
    code = "E_IO"


class AsymmetricRdm(Net2RdmError):
    pass


class NonzeroDiagonal(Net2RdmError):
    pass


class EmptySpec(Net2RdmError):
    """A report spec with nothing to draw."""


class NnlsConvergenceWarning(UserWarning):
    """Raised (as a warning) when the NNLS solver hits its iteration cap."""
