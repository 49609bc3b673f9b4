"""Exception types shared by all modules.

Every error carries a short machine-readable ``code`` so the command line
layer can report failures as JSON without inspecting message text.
"""

from __future__ import annotations


class LabError(Exception):
    """Base class for all numerical and argument errors raised here."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def as_dict(self) -> dict:
        return {"error": self.code, "message": str(self), **self.details}


class InvalidDimension(LabError):
    code = "invalid-dimension"


class InvalidRoot(LabError):
    code = "invalid-root"


class OutOfRange(LabError):
    code = "out-of-range"


class InvalidArgument(LabError):
    code = "invalid-argument"


class OracleFailure(LabError):
    code = "oracle-failure"


class PerturbationRequired(LabError):
    code = "perturbation-required"


class DecompositionFailure(LabError):
    code = "decomposition-failure"


class AccuracyFailure(LabError):
    code = "accuracy-failure"


class SamplerFailure(LabError):
    code = "sampler-failure"


class UnsupportedDimension(LabError):
    code = "unsupported-dimension"


class InvalidSpectralParameter(LabError):
    code = "invalid-spectral-parameter"


class Divergence(LabError):
    code = "divergence"


class NotRational(LabError):
    code = "not-rational"


class NonGeneric(LabError):
    code = "non-generic"


class Inconclusive(LabError):
    code = "inconclusive"
