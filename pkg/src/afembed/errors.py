"""Exception hierarchy. Every error carries a machine-readable ``code``."""


class AfembedError(Exception):
    code = "ERROR"
    # CLI exit status; 4 marks "cannot decide at this tolerance/truncation".
    exit_code = 1

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code

    def to_dict(self):
        return {"code": self.code, "message": self.message}


class ShapeMismatch(AfembedError, ValueError):
    code = "SHAPE_MISMATCH"
    exit_code = 2


class InvalidMatrix(AfembedError, ValueError):
    code = "INVALID_MATRIX"
    exit_code = 2


class InvariantViolation(AfembedError, ValueError):
    code = "INVARIANT_VIOLATION"
    exit_code = 2


class ParseError(AfembedError, ValueError):
    code = "PARSE_ERROR"
    exit_code = 2


class NotAUHFChain(AfembedError, ValueError):
    code = "NOT_A_UHF_CHAIN"
    exit_code = 2


class EmptyFamily(AfembedError, ValueError):
    code = "EMPTY_FAMILY"
    exit_code = 2


class NotAMorphism(AfembedError):
    code = "NOT_A_MORPHISM"
    exit_code = 4


class NotHermitian(AfembedError):
    code = "NOT_HERMITIAN"
    exit_code = 4


class DefectTooLarge(AfembedError):
    code = "DEFECT_TOO_LARGE"
    exit_code = 4


class SpectrumInGap(AfembedError):
    code = "SPECTRUM_IN_GAP"
    exit_code = 4


class InconsistentDimensions(AfembedError):
    code = "INCONSISTENT_DIMENSIONS"
    exit_code = 4


class NotNearContraction(AfembedError):
    code = "NOT_NEAR_CONTRACTION"
    exit_code = 4


class NotCP(AfembedError):
    code = "NOT_CP"
    exit_code = 3


class NotInvertibleUnitImage(AfembedError):
    code = "NOT_INVERTIBLE_UNIT_IMAGE"
    exit_code = 4


class NonConvergent(AfembedError):
    code = "NON_CONVERGENT"
    exit_code = 4


class NeverAdmissible(AfembedError):
    code = "NEVER_ADMISSIBLE"
    exit_code = 4


class DegenerateSubspace(AfembedError):
    code = "DEGENERATE_SUBSPACE"
    exit_code = 4
