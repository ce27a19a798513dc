"""Exception hierarchy.  Every error carries a stable ``code`` string."""


class OdkError(Exception):
    code = "ERROR"


class ValidationError(OdkError, ValueError):
    code = "VALIDATION"


class ParseError(OdkError, ValueError):
    code = "PARSE"


class FieldMismatch(OdkError, ValueError):
    code = "FIELD_MISMATCH"


class FieldDivisionByZero(OdkError, ZeroDivisionError):
    code = "DIVISION_BY_ZERO"


class DegenerateBasis(OdkError, ValueError):
    code = "DEGENERATE_BASIS"


class BadTolerance(OdkError, ValueError):
    code = "BAD_TOLERANCE"


class DimensionMismatch(OdkError, ValueError):
    code = "DIMENSION_MISMATCH"


class ZeroRelation(OdkError, ValueError):
    code = "ZERO_S"


class WrongCardinality(OdkError, ValueError):
    code = "WRONG_CARDINALITY"


class SizeMismatch(OdkError, ValueError):
    code = "SIZE_MISMATCH"


class ExpOverflow(OdkError, OverflowError):
    code = "OVERFLOW"


class NonDiagonalizable(OdkError, ValueError):
    code = "NONDIAGONALIZABLE"


class SingularMatrix(OdkError, ValueError):
    code = "SINGULAR"


class ClusteringAmbiguous(OdkError, ValueError):
    code = "CLUSTERING_AMBIGUOUS"


class PoolTooLarge(OdkError, ValueError):
    code = "POOL_TOO_LARGE"


class WrongTupleLength(OdkError, ValueError):
    code = "WRONG_TUPLE_LENGTH"


class FlagRequired(OdkError, ValueError):
    code = "FLAG_REQUIRED"


class NoClaim(OdkError, ValueError):
    code = "NO_CLAIM"


class CapZero(OdkError, ValueError):
    code = "CAP_ZERO"


class DimensionTooHigh(OdkError, ValueError):
    code = "DIMENSION_TOO_HIGH"
