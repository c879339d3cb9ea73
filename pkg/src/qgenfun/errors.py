"""Exception hierarchy.

Every error carries a short ``code`` used for error rows in scan output.
"""


class QGeomError(ValueError):
    code = "error"


# matrix layer
class NonHermitianInput(QGeomError):
    code = "non_hermitian_input"


class ConvergenceFailure(QGeomError):
    code = "convergence_failure"


class NotPositiveSemidefinite(QGeomError):
    code = "not_psd"


class DegenerateBranch(QGeomError):
    code = "degenerate_branch"


class DensityError(QGeomError):
    code = "invalid_density"


class TraceNotOne(DensityError):
    code = "trace_not_one"


class NotHermitian(DensityError):
    code = "not_hermitian"


class NegativeEigenvalue(DensityError):
    code = "negative_eigenvalue"


class DimensionMismatch(QGeomError):
    code = "dimension_mismatch"


class WrongDimension(DimensionMismatch):
    code = "wrong_dimension"


# states
class BlochOutOfBall(QGeomError):
    code = "bloch_out_of_ball"


class GapClosure(QGeomError):
    code = "gap_closure"


class GaugePole(QGeomError):
    code = "gauge_pole"


class ConfigInvalid(QGeomError):
    code = "config_invalid"

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# generating functions
class NotNormalized(QGeomError):
    code = "not_normalized"


class UnsupportedKind(QGeomError):
    code = "unsupported_kind"


class DomainError(QGeomError):
    code = "domain_error"


# geometry
class PuritySingularity(QGeomError):
    code = "purity_singularity"


class NotPure(QGeomError):
    code = "not_pure"


class SignFlipAtStencil(QGeomError):
    code = "sign_flip_at_stencil"


# finite differences
class OracleFailure(QGeomError):
    code = "oracle_failure"

    def __init__(self, message, point=None, point_prime=None, cause=None):
        super().__init__(message)
        self.point = point
        self.point_prime = point_prime
        self.cause = cause
        if cause is not None and hasattr(cause, "code"):
            self.code = cause.code


class PhaseWrap(QGeomError):
    code = "phase_wrap"


class GaugeNotSmooth(QGeomError):
    code = "gauge_not_smooth"


class FitIllConditioned(QGeomError):
    code = "fit_ill_conditioned"
