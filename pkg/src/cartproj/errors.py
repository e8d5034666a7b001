"""Exception hierarchy and the process exit codes the CLI maps them to."""

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SURJECTIVITY = 3
EXIT_INFEASIBLE = 4
EXIT_BUDGET = 5
EXIT_FALSIFICATION = 6
EXIT_UNSUPPORTED = 7


class CartprojError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class MalformedInputError(CartprojError):
    """Bad shapes, indices, duplicate entries, or unparseable fields."""

    exit_code = EXIT_PARSE


class SurjectivityError(CartprojError):
    """The projection matrix does not have full row rank."""

    exit_code = EXIT_SURJECTIVITY


class RankDeficiencyError(SurjectivityError):
    """A quadratic form that must be positive definite is not.

    Signals a non-surjective projection or a degenerate block distance.
    """


class InfeasibleInstanceError(CartprojError):
    """A weights instance violates one of its subset feasibility conditions.

    ``subset`` holds a violated block subset (0-based indices).
    """

    exit_code = EXIT_INFEASIBLE

    def __init__(self, subset, message=None):
        self.subset = tuple(subset)
        if message is None:
            shown = "{" + ",".join(str(i + 1) for i in self.subset) + "}"
            message = f"feasibility condition violated for block subset I={shown}"
        super().__init__(message)


class BudgetError(CartprojError):
    """A combinatorial or atom-count budget was exceeded."""

    exit_code = EXIT_BUDGET


class FalsificationError(CartprojError):
    """A verified mathematical guarantee failed; the most valuable possible output."""

    exit_code = EXIT_FALSIFICATION


class UnsupportedCaseError(CartprojError):
    """Inputs outside the supported case split (e.g. an integer bound below k)."""

    exit_code = EXIT_UNSUPPORTED


class DegeneratePairError(CartprojError):
    """A point pair coincides in some block, so its distance vector is degenerate."""

    exit_code = EXIT_UNSUPPORTED


class InsufficientResolutionError(CartprojError):
    """The box-count regression window is empty or too short."""

    exit_code = EXIT_BUDGET
