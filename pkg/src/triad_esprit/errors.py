"""Exception hierarchy shared by the numerical and estimation layers."""


class TriadEspritError(Exception):
    """Base class for every error raised by this package.

    ``stage`` names the pipeline step that raised, when raised from
    :func:`triad_esprit.estimator.run_pipeline`.
    """

    stage = None


class NumericsError(TriadEspritError):
    pass


class NonHermitian(NumericsError):
    pass


class DidNotConverge(NumericsError):
    pass


class DefectiveMatrix(NumericsError):
    pass


class RankDeficient(NumericsError):
    pass


class LayoutError(TriadEspritError, ValueError):
    pass


class NonPositiveSpacing(LayoutError):
    pass


class NonIntegerMultiple(LayoutError):
    pass


class ScenarioError(TriadEspritError, ValueError):
    """Invalid scenario; ``field`` is a dotted path to the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class EstimationError(TriadEspritError):
    pass


class IllConditionedT(EstimationError):
    pass


class TinyDenominator(EstimationError):
    pass


class DegeneratePolarization(EstimationError):
    pass


class NoFeasibleInteger(EstimationError):
    pass
