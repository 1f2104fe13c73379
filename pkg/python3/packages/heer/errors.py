"""
errors.py

Exceptions raised by the heer package. The command line front end maps
ValidationError subclasses to exit status 2 and everything else to 1.
"""


class HeerError(Exception):
    """Base class of all heer errors. [module] names the owning module."""

    module = "heer"

    def __init__(self, *args, module=None):
        super().__init__(*args)
        if module is not None:
            self.module = module


class ValidationError(HeerError):
    """Input that fails validation before any computation starts"""


class SchemaError(ValidationError):
    """
    The schema file cannot be parsed or violates a schema invariant:
    duplicate names, undeclared node types, bad directedness flags.
    """

    module = "hin-graph"

    def __init__(self, message, path=None, line=None):
        if path is not None and line is not None:
            message = "{}:{}: {}".format(path, line, message)
        elif path is not None:
            message = "{}: {}".format(path, message)
        super().__init__(message)
        self.path = path
        self.line = line


class GraphFormatError(ValidationError):
    """A node or edge file line is malformed or violates the schema"""

    module = "hin-graph"

    def __init__(self, message, path=None, line=None):
        if path is not None and line is not None:
            message = "{}:{}: {}".format(path, line, message)
        elif path is not None:
            message = "{}: {}".format(path, message)
        super().__init__(message)
        self.path = path
        self.line = line


class ConfigError(ValidationError):
    """A TrainConfig field or command line flag has an invalid value"""

    module = "config"


class SamplingError(HeerError):
    """The sampler cannot produce the requested draw"""

    module = "sampler"


class InconsistentPairError(HeerError):
    """A node pair is scored under an edge type it is not consistent with"""

    module = "heer-model"

    def __init__(self, u, v, edge_type):
        super().__init__(
            "pair ({}, {}) is not consistent with edge type '{}'".format(
                u, v, edge_type
            )
        )
        self.u = u
        self.v = v
        self.edge_type = edge_type


class NumericalError(HeerError):
    """
    A loss or gradient became non-finite. [sample] holds the
    (u, v, edge_type, negatives_v, negatives_u) record that produced it.
    """

    module = "heer-model"

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class TrainingDiverged(HeerError):
    """
    The mean loss of an epoch is not finite. [checkpoint] is the state at
    the end of the last good epoch.
    """

    module = "trainer"

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class ScorerError(HeerError):
    """A scorer returned a non-finite score while ranking"""

    module = "evalbench"

    def __init__(self, scorer, message):
        super().__init__("scorer '{}': {}".format(scorer, message))
        self.scorer = scorer


class AnalysisError(ValidationError):
    """
    An analysis request does not fit the graph or the model, e.g. a
    meta-path whose steps do not chain or metrics with zero variance.
    """

    module = "analysis"
