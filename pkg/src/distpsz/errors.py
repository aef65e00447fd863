"""Exception hierarchy shared by the library and the CLI.

Every error carries an ``exit_code`` so the CLI can map failure categories
to process exit status without string matching.
"""


class PszError(Exception):
    exit_code = 1


class ConfigError(PszError, ValueError):
    """Invalid scenario, parameter or band specification."""

    exit_code = 2


class DimensionError(PszError, ValueError):
    """Array shapes or indices do not agree."""

    exit_code = 3


class DataError(PszError, ValueError):
    """Input data is malformed (non-finite taps, empty curves, ...)."""

    exit_code = 4


class PlantFileNotFound(DataError, FileNotFoundError):
    def __init__(self, zone, l, m, path):
        self.zone, self.l, self.m, self.path = zone, l, m, path
        super().__init__(f"missing plant file for (zone={zone}, l={l}, m={m}): {path}")


class NumericDivergenceError(PszError, ArithmeticError):
    """Control filters left the finite/bounded region during adaptation."""

    exit_code = 5

    def __init__(self, iteration, node=None, detail=""):
        self.iteration = iteration
        self.node = node
        where = f"iteration {iteration}"
        if node is not None:
            where += f", node {node}"
        msg = f"adaptation diverged at {where}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ProtocolError(PszError, RuntimeError):
    """A diffusion combine step is missing an expected neighbour block."""

    exit_code = 6

    def __init__(self, m, l):
        self.m, self.l = m, l
        super().__init__(f"missing estimate of filter {l} from node {m}")


class OutputError(PszError, OSError):
    exit_code = 7
