"""Exception types shared across the package.

Parsing and validation problems raise subclasses of NetlistError; analysis
stages raise AnalysisError subclasses.  The CLI maps these onto exit codes
(parse/validation -> 3, capacity -> 4).
"""


class FsmSafeError(Exception):
    """Base class for all package errors."""


class NetlistError(FsmSafeError):
    """Base class for netlist parsing and validation errors."""


class BenchSyntaxError(NetlistError):
    """Malformed .bench line.  Carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class DuplicateDriverError(NetlistError):
    """A net is driven by more than one gate, flip-flop, or INPUT."""


class UnknownGateKindError(NetlistError):
    """Gate kind outside the supported set."""


class UndrivenNetError(NetlistError):
    """A net is referenced but never driven by an INPUT, gate, or flip-flop."""


class CombinationalCycleError(NetlistError):
    """The gate graph has a cycle that is not cut by a flip-flop."""

    def __init__(self, cycle_nets):
        self.cycle_nets = tuple(cycle_nets)
        super().__init__("combinational cycle through: " + ", ".join(self.cycle_nets))


class EmptyNetlistError(NetlistError):
    """Refusing to emit a netlist with no content."""


class WidthMismatchError(FsmSafeError):
    """A BitVector has the wrong width for the operation."""


class AnalysisError(FsmSafeError):
    """Base class for analysis-stage errors."""


class CapacityExceededError(AnalysisError):
    """State or input space above the enumeration caps."""


class EmptyGroupError(AnalysisError):
    """Candidate extraction was asked for an empty register group."""


class LegalSetMissingError(AnalysisError):
    """Classification requested before a legal set was computed."""


class LegalSetNotClosedError(AnalysisError):
    """A legal-set override is not closed under the transition relation."""


class DistanceTooSmallError(AnalysisError):
    """Encoding min distance too small for the requested corrector."""


class UnsupportedSizeError(AnalysisError):
    """Encoding scheme cannot host the requested number of states."""


class TraceMismatchError(AnalysisError):
    """Witness replay diverged from the recorded trace."""
