"""Request and response schemas for the analysis service."""

from __future__ import annotations

from pydantic import BaseModel, Field


# ---------------------------------------------------------------------------
# shared pieces


class NetlistInfo(BaseModel):
    name: str
    inputs: int
    outputs: int
    flops: int
    gates: int


class GroupInfo(BaseModel):
    index: int
    flops: list[int]
    flop_nets: list[str]
    feedback: bool


class CandidateInfo(BaseModel):
    group: list[int]
    n: int
    m: int
    state_nets: list[str]
    control_nets: list[str]
    reset_states: list[int]


class LoopInfo(BaseModel):
    states: list[int]
    kind: str


class WitnessStepInfo(BaseModel):
    state_before: int
    input_vector: int
    seu_flip: int | None


class ErrorDetail(BaseModel):
    kind: str  # parse | validation | capacity | usage
    message: str


# ---------------------------------------------------------------------------
# requests: every endpoint receives the netlist text, staying stateless


class BenchRequest(BaseModel):
    bench: str
    name: str = "netlist"
    theta: float = 0.5


class GroupedRequest(BenchRequest):
    group: list[int | str] | None = None  # flop indices or output net names
    group_index: int | None = None
    reset: list[str | int] | None = None
    legal_states: list[int] | None = None


class AnalyzeRequest(BenchRequest):
    seu_k: int = Field(default=1, ge=1)
    reset: list[str | int] | None = None
    legal_states: list[int] | None = None
    groups: list[list[int | str]] | None = None  # analyze exactly these groups
    full_graph: bool = False


class ExtractRequest(BenchRequest):
    pass


class StgRequest(GroupedRequest):
    pass


class SeuRequest(GroupedRequest):
    k: int = Field(default=1, ge=1)
    table: str | None = None  # encoding table text enabling corrector labels
    include_events: bool = False
    events_limit: int = Field(default=1000, ge=0)


class ReachRequest(GroupedRequest):
    target: int
    sources: list[int] | None = None
    budget: int = Field(default=0, ge=0)
    max_cycles: int | None = None


class ReencodeRequest(GroupedRequest):
    scheme: str
    with_corrector: bool = False


class ExportRequest(GroupedRequest):
    seu_k: int = Field(default=1, ge=1)
    full_graph: bool = False


# ---------------------------------------------------------------------------
# responses


class HealthResponse(BaseModel):
    status: str
    version: str


class ExtractResponse(BaseModel):
    netlist: NetlistInfo
    theta: float
    groups: list[GroupInfo]


class StgResponse(BaseModel):
    candidate: CandidateInfo
    counts: dict[str, int]
    legal: list[int]
    loops: list[LoopInfo]
    worst_recovery_depth: int | None
    classes: list[int] | None  # per-state class codes, only when n <= 12


class SeuEventInfo(BaseModel):
    origin: int
    mask: int
    corrupted: int
    state_class: str
    legal_jump: bool
    corrected: bool
    correction: str | None
    recovery_depth: tuple[int | None, int | None] | None


class SeuResponse(BaseModel):
    candidate: CandidateInfo
    k: int
    counts: dict[str, int]
    exposure: dict[str, int] | None
    events: list[SeuEventInfo] | None


class ReachResponse(BaseModel):
    reachable: bool
    steps: int | None
    upsets: int | None
    final_state: int | None
    witness: list[WitnessStepInfo] | None
    vectors_csv: str | None


class ReencodeResponse(BaseModel):
    scheme: str
    width: int
    min_distance: int
    corrector: bool
    num_states: int
    table: str
    bench: str


class ExportResponse(BaseModel):
    dot: str
    graphml: str
    report: str


class AnalyzedCandidate(BaseModel):
    group: list[int]
    skipped: str | None = None
    n: int | None = None
    m: int | None = None
    state_nets: list[str] | None = None
    control_nets: list[str] | None = None
    reset_states: list[int] | None = None
    counts: dict[str, int] | None = None
    seu: dict[str, int] | None = None
    exposure: dict[str, int] | None = None
    loops: list[LoopInfo] | None = None
    worst_recovery_depth: int | None = None
    has_trap: bool | None = None
    report: str | None = None
    dot: str | None = None
    graphml: str | None = None


class AnalyzeResponse(BaseModel):
    netlist: NetlistInfo
    theta: float
    groups: list[GroupInfo]
    candidates: list[AnalyzedCandidate]
