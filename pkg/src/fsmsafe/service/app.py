"""FastAPI application exposing the analysis pipeline.

Stateless: every request carries the netlist text.  Domain failures map
to HTTP 400 with a typed detail {kind, message}; kind is one of parse
(netlist problems), validation (analysis preconditions), capacity
(size caps), usage (bad flag combinations).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import AnalysisError, CapacityExceededError, FsmSafeError, NetlistError
from ..export import to_dot, to_graphml, to_json
from ..extraction import extract_candidate, feedback_groups
from ..seu import inject_all
from ..stg import report_illegal_loops
from . import pipeline
from .models import (
    AnalyzedCandidate,
    AnalyzeRequest,
    AnalyzeResponse,
    CandidateInfo,
    ExportRequest,
    ExportResponse,
    ExtractRequest,
    ExtractResponse,
    GroupInfo,
    HealthResponse,
    LoopInfo,
    NetlistInfo,
    ReachRequest,
    ReachResponse,
    ReencodeRequest,
    ReencodeResponse,
    SeuEventInfo,
    SeuRequest,
    SeuResponse,
    StgRequest,
    StgResponse,
    WitnessStepInfo,
)


def _error_kind(exc: Exception) -> str:
    if isinstance(exc, CapacityExceededError):
        return "capacity"
    if isinstance(exc, NetlistError):
        return "parse"
    if isinstance(exc, pipeline.UsageError):
        return "usage"
    return "validation"


def create_app() -> FastAPI:
    app = FastAPI(title="fsmsafe", version=__version__)

    @app.exception_handler(FsmSafeError)
    @app.exception_handler(pipeline.UsageError)
    @app.exception_handler(ValueError)
    async def domain_error(request: Request, exc: Exception):
        return JSONResponse(
            status_code=400,
            content={"detail": {"kind": _error_kind(exc), "message": str(exc)}},
        )

    @app.get("/v1/health", response_model=HealthResponse)
    async def health():
        return HealthResponse(status="ok", version=__version__)

    def _netlist_info(netlist) -> NetlistInfo:
        return NetlistInfo(
            name=netlist.name,
            inputs=len(netlist.inputs),
            outputs=len(netlist.outputs),
            flops=len(netlist.flops),
            gates=len(netlist.gates),
        )

    def _group_infos(netlist, graph, groups) -> list:
        fb = set(feedback_groups(graph, groups))
        return [
            GroupInfo(
                index=k,
                flops=list(g),
                flop_nets=[netlist.net_name(netlist.flops[i].output) for i in g],
                feedback=g in fb,
            )
            for k, g in enumerate(groups)
        ]

    def _grouped(req) -> tuple:
        netlist = pipeline.load(req.bench, req.name)
        graph, groups = pipeline.clusters(netlist, req.theta)
        group = pipeline.resolve_group(netlist, groups, graph, req.group, req.group_index)
        candidate = extract_candidate(netlist, group)
        stg = pipeline.build_stg(candidate, reset=req.reset, legal_states=req.legal_states)
        return netlist, group, candidate, stg

    def _candidate_info(group, candidate, stg) -> CandidateInfo:
        return CandidateInfo(
            group=list(group),
            n=stg.n,
            m=stg.m,
            state_nets=list(candidate.state_net_names),
            control_nets=list(candidate.control_net_names),
            reset_states=sorted(stg.reset_states),
        )

    @app.post("/v1/extract", response_model=ExtractResponse)
    async def extract(req: ExtractRequest):
        netlist = pipeline.load(req.bench, req.name)
        graph, groups = pipeline.clusters(netlist, req.theta)
        return ExtractResponse(
            netlist=_netlist_info(netlist),
            theta=req.theta,
            groups=_group_infos(netlist, graph, groups),
        )

    @app.post("/v1/stg", response_model=StgResponse)
    async def stg_endpoint(req: StgRequest):
        _, group, candidate, stg = _grouped(req)
        return StgResponse(
            candidate=_candidate_info(group, candidate, stg),
            counts=stg.counts(),
            legal=sorted(stg.legal),
            loops=[
                LoopInfo(states=list(lp.states), kind=lp.kind)
                for lp in report_illegal_loops(stg)
            ],
            worst_recovery_depth=stg.worst_recovery_depth(),
            classes=[int(c) for c in stg.classes] if stg.n <= 12 else None,
        )

    @app.post("/v1/seu", response_model=SeuResponse)
    async def seu_endpoint(req: SeuRequest):
        _, group, candidate, stg = _grouped(req)
        corrector = None
        if req.table is not None:
            corrector = pipeline.corrector_from_table(req.table, candidate.reset_value())
        if req.k > stg.n:
            raise pipeline.UsageError(f"k={req.k} exceeds the group width {stg.n}")
        report = inject_all(stg, k=req.k, corrector=corrector)
        events = None
        if req.include_events:
            events = [
                SeuEventInfo(
                    origin=o.origin,
                    mask=o.mask,
                    corrupted=o.corrupted,
                    state_class=o.state_class.key,
                    legal_jump=o.legal_jump,
                    corrected=o.corrected,
                    correction=o.correction,
                    recovery_depth=o.recovery_depth,
                )
                for _, o in zip(range(req.events_limit), report)
            ]
        return SeuResponse(
            candidate=_candidate_info(group, candidate, stg),
            k=req.k,
            counts=report.counts(),
            exposure=pipeline.exposure_counts(stg),
            events=events,
        )

    @app.post("/v1/reach", response_model=ReachResponse)
    async def reach_endpoint(req: ReachRequest):
        _, _, _, stg = _grouped(req)
        result = pipeline.run_reach(stg, req.target, req.sources, req.budget, req.max_cycles)
        if result is None:
            return ReachResponse(
                reachable=False, steps=None, upsets=None,
                final_state=None, witness=None, vectors_csv=None,
            )
        trace, vectors = result
        return ReachResponse(
            reachable=True,
            steps=trace.num_steps,
            upsets=trace.upsets_used,
            final_state=trace.final_state,
            witness=[
                WitnessStepInfo(
                    state_before=s.state_before,
                    input_vector=s.input_vector,
                    seu_flip=s.seu_flip,
                )
                for s in trace.steps
            ],
            vectors_csv=vectors,
        )

    @app.post("/v1/reencode", response_model=ReencodeResponse)
    async def reencode_endpoint(req: ReencodeRequest):
        _, _, _, stg = _grouped(req)
        return ReencodeResponse(**pipeline.run_reencode(
            stg, req.scheme, req.with_corrector, req.name,
        ))

    @app.post("/v1/export", response_model=ExportResponse)
    async def export_endpoint(req: ExportRequest):
        _, _, _, stg = _grouped(req)
        report = inject_all(stg, k=min(req.seu_k, stg.n))
        full = True if req.full_graph else None
        return ExportResponse(
            dot=to_dot(stg, full=full),
            graphml=to_graphml(stg, full=full),
            report=to_json(stg, report),
        )

    @app.post("/v1/analyze", response_model=AnalyzeResponse)
    async def analyze_endpoint(req: AnalyzeRequest):
        netlist = pipeline.load(req.bench, req.name)
        graph, groups = pipeline.clusters(netlist, req.theta)
        if req.groups is not None:
            if not req.groups:
                raise pipeline.UsageError("groups override is empty")
            targets = [
                pipeline.resolve_group(netlist, groups, graph, group=g)
                for g in req.groups
            ]
        else:
            targets = feedback_groups(graph, groups)
        if (req.reset or req.legal_states) and len(targets) != 1:
            raise pipeline.UsageError(
                "reset/legal overrides need exactly one analyzed group"
            )
        candidates = [
            AnalyzedCandidate(**pipeline.analyze_group(
                netlist, g, req.seu_k,
                reset=req.reset, legal_states=req.legal_states,
                full_graph=req.full_graph,
            ))
            for g in targets
        ]
        return AnalyzeResponse(
            netlist=_netlist_info(netlist),
            theta=req.theta,
            groups=_group_infos(netlist, graph, groups),
            candidates=candidates,
        )

    return app


app = create_app()
