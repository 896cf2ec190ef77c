"""Command-line frontend: a thin client of the analysis service.

By default each subcommand talks to an in-process service instance over
an ASGI transport, so no server needs to run; `--server URL` points the
same client at a remote instance, and `fsmsafe serve` starts one.

Exit codes: 0 success; 1 traps found under --fail-on-trap; 2 usage
errors; 3 netlist parse or analysis validation errors; 4 capacity caps.
Logs go to standard error (level from -v/-vv or the FSMSAFE_LOG
environment variable); machine artifacts are written atomically.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_TRAP = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_CAPACITY = 4

_KIND_EXIT = {"parse": EXIT_INPUT, "validation": EXIT_INPUT,
              "capacity": EXIT_CAPACITY, "usage": EXIT_USAGE}

log = logging.getLogger("fsmsafe.cli")


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


# ---------------------------------------------------------------------------
# service client


async def _post(server: str | None, path: str, payload: dict) -> dict:
    if server is None:
        from .service import app
        transport = httpx.ASGITransport(app=app)
        client = httpx.AsyncClient(transport=transport, base_url="http://fsmsafe.local")
    else:
        client = httpx.AsyncClient(base_url=server)
    try:
        async with client:
            log.debug("POST %s", path)
            resp = await client.post(path, json=payload, timeout=600.0)
    except httpx.HTTPError as exc:
        raise CliError(f"cannot reach service: {exc}", EXIT_USAGE)
    if resp.status_code == 200:
        return resp.json()
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict) and "kind" in detail:
        kind = detail["kind"]
        raise CliError(
            f"{kind} error: {detail.get('message', '')}",
            _KIND_EXIT.get(kind, EXIT_USAGE),
        )
    raise CliError(f"service returned {resp.status_code}: {resp.text}", EXIT_USAGE)


def post(args, path: str, payload: dict) -> dict:
    return asyncio.run(_post(args.server, path, payload))


# ---------------------------------------------------------------------------
# file helpers


def read_text(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {what} {path}: {exc}", EXIT_USAGE)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    log.info("wrote %s", path)


def out_path(args, filename: str) -> Path:
    return Path(args.out_dir) / filename


# ---------------------------------------------------------------------------
# flag parsing helpers


def bench_payload(args) -> dict:
    text = read_text(args.bench, "netlist")
    return {"bench": text, "name": Path(args.bench).stem, "theta": args.theta}


def group_payload(args) -> dict:
    payload = bench_payload(args)
    sources = [args.group is not None, args.group_index is not None,
               args.group_file is not None]
    if sum(sources) > 1:
        raise CliError("use only one of --group/--group-index/--group-file", EXIT_USAGE)
    if args.group is not None:
        payload["group"] = [tok.strip() for tok in args.group.split(",") if tok.strip()]
    elif args.group_file is not None:
        lines = read_text(args.group_file, "group file").splitlines()
        names = [ln.split("#", 1)[0].strip() for ln in lines]
        payload["group"] = [n for n in names if n]
    elif args.group_index is not None:
        payload["group_index"] = args.group_index
    if getattr(args, "reset", None):
        payload["reset"] = [tok.strip() for tok in args.reset.split(",") if tok.strip()]
    if getattr(args, "legal_file", None):
        payload["legal_states"] = parse_legal_file(args.legal_file)
    return payload


def parse_legal_file(path: str) -> list:
    states = []
    for line_no, raw in enumerate(read_text(path, "legal set file").splitlines(), 1):
        tok = raw.split("#", 1)[0].strip()
        if not tok:
            continue
        try:
            states.append(int(tok, 0))
        except ValueError:
            raise CliError(
                f"legal set file line {line_no}: {tok!r} is not an integer",
                EXIT_USAGE,
            )
    if not states:
        raise CliError(f"legal set file {path} lists no states", EXIT_USAGE)
    return states


def stem(args) -> str:
    return Path(args.bench).stem


def fmt_counts(counts: dict) -> str:
    return ", ".join(f"{v} {k}" for k, v in counts.items())


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args) -> int:
    payload = bench_payload(args)
    payload["seu_k"] = args.seu_k
    payload["full_graph"] = args.full_graph
    if args.reset:
        payload["reset"] = [t.strip() for t in args.reset.split(",") if t.strip()]
    if args.legal_file:
        payload["legal_states"] = parse_legal_file(args.legal_file)
    if args.group_file:
        lines = read_text(args.group_file, "group file").splitlines()
        names = [ln.split("#", 1)[0].strip() for ln in lines]
        payload["groups"] = [[n for n in names if n]]
    data = post(args, "/v1/analyze", payload)

    info = data["netlist"]
    print(f"netlist {info['name']}: {info['inputs']} inputs, {info['outputs']} outputs, "
          f"{info['flops']} flops, {info['gates']} gates")
    fb = sum(1 for g in data["groups"] if g["feedback"])
    print(f"groups (theta={data['theta']:.2f}): {len(data['groups'])} total, {fb} with feedback")

    trap_found = False
    for pos, cand in enumerate(data["candidates"]):
        nets = " ".join(str(i) for i in cand["group"])
        if cand["skipped"]:
            print(f"candidate g{pos} [{nets}]: skipped ({cand['skipped']})")
            continue
        print(f"candidate g{pos} [{' '.join(cand['state_nets'])}]: "
              f"n={cand['n']} m={cand['m']}")
        print(f"  states: {fmt_counts(cand['counts'])}")
        print(f"  seu k={args.seu_k}: {fmt_counts(cand['seu'])}")
        if cand["exposure"] is not None:
            print(f"  exposure: {fmt_counts(cand['exposure'])}")
        for loop in cand["loops"]:
            states = loop["states"]
            head = " -> ".join(str(s) for s in states[:6])
            more = f" ... ({len(states)} states)" if len(states) > 6 else ""
            print(f"  {loop['kind']} loop: {head}{more}")
        if cand["counts"]["irrecoverable"] + cand["counts"]["deadlock"] > 0:
            trap_found = True
            example = next(
                (lp["states"][0] for lp in cand["loops"] if lp["kind"] == "trap"), None,
            )
            if example is not None:
                print(f"  irrecoverable example: state {example} "
                      f"({example:0{cand['n']}b})")
        if cand["worst_recovery_depth"] is not None:
            print(f"  worst recovery depth: {cand['worst_recovery_depth']}")
        base = f"{stem(args)}.g{pos}"
        write_atomic(out_path(args, f"{base}.report.json"), cand["report"])
        write_atomic(out_path(args, f"{base}.stg.dot"), cand["dot"])
        write_atomic(out_path(args, f"{base}.stg.graphml"), cand["graphml"])
        print(f"  artifacts: {out_path(args, base)}.report.json, .stg.dot, .stg.graphml")

    if trap_found and args.fail_on_trap:
        print("trap states present and --fail-on-trap set")
        return EXIT_TRAP
    return EXIT_OK


def cmd_extract(args) -> int:
    data = post(args, "/v1/extract", bench_payload(args))
    info = data["netlist"]
    print(f"netlist {info['name']}: {info['flops']} flops")
    for g in data["groups"]:
        tag = "feedback" if g["feedback"] else "no feedback"
        print(f"group {g['index']}: [{' '.join(g['flop_nets'])}] ({tag})")
    write_atomic(out_path(args, f"{stem(args)}.groups.json"),
                 json.dumps(data, indent=2) + "\n")
    return EXIT_OK


def cmd_stg(args) -> int:
    data = post(args, "/v1/stg", group_payload(args))
    cand = data["candidate"]
    print(f"candidate [{' '.join(cand['state_nets'])}]: n={cand['n']} m={cand['m']}, "
          f"reset {data['candidate']['reset_states']}")
    print(f"states: {fmt_counts(data['counts'])}")
    for loop in data["loops"]:
        print(f"{loop['kind']} loop: {' -> '.join(str(s) for s in loop['states'][:8])}"
              + (" ..." if len(loop["states"]) > 8 else ""))
    if data["worst_recovery_depth"] is not None:
        print(f"worst recovery depth: {data['worst_recovery_depth']}")
    write_atomic(out_path(args, f"{stem(args)}.stg.json"),
                 json.dumps(data, indent=2) + "\n")
    return EXIT_OK


def cmd_seu(args) -> int:
    payload = group_payload(args)
    payload["k"] = args.seu_k
    if args.table:
        payload["table"] = read_text(args.table, "encoding table")
    data = post(args, "/v1/seu", payload)
    print(f"seu k={args.seu_k}: {fmt_counts(data['counts'])}")
    if data["exposure"] is not None:
        print(f"exposure: {fmt_counts(data['exposure'])}")
    write_atomic(out_path(args, f"{stem(args)}.seu.json"),
                 json.dumps(data, indent=2) + "\n")
    return EXIT_OK


def cmd_reach(args) -> int:
    payload = group_payload(args)
    payload["target"] = args.target
    payload["budget"] = args.budget
    if args.source:
        payload["sources"] = args.source
    if args.max_cycles is not None:
        payload["max_cycles"] = args.max_cycles
    data = post(args, "/v1/reach", payload)
    write_atomic(out_path(args, f"{stem(args)}.reach.json"),
                 json.dumps(data, indent=2) + "\n")
    if not data["reachable"]:
        print(f"UNREACHABLE: state {args.target} within budget {args.budget}")
        return EXIT_OK
    print(f"REACHABLE: state {args.target} in {data['steps']} steps "
          f"using {data['upsets']} upsets")
    for step in data["witness"]:
        flip = f" flip bit {step['seu_flip']}" if step["seu_flip"] is not None else ""
        print(f"  state {step['state_before']} --input {step['input_vector']:#x}-->{flip}")
    if data["vectors_csv"]:
        write_atomic(out_path(args, f"{stem(args)}.witness.csv"), data["vectors_csv"])
        print(f"stimulus: {out_path(args, stem(args))}.witness.csv")
    return EXIT_OK


def cmd_reencode(args) -> int:
    payload = group_payload(args)
    payload["scheme"] = args.scheme
    payload["with_corrector"] = args.with_corrector
    data = post(args, "/v1/reencode", payload)
    print(f"reencoded {data['num_states']} states as {data['scheme']}: "
          f"width {data['width']}, min distance {data['min_distance']}, "
          f"corrector {'yes' if data['corrector'] else 'no'}")
    bench_path = out_path(args, f"{stem(args)}.{data['scheme']}.bench")
    table_path = out_path(args, f"{stem(args)}.{data['scheme']}.table")
    write_atomic(bench_path, data["bench"])
    write_atomic(table_path, data["table"])
    print(f"wrote {bench_path} and {table_path}")
    return EXIT_OK


def cmd_export(args) -> int:
    payload = group_payload(args)
    payload["seu_k"] = args.seu_k
    payload["full_graph"] = args.full_graph
    data = post(args, "/v1/export", payload)
    dot = Path(args.dot) if args.dot else out_path(args, f"{stem(args)}.stg.dot")
    gml = Path(args.graphml) if args.graphml else out_path(args, f"{stem(args)}.stg.graphml")
    rep = Path(args.json) if args.json else out_path(args, f"{stem(args)}.report.json")
    write_atomic(dot, data["dot"])
    write_atomic(gml, data["graphml"])
    write_atomic(rep, data["report"])
    print(f"wrote {dot}, {gml}, {rep}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsmsafe",
        description="FSM safety analysis of gate-level netlists under single event upsets",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug (or set FSMSAFE_LOG)")
    parser.add_argument("--server", default=None,
                        help="remote service URL (default: run in process)")
    parser.add_argument("--out-dir", default=".", help="artifact directory")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_bench(p):
        p.add_argument("bench", help=".bench netlist path")
        p.add_argument("--theta", type=float, default=0.5,
                       help="clustering threshold (default 0.5)")

    def add_group(p):
        p.add_argument("--group", default=None,
                       help="comma list of flop indices or output net names")
        p.add_argument("--group-index", type=int, default=None,
                       help="pick the k-th clustered group")
        p.add_argument("--group-file", default=None,
                       help="file with one flop output net name per line")
        p.add_argument("--reset", default=None,
                       help="comma list of MSB-first binary reset states")
        p.add_argument("--legal-file", default=None,
                       help="file with one legal state (integer) per line")

    p = sub.add_parser("analyze", help="full pipeline over every feedback group")
    add_bench(p)
    p.add_argument("--seu-k", type=int, default=1, help="bits per upset (default 1)")
    p.add_argument("--reset", default=None)
    p.add_argument("--legal-file", default=None)
    p.add_argument("--group-file", default=None)
    p.add_argument("--full-graph", action="store_true",
                   help="export the full 2^n graph regardless of size")
    p.add_argument("--fail-on-trap", action="store_true",
                   help="exit 1 when IRRECOVERABLE/DEADLOCK states exist")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("extract", help="cluster flip-flops into FSM candidates")
    add_bench(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("stg", help="enumerate and classify one group's STG")
    add_bench(p)
    add_group(p)
    p.set_defaults(func=cmd_stg)

    p = sub.add_parser("seu", help="inject bit flips into the legal states")
    add_bench(p)
    add_group(p)
    p.add_argument("--seu-k", type=int, default=1, help="bits per upset (default 1)")
    p.add_argument("--table", default=None,
                   help="encoding table file enabling corrector labels")
    p.set_defaults(func=cmd_seu)

    p = sub.add_parser("reach", help="bounded reachability with a witness")
    add_bench(p)
    add_group(p)
    p.add_argument("--target", type=int, required=True, help="target state value")
    p.add_argument("--source", type=int, action="append", default=None,
                   help="source state (repeatable; default: reset states)")
    p.add_argument("--budget", type=int, default=0, help="max upsets (default 0)")
    p.add_argument("--max-cycles", type=int, default=None)
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("reencode", help="re-encode the legal FSM and emit a netlist")
    add_bench(p)
    add_group(p)
    p.add_argument("--scheme", required=True,
                   choices=["binary", "gray", "onehot", "hamming3"])
    p.add_argument("--with-corrector", action="store_true",
                   help="wrap transitions in a nearest-codeword corrector")
    p.set_defaults(func=cmd_reencode)

    p = sub.add_parser("export", help="write DOT, GraphML, and the JSON report")
    add_bench(p)
    add_group(p)
    p.add_argument("--seu-k", type=int, default=1)
    p.add_argument("--full-graph", action="store_true")
    p.add_argument("--dot", default=None, help="DOT output path")
    p.add_argument("--graphml", default=None, help="GraphML output path")
    p.add_argument("--json", default=None, help="JSON report output path")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def _setup_logging(verbosity: int) -> None:
    env = os.environ.get("FSMSAFE_LOG", "").upper()
    if env:
        level = getattr(logging, env, logging.WARNING)
    elif verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
    )


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
