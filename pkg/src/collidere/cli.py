"""Command line front end.

Exit codes: 0 possible or done, 1 impossible, 2 unknown, 64 usage or parse
error, 65 search budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable, Iterable, TextIO

from .decomposition import (
    Criterion,
    DecompositionWitness,
    Outcome,
    SearchBudget,
    canonical_omp_decomposition,
    collide_nodes,
    construct_omp_witness,
    decompose_check,
    enumerate_decomposition_targets,
    leftover_nodes,
    omp_criterion,
)
from .expressions import ExpressionError, format_expression, parse_expression, pretty_expression
from .graph import GraphError, SingularityType, is_omp, make_named_type
from .invariants import (
    BrieskornModel,
    basic_invariants,
    brieskorn_model,
    signature_from_spectrum,
    signature_steenbrink,
    spectrum,
    tau_es_omp_uncorrected,
)
from .obstructions import DeformationProblem, ObstructionReport, Verdict, aggregate_verdict, signature_deviations

EXIT_OK, EXIT_IMPOSSIBLE, EXIT_UNKNOWN, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 64, 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {value}")
    return value


def _default_budget() -> int:
    raw = os.environ.get("COLLIDERE_BUDGET")
    if raw is None:
        return SearchBudget().max_nodes
    try:
        return _positive(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"COLLIDERE_BUDGET: {exc}") from None


# --- helpers ---------------------------------------------------------------


def _single(text: str) -> SingularityType:
    terms = parse_expression(text).terms
    if len(terms) != 1 or terms[0][0] != 1:
        raise UsageError(f"expected a single type, got {text!r}")
    return terms[0][1]


def _budget(args: argparse.Namespace) -> SearchBudget:
    return SearchBudget(args.budget, args.time_limit)


def _read_hint(path: str | None) -> DecompositionWitness | None:
    if path is None:
        return None
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read witness {path}: {exc}") from None
    return DecompositionWitness.from_json(data.get("witness", data) if isinstance(data, dict) else data)


def _dump(payload: Any, out: TextIO, compact: bool = False) -> None:
    if compact:
        out.write(json.dumps(payload, ensure_ascii=False, separators=(",", ":")) + "\n")
    else:
        out.write(json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


def _verdict_code(report: ObstructionReport) -> int:
    if report.verdict is Verdict.IMPOSSIBLE:
        return EXIT_IMPOSSIBLE
    if report.verdict is Verdict.POSSIBLE:
        return EXIT_OK
    return EXIT_BUDGET if report.budget_exceeded else EXIT_UNKNOWN


def _write_deviations(args: argparse.Namespace, types: Iterable[SingularityType]) -> None:
    if getattr(args, "deviations", None):
        rows = signature_deviations(types)
        Path(args.deviations).write_text(json.dumps(rows, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def _model_block(m: BrieskornModel | None) -> dict:
    if m is None:
        return {"brieskorn": None, "spectrum": None, "signature": None}
    sp = spectrum(m)
    return {
        "brieskorn": {"p": m.p, "q": m.q},
        "spectrum": sp.to_json(),
        "signature": signature_steenbrink(m).to_json(),
    }


# --- commands --------------------------------------------------------------


def cmd_invariants(args: argparse.Namespace, out: TextIO) -> int:
    t = _single(args.type)
    inv = basic_invariants(t)
    payload = {"type": t.label, "key": t.key, "invariants": inv.to_json(), **_model_block(brieskorn_model(t))}
    if is_omp(t) and t.r >= 3:
        payload["tau_es_uncorrected"] = tau_es_omp_uncorrected(t.r)
    _write_deviations(args, [t])
    if args.format == "json":
        _dump(payload, out)
    else:
        out.write(f"{t.pretty}: r={inv.r} mult={inv.mult} delta={inv.delta} mu={inv.mu} kappa={inv.kappa} tau_es={inv.tau_es}\n")
        if payload["signature"] is not None:
            sig = payload["signature"]
            out.write(f"  signature (plus, zero, minus) = ({sig['plus']}, {sig['zero']}, {sig['minus']})\n")
            out.write(f"  spectrum: {spectrum(brieskorn_model(t))}\n")
    return EXIT_OK


def cmd_check(args: argparse.Namespace, out: TextIO) -> int:
    src = _single(args.source)
    targets = parse_expression(args.into).types()
    problem = DeformationProblem(src, tuple(targets), _read_hint(args.hint))
    report = aggregate_verdict(problem, _budget(args), exhaustive=args.all_rules)
    _write_deviations(args, [src, *targets])
    if args.format == "json":
        _dump(report.to_json(), out)
    else:
        out.write(report.to_text() + "\n")
    return _verdict_code(report)


def cmd_decompose(args: argparse.Namespace, out: TextIO) -> int:
    src = _single(args.source)
    budget = _budget(args)
    if args.into is not None:
        targets = parse_expression(args.into).types()
        res = decompose_check(src, targets, budget, _read_hint(args.hint))
        payload = {
            "source": src.label,
            "targets": format_expression(targets),
            "status": res.status.value,
            "witness": res.witness.to_json() if res.witness else None,
            "nodes": res.nodes,
        }
        if args.format == "json":
            _dump(payload, out)
        else:
            out.write(f"{src.pretty} -> {pretty_expression(targets)}: {res.status.value}\n")
            if res.witness:
                for t, m in zip(targets, res.witness.maps):
                    out.write(f"  {t.pretty}: {list(m)}\n")
        return {Outcome.WITNESS: EXIT_OK, Outcome.NO_DECOMPOSITION: EXIT_IMPOSSIBLE}.get(res.status, EXIT_BUDGET)

    enum_ = enumerate_decomposition_targets(src, budget)
    payload = {
        "source": src.label,
        "complete": enum_.complete,
        "targets": [{"targets": format_expression(e.targets), "witness": e.witness.to_json()} for e in enum_.entries],
        "skipped": [format_expression(ms) for ms in enum_.skipped],
    }
    if args.format == "json":
        _dump(payload, out)
    else:
        for e in enum_.entries:
            out.write(f"{src.pretty} -> {pretty_expression(e.targets)}\n")
        for ms in enum_.skipped:
            out.write(f"{src.pretty} -> {pretty_expression(ms)}: BUDGET_EXCEEDED\n")
    return EXIT_OK if enum_.complete else EXIT_BUDGET


def cmd_canonical_omp(args: argparse.Namespace, out: TextIO) -> int:
    src = _single(args.source)
    dec = canonical_omp_decomposition(src)
    targets = dec.targets()
    payload = {
        "source": src.label,
        "targets": format_expression(targets),
        "parts": {str(p): n for p, n in dec.parts.items()},
        "count": dec.count,
        "witness": dec.witness().to_json(),
    }
    if args.format == "json":
        _dump(payload, out)
    else:
        out.write(f"{src.pretty} -> {pretty_expression(targets)}\n")
    return EXIT_OK


def cmd_collide_nodes(args: argparse.Namespace, out: TextIO) -> int:
    types = collide_nodes(args.n)
    payload = {"n": args.n, "types": [{"name": t.name, "key": t.key, "branches": t.r} for t in types]}
    if args.format == "json":
        _dump(payload, out)
    else:
        for t in types:
            out.write(f"{t.pretty}\n")
    return EXIT_OK


def _parts(text: str) -> list[int]:
    try:
        parts = [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise UsageError(f"--parts expects comma separated integers, got {text!r}") from None
    if not parts:
        raise UsageError("--parts is empty")
    return parts


def cmd_witness_omp(args: argparse.Namespace, out: TextIO) -> int:
    parts = _parts(args.parts)
    try:
        crit = omp_criterion(args.p, parts)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    payload: dict = {"p": args.p, "parts": parts, "criterion": crit.value, "incidence": None}
    if crit is Criterion.POSSIBLE:
        inc = construct_omp_witness(args.p, parts)
        payload["incidence"] = inc.to_json()
        payload["nodes"] = inc.nodes
        payload["note"] = "combinatorial incidence; realised by lines in general position apart from the prescribed points"
    else:
        payload["nodes"] = leftover_nodes(args.p, parts)
    if args.format == "json":
        _dump(payload, out)
    else:
        out.write(f"K{args.p} -> {parts}: {crit.value}\n")
        if payload["incidence"]:
            for pt in payload["incidence"]["points"]:
                if len(pt["lines"]) > 2:
                    out.write(f"  point on lines {pt['lines']}\n")
            out.write(f"  nodes: {payload['nodes']}\n")
    return {Criterion.POSSIBLE: EXIT_OK, Criterion.IMPOSSIBLE: EXIT_IMPOSSIBLE}.get(crit, EXIT_UNKNOWN)


def cmd_spectrum(args: argparse.Namespace, out: TextIO) -> int:
    p, q = sorted((args.p, args.q))
    try:
        m = BrieskornModel(p, q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sp = spectrum(m)
    payload = {"p": m.p, "q": m.q, "mu": m.mu, "spectrum": sp.to_json(), "signature": signature_steenbrink(m).to_json()}
    assert signature_from_spectrum(sp) == signature_steenbrink(m)
    if args.deviations and m.q % m.p == 0:
        _write_deviations(args, [make_named_type(f"K({m.p},{m.q // m.p})")])
    if args.format == "json":
        _dump(payload, out)
    else:
        s = payload["signature"]
        out.write(f"x^{m.p} + y^{m.q}: mu={m.mu} signature=({s['plus']}, {s['zero']}, {s['minus']})\n{sp}\n")
    return EXIT_OK


def _batch_problem(line: str, base: Path) -> DeformationProblem:
    data = json.loads(line)
    if not isinstance(data, dict) or "source" not in data or "targets" not in data:
        raise UsageError('each line needs {"source": ..., "targets": ...}')
    targets = data["targets"]
    if isinstance(targets, list):
        targets = "+".join(targets)
    src = _single(data["source"])
    hint = DecompositionWitness.from_json(data["hint"]) if data.get("hint") is not None else None
    return DeformationProblem(src, tuple(parse_expression(targets, base).types()), hint)


def cmd_batch(args: argparse.Namespace, out: TextIO) -> int:
    if args.file == "-":
        lines, base = sys.stdin.read().splitlines(), Path.cwd()
    else:
        path = Path(args.file)
        try:
            lines, base = path.read_text(encoding="utf-8").splitlines(), path.parent
        except OSError as exc:
            raise UsageError(f"cannot read {args.file}: {exc}") from None
    budget = _budget(args)
    code = EXIT_OK
    seen: list[SingularityType] = []
    for number, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            problem = _batch_problem(line, base)
        except (json.JSONDecodeError, UsageError, ExpressionError, GraphError, ValueError) as exc:
            print(f"line {number}: {exc}", file=sys.stderr)
            code = EXIT_USAGE
            continue
        report = aggregate_verdict(problem, budget, exhaustive=args.all_rules)
        seen.extend([problem.source, *problem.targets])
        if args.format == "json":
            _dump(report.to_json(), out, compact=True)
        else:
            out.write(f"{problem}: {report.verdict.value}\n")
        out.flush()
    _write_deviations(args, seen)
    return code


# --- wiring ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--budget", type=_positive, default=None, help="search node budget (default: $COLLIDERE_BUDGET or 10^7)")
    common.add_argument("--time-limit", type=_positive, default=None, metavar="MS", help="wall-clock cap for one search")
    common.add_argument("--deviations", metavar="PATH", help="write signature closed-form deviations here")

    parser = _Parser(prog="collidere", description="Delta-constant deformations of plane curve singularities with smooth branches.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("invariants", parents=[common], help="classical invariants, spectrum and signature")
    p.add_argument("type")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("check", parents=[common], help="run every obstruction on S -> targets")
    p.add_argument("source")
    p.add_argument("--into", required=True, metavar="EXPR")
    p.add_argument("--hint", metavar="FILE", help="decomposition witness to verify instead of searching")
    p.add_argument("--all-rules", action="store_true", help="run the full dual-graph search even after a failure")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("decompose", parents=[common], help="dual-graph decomposition or target enumeration")
    p.add_argument("source")
    p.add_argument("--into", metavar="EXPR")
    p.add_argument("--hint", metavar="FILE")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("canonical-omp", parents=[common], help="canonical splitting into ordinary multiple points")
    p.add_argument("source")
    p.set_defaults(func=cmd_canonical_omp)

    p = sub.add_parser("collide-nodes", parents=[common], help="types obtained by colliding N nodes")
    p.add_argument("n", type=_positive)
    p.set_defaults(func=cmd_collide_nodes)

    p = sub.add_parser("witness-omp", parents=[common], help="line arrangement for K_p -> sum K_pi + nodes")
    p.add_argument("p", type=_positive)
    p.add_argument("--parts", required=True, metavar="P1,P2,...")
    p.set_defaults(func=cmd_witness_omp)

    p = sub.add_parser("spectrum", parents=[common], help="spectrum and signature of x^p + y^q")
    p.add_argument("p", type=_positive)
    p.add_argument("q", type=_positive)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("batch", parents=[common], help="JSONL problems in, one report per line out")
    p.add_argument("file", help="JSONL file or - for stdin")
    p.add_argument("--all-rules", action="store_true")
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    handler: Callable[[argparse.Namespace, TextIO], int] = args.func
    try:
        if args.budget is None:
            args.budget = _default_budget()
        return handler(args, out)
    except (UsageError, ExpressionError, GraphError, ValueError) as exc:
        print(f"collidere: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
