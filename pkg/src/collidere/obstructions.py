"""Obstructions to delta-constant deformations and the aggregate verdict.

Every rule returns a :class:`RuleOutcome`.  A FAIL is a proof that the
deformation cannot exist; rules that only carry heuristic information
(``tau_es``) emit WARN instead.  The verdict is IMPOSSIBLE as soon as one rule
fails, POSSIBLE when a constructive certificate is known, UNKNOWN otherwise.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from .decomposition import (
    Criterion,
    DecompositionWitness,
    Outcome,
    SearchBudget,
    canonical_omp_decomposition,
    construct_omp_witness,
    decompose_check,
    functional_violations,
    normalize_targets,
    omp_criterion,
)
from .expressions import format_expression, parse_expression, pretty_expression
from .graph import SingularityType, constant_weight, is_omp
from .invariants import (
    Signature,
    basic_invariants,
    binom2,
    brieskorn_model,
    interval_count,
    joint_spectrum,
    signature_closed_form,
    signature_steenbrink,
    spectrum,
    tau_es,
)


class Status(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"
    WARN = "WARN"


class Verdict(str, enum.Enum):
    POSSIBLE = "POSSIBLE"
    IMPOSSIBLE = "IMPOSSIBLE"
    UNKNOWN = "UNKNOWN"


RULE_ORDER = ("counting", "series", "dual_graph", "spectrum_signature", "hirzebruch", "tau_es")


@dataclass(frozen=True)
class DeformationProblem:
    source: SingularityType
    targets: tuple[SingularityType, ...]
    hint: DecompositionWitness | None = None

    def __post_init__(self) -> None:
        if not self.targets:
            raise ValueError("a deformation needs at least one target")
        object.__setattr__(self, "targets", tuple(self.targets))

    @classmethod
    def parse(cls, source: str, targets: str) -> "DeformationProblem":
        (n, s), = parse_expression(source).terms or [(0, None)]
        if n != 1:
            raise ValueError(f"source must be a single type, got {source!r}")
        return cls(s, tuple(parse_expression(targets).types()))

    def to_json(self) -> dict:
        return {"source": self.source.label, "targets": format_expression(self.targets)}

    def __str__(self) -> str:
        return f"{self.source.pretty} -> {pretty_expression(self.targets)}"


@dataclass(frozen=True)
class RuleOutcome:
    id: str
    status: Status
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"id": self.id, "status": self.status.value, "detail": self.detail}


def _skip(rule: str, reason: str, **extra) -> RuleOutcome:
    return RuleOutcome(rule, Status.SKIPPED, {"reason": reason, **extra})


# --- counting --------------------------------------------------------------


def rule_counting(p: DeformationProblem) -> RuleOutcome:
    """Semicontinuous integers, the branch-pair count and the weight functionals."""
    s = basic_invariants(p.source)
    ts = [basic_invariants(t) for t in p.targets]
    checks = [
        ("delta", s.delta, sum(t.delta for t in ts), s.delta == sum(t.delta for t in ts)),
        ("mu", s.mu, sum(t.mu for t in ts), s.mu >= sum(t.mu for t in ts)),
        ("kappa", s.kappa, sum(t.kappa for t in ts), s.kappa >= sum(t.kappa for t in ts)),
        ("mult", s.mult, max(t.mult for t in ts), s.mult >= max(t.mult for t in ts)),
        ("mu_minus_delta", s.mu - s.delta, sum(t.mu - t.delta for t in ts), s.mu - s.delta >= sum(t.mu - t.delta for t in ts)),
    ]
    failures = [
        {"check": name, "source": a, "targets": b} for name, a, b, ok in checks if not ok
    ]
    failures += functional_violations(p.source.graph, [t.graph for t in p.targets])
    detail = {"compared": {name: [a, b] for name, a, b, _ in checks}}
    if failures:
        return RuleOutcome("counting", Status.FAIL, {**detail, "failures": failures})
    return RuleOutcome("counting", Status.PASS, detail)


# --- series ----------------------------------------------------------------


def _pack(items: list[int], groups: int, size: int) -> list[list[int]] | None:
    """Split ``items`` into ``groups`` bins each summing exactly to ``size``."""
    if sum(items) != groups * size or any(x > size for x in items):
        return None
    items = sorted(items, reverse=True)
    bins: list[list[int]] = [[] for _ in range(groups)]
    load = [0] * groups

    def place(i: int) -> bool:
        if i == len(items):
            return True
        tried = set()
        for b in range(groups):
            if load[b] + items[i] > size or load[b] in tried:
                continue
            tried.add(load[b])
            load[b] += items[i]
            bins[b].append(items[i])
            if place(i + 1):
                return True
            bins[b].pop()
            load[b] -= items[i]
        return False

    return [list(b) for b in bins] if place(0) else None


def _three_branch_partitions(items: list[int], k: int) -> Iterable[tuple[list[int], list[int]]]:
    """All splits of ``items`` into two bins summing to ``k`` (as sorted lists)."""
    items = sorted(items, reverse=True)
    seen = set()

    def rec(i: int, a: list[int], b: list[int]):
        if i == len(items):
            if sum(a) == k and sum(b) == k:
                key = tuple(sorted((tuple(a), tuple(b))))
                if key not in seen:
                    seen.add(key)
                    yield list(a), list(b)
            return
        x = items[i]
        for bucket in (a, b):
            if sum(bucket) + x <= k:
                bucket.append(x)
                yield from rec(i + 1, a, b)
                bucket.pop()

    yield from rec(0, [], [])


def rule_series(p: DeformationProblem) -> RuleOutcome:
    """Ordinary multiple points, and x^p + y^(pk) splitting into A-type points."""
    src = p.source
    k = constant_weight(src)
    if k == 1 and src.r >= 3:
        if not all(is_omp(t) for t in p.targets):
            bad = [t.label for t in p.targets if not is_omp(t)]
            return RuleOutcome("series", Status.FAIL, {"reason": "ordinary point splits only into ordinary points", "offending": bad})
        parts = sorted((t.r for t in p.targets if t.r >= 3), reverse=True)
        if not parts:
            return RuleOutcome("series", Status.PASS, {"criterion": "nodes only"})
        verdict = omp_criterion(src.r, parts)
        detail = {"p": src.r, "parts": parts, "criterion": verdict.value, "lhs": src.r + binom2(len(parts)), "rhs": sum(parts)}
        if verdict is Criterion.IMPOSSIBLE:
            return RuleOutcome("series", Status.FAIL, detail)
        if verdict is Criterion.NOT_APPLICABLE:
            return _skip("series", "criterion not applicable", **detail)
        return RuleOutcome("series", Status.PASS, detail)

    if k is None or k < 2 or not all(t.r == 2 for t in p.targets):
        return _skip("series", "not an applicable series")

    pairs = binom2(src.r)
    items = [constant_weight(t) for t in p.targets]
    detail: dict = {"p": src.r, "k": k, "A_indices": sorted(items, reverse=True)}
    if max(items) > k:
        return RuleOutcome("series", Status.FAIL, {**detail, "reason": f"A-point with tangency above {k}"})
    if sum(items) != pairs * k:
        return RuleOutcome("series", Status.FAIL, {**detail, "reason": "weighted count differs from C(p,2)*k"})
    packing = _pack(items, pairs, k)
    if packing is None:
        return RuleOutcome("series", Status.FAIL, {**detail, "reason": f"no split into {pairs} groups of sum {k}"})
    detail["groups"] = packing

    if src.r == 3:
        n_k = items.count(k)
        if n_k > 2:
            return RuleOutcome("series", Status.FAIL, {**detail, "reason": f"{n_k} points of the top tangency"})
        if n_k == 2 and sorted(items) != sorted([k, k] + [1] * k):
            return RuleOutcome("series", Status.FAIL, {**detail, "reason": "two top points force the remaining points to be nodes"})
        if n_k == 1:
            rest = list(items)
            rest.remove(k)
            best = min((max(a) + max(b) for a, b in _three_branch_partitions(rest, k)), default=None)
            detail["l_plus_m"] = best
            if best is None or best > k + 1:
                return RuleOutcome("series", Status.FAIL, {**detail, "reason": f"every grouping has l+m > {k + 1}"})
    return RuleOutcome("series", Status.PASS, detail)


# --- dual graph ------------------------------------------------------------


def rule_dual_graph(p: DeformationProblem, budget: SearchBudget | None = None) -> RuleOutcome:
    if p.source.delta != sum(t.delta for t in p.targets):
        return _skip("dual_graph", "delta mismatch")
    res = decompose_check(p.source, p.targets, budget, p.hint)
    detail = {"nodes": res.nodes, "search": "hint" if p.hint is not None else "backtracking"}
    if res.status is Outcome.WITNESS:
        return RuleOutcome("dual_graph", Status.PASS, {**detail, "witness": res.witness.to_json()})
    if res.status is Outcome.NO_DECOMPOSITION:
        return RuleOutcome("dual_graph", Status.FAIL, {**detail, "reason": "no decomposition of the dual graph"})
    return _skip("dual_graph", "budget", **detail)


# --- spectrum and signature -------------------------------------------------


def _breakpoints(values: Iterable[Fraction]) -> list[Fraction]:
    return sorted({x for v in values for x in (v, v - 1)})


def spectrum_interval_violation(source_spec, target_spec, open_windows: bool = False) -> dict | None:
    """First unit window where the targets carry more spectral numbers than the source.

    Half-open windows (a, a+1] change only at the breakpoints {s, s-1}; open
    windows (a, a+1) are also probed at midpoints between breakpoints.
    """
    points = _breakpoints(source_spec.support() + target_spec.support())
    if open_windows:
        points = sorted(points + [(x + y) / 2 for x, y in zip(points, points[1:])])
    for a in points:
        s = interval_count(source_spec, a, a + 1, lo_open=True, hi_open=open_windows)
        t = interval_count(target_spec, a, a + 1, lo_open=True, hi_open=open_windows)
        if t > s:
            closing = ")" if open_windows else "]"
            return {"interval": f"({a}, {a + 1}{closing}", "source": s, "targets": t}
    return None


def signature_deviations(types: Iterable[SingularityType]) -> list[dict]:
    """Types whose parity closed form disagrees with the monomial count."""
    out = []
    for t in sorted(set(types)):
        m = brieskorn_model(t)
        if m is None:
            continue
        k = m.q // m.p
        direct = signature_steenbrink(m)
        try:
            closed = signature_closed_form(m.p, k)
        except ArithmeticError as exc:
            out.append({"type": t.label, "p": m.p, "k": k, "enumerated": direct.to_json(), "closed_form": str(exc)})
            continue
        if closed != direct:
            out.append({"type": t.label, "p": m.p, "k": k, "enumerated": direct.to_json(), "closed_form": closed.to_json()})
    return out


def rule_spectrum_signature(p: DeformationProblem) -> RuleOutcome:
    models = [brieskorn_model(t) for t in (p.source, *p.targets)]
    if any(m is None for m in models):
        return _skip("spectrum_signature", "no Brieskorn model")
    src_m, tgt_m = models[0], models[1:]
    src_spec = spectrum(src_m)
    tgt_spec = joint_spectrum(spectrum(m) for m in tgt_m)
    s_sig = signature_steenbrink(src_m)
    t_sig = sum((signature_steenbrink(m) for m in tgt_m), Signature(0, 0, 0))
    slack = s_sig.mu - t_sig.mu
    detail: dict = {"source_signature": s_sig.to_json(), "target_signature": t_sig.to_json()}
    failures = []
    if t_sig.plus > s_sig.plus:
        failures.append({"check": "mu_plus", "source": s_sig.plus, "targets": t_sig.plus})
    if t_sig.minus > s_sig.minus:
        failures.append({"check": "mu_minus", "source": s_sig.minus, "targets": t_sig.minus})
    if t_sig.zero > s_sig.zero + slack:
        failures.append({"check": "mu_zero", "source": s_sig.zero + slack, "targets": t_sig.zero})
    for kind, open_windows in (("half_open_windows", False), ("open_windows", True)):
        bad = spectrum_interval_violation(src_spec, tgt_spec, open_windows)
        detail[kind] = "PASS" if bad is None else "FAIL"
        if bad is not None:
            failures.append({"check": kind, **bad})
    if failures:
        return RuleOutcome("spectrum_signature", Status.FAIL, {**detail, "failures": failures})
    return RuleOutcome("spectrum_signature", Status.PASS, detail)


# --- Hirzebruch ------------------------------------------------------------


def rule_hirzebruch(p: DeformationProblem) -> RuleOutcome:
    """Hirzebruch's line-arrangement inequality, read on the multiple points."""
    src = p.source
    if not is_omp(src) or not all(is_omp(t) for t in p.targets):
        return _skip("hirzebruch", "not ordinary multiple points")
    n = Counter(t.r for t in p.targets)
    lines = src.r
    if n[lines] or n[lines - 1] or n[lines - 2]:
        return _skip("hirzebruch", "precondition", counts={str(i): n[i] for i in (lines, lines - 1, lines - 2)})
    lhs = 4 * n[2] + 3 * n[3]
    rhs = 4 * lines + sum(4 * (2 * i - 9) * c for i, c in n.items() if i >= 5)
    detail = {"lhs": lhs, "rhs": rhs, "counts": {str(i): c for i, c in sorted(n.items())}}
    return RuleOutcome("hirzebruch", Status.FAIL if lhs < rhs else Status.PASS, detail)


# --- tau_es ----------------------------------------------------------------


def rule_tau_es(p: DeformationProblem) -> RuleOutcome:
    src = tau_es(p.source)
    tgt = [tau_es(t) for t in p.targets]
    if src is None or any(x is None for x in tgt):
        return _skip("tau_es", "codimension unknown")
    detail = {"source": src, "targets": sum(tgt)}
    if src <= sum(tgt):
        return RuleOutcome("tau_es", Status.WARN, {**detail, "note": "the generic representative cannot deform this way; special moduli required"})
    return RuleOutcome("tau_es", Status.PASS, detail)


# --- certificates ----------------------------------------------------------


@dataclass(frozen=True)
class ExistenceRow:
    source: SingularityType
    targets: tuple[SingularityType, ...]
    citation: str


@lru_cache(maxsize=None)
def existence_rows() -> tuple[ExistenceRow, ...]:
    """The shipped table of deformations known to exist by construction."""
    data = json.loads(resources.files("collidere").joinpath("data/existence.json").read_text(encoding="utf-8"))
    rows = []
    for row in data["entries"]:
        (_, src), = parse_expression(row["source"]).terms
        rows.append(ExistenceRow(src, normalize_targets(parse_expression(row["targets"]).types()), row["citation"]))
    return tuple(rows)


def _keys(types: Iterable[SingularityType]) -> tuple[str, ...]:
    return tuple(sorted(t.key for t in types))


def _table_citation(source: SingularityType, targets: Sequence[SingularityType]) -> str | None:
    keys = _keys(targets)
    return next((r.citation for r in existence_rows() if r.source == source and _keys(r.targets) == keys), None)


def _direct_certificate(source: SingularityType, targets: tuple[SingularityType, ...]) -> dict | None:
    if len(targets) == 1 and targets[0] == source:
        return {"kind": "identity"}
    citation = _table_citation(source, targets)
    if citation is not None:
        return {"kind": "existence-table", "citation": citation}
    if all(t.r == 2 and t.delta == 1 for t in targets):
        return {"kind": "all-nodes"}
    if source.r == 2 and all(t.r == 2 for t in targets):
        return {"kind": "a-splitting"}
    if is_omp(source) and all(is_omp(t) for t in targets):
        parts = sorted((t.r for t in targets if t.r >= 3), reverse=True)
        if omp_criterion(source.r, parts) is Criterion.POSSIBLE:
            return {"kind": "omp-arrangement", "incidence": construct_omp_witness(source.r, parts).to_json()}
    canon = canonical_omp_decomposition(source)
    if _keys(canon.targets()) == _keys(targets):
        return {"kind": "canonical-omp", "witness": canon.witness().to_json()}
    return None


def _split(targets: list[SingularityType], sizes: list[int]) -> Iterable[list[list[SingularityType]]]:
    """Assign every target to a bin so that bin i has total delta ``sizes[i]``."""
    groups: list[list[SingularityType]] = [[] for _ in sizes]
    load = [0] * len(sizes)

    def rec(i: int):
        if i == len(targets):
            if load == sizes:
                yield [list(g) for g in groups]
            return
        t = targets[i]
        for b in range(len(sizes)):
            if load[b] + t.delta <= sizes[b]:
                groups[b].append(t)
                load[b] += t.delta
                yield from rec(i + 1)
                load[b] -= t.delta
                groups[b].pop()

    yield from rec(0)


@lru_cache(maxsize=4096)
def _certify(source: SingularityType, targets: tuple[SingularityType, ...]) -> dict | None:
    direct = _direct_certificate(source, targets)
    if direct is not None:
        return direct
    bases = [r.targets for r in existence_rows() if r.source == source]
    canon = canonical_omp_decomposition(source).targets()
    if len(canon) > 1:
        bases.append(canon)
    for base in bases:
        if _keys(base) == _keys(targets):
            continue
        sizes = [b.delta for b in base]
        tried = set()
        for groups in _split(sorted(targets, key=lambda t: (-t.delta, t.key)), sizes):
            sig = tuple(sorted((b.key, _keys(g)) for b, g in zip(base, groups)))
            if sig in tried:
                continue
            tried.add(sig)
            steps = []
            for b, g in zip(base, groups):
                cert = _certify(b, normalize_targets(g))
                if cert is None:
                    break
                if cert["kind"] != "identity":
                    steps.append({"source": b.label, "targets": format_expression(g), "certificate": cert})
            else:
                return {
                    "kind": "refinement",
                    "base": {"targets": format_expression(base), "certificate": _direct_certificate(source, normalize_targets(base))},
                    "steps": steps,
                }
    return None


def find_certificate(source: SingularityType, targets: Sequence[SingularityType]) -> dict | None:
    """A constructive reason the deformation exists, or ``None``."""
    return _certify(source, normalize_targets(targets))


# --- aggregation -----------------------------------------------------------


@dataclass(frozen=True)
class ObstructionReport:
    problem: DeformationProblem
    rules: tuple[RuleOutcome, ...]
    verdict: Verdict
    certificate: dict | None = None
    warnings: tuple[str, ...] = ()
    deviations: tuple[dict, ...] = ()

    def rule(self, rule_id: str) -> RuleOutcome:
        return next(r for r in self.rules if r.id == rule_id)

    @property
    def failed(self) -> list[str]:
        return [r.id for r in self.rules if r.status is Status.FAIL]

    @property
    def budget_exceeded(self) -> bool:
        return any(r.status is Status.SKIPPED and r.detail.get("reason") == "budget" for r in self.rules)

    def to_json(self) -> dict:
        return {
            "problem": self.problem.to_json(),
            "rules": [r.to_json() for r in self.rules],
            "verdict": self.verdict.value,
            "failed": self.failed,
            "certificate": self.certificate,
            "warnings": list(self.warnings),
        }

    def to_text(self) -> str:
        head = f"{self.problem}: {self.verdict.value}"
        if self.failed:
            head += f" ({', '.join(self.failed)})"
        lines = [head]
        for r in self.rules:
            reason = r.detail.get("reason")
            lines.append(f"  {r.id:<19} {r.status.value}" + (f" [{reason}]" if reason else ""))
        if self.certificate is not None:
            lines.append(f"  certificate: {self.certificate['kind']}")
        lines.extend(f"  warning: {w}" for w in self.warnings)
        return "\n".join(lines)


ATTRIBUTION_NODES = 100_000


def _capped(budget: SearchBudget | None) -> SearchBudget:
    b = budget or SearchBudget()
    return SearchBudget(min(b.max_nodes, ATTRIBUTION_NODES), b.max_millis)


def aggregate_verdict(
    p: DeformationProblem,
    budget: SearchBudget | None = None,
    exhaustive: bool = False,
) -> ObstructionReport:
    """Run the rules in their fixed order.

    After a FAIL the exponential dual-graph search only runs under a small
    node cap (unless ``exhaustive``), so it can still be attributed without
    delaying a verdict that is already settled.
    """
    outcomes = []
    failed = False
    for rule_id in RULE_ORDER:
        if rule_id == "dual_graph":
            if failed and not exhaustive:
                # attribution only: the verdict is already settled
                out = rule_dual_graph(p, _capped(budget))
                if out.status is Status.SKIPPED:
                    out = _skip("dual_graph", "earlier rule failed", nodes=out.detail.get("nodes", 0))
            else:
                out = rule_dual_graph(p, budget)
        else:
            out = _RULES[rule_id](p)
        failed = failed or out.status is Status.FAIL
        outcomes.append(out)

    warnings = []
    tau = next(o for o in outcomes if o.id == "tau_es")
    if tau.status is Status.WARN:
        warnings.append(tau.detail["note"])
    certificate = None
    if p.source.delta == sum(t.delta for t in p.targets):
        certificate = find_certificate(p.source, p.targets)
    if failed:
        verdict = Verdict.IMPOSSIBLE
        if certificate is not None:
            warnings.append(f"conflict: certificate {certificate['kind']} exists but a rule failed")
    elif certificate is not None:
        verdict = Verdict.POSSIBLE
    else:
        verdict = Verdict.UNKNOWN
    deviations = signature_deviations((p.source, *p.targets))
    return ObstructionReport(p, tuple(outcomes), verdict, certificate, tuple(warnings), tuple(deviations))


_RULES = {
    "counting": rule_counting,
    "series": rule_series,
    "spectrum_signature": rule_spectrum_signature,
    "hirzebruch": rule_hirzebruch,
    "tau_es": rule_tau_es,
}
