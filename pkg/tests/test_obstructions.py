import pytest

from collidere.decomposition import DecompositionWitness, SearchBudget, canonical_omp_decomposition
from collidere.expressions import format_expression, parse_expression
from collidere.graph import enumerate_types_with_delta, make_named_type
from collidere.invariants import BrieskornModel, joint_spectrum, spectrum
from collidere.obstructions import (
    RULE_ORDER,
    DeformationProblem,
    Status,
    Verdict,
    aggregate_verdict,
    existence_rows,
    find_certificate,
    rule_counting,
    rule_dual_graph,
    rule_hirzebruch,
    rule_series,
    rule_spectrum_signature,
    rule_tau_es,
    spectrum_interval_violation,
)

P = DeformationProblem.parse


# --- individual rules ------------------------------------------------------


@pytest.mark.parametrize(
    "src,tgt,status",
    [("K5", "3K3+A1", Status.PASS), ("X9", "2D4", Status.PASS), ("D4", "2A1", Status.FAIL)],
)
def test_counting(src, tgt, status):
    assert rule_counting(P(src, tgt)).status is status


def test_counting_reports_which_checks_fail():
    out = rule_counting(P("D4", "2A1"))
    assert {"check": "delta", "source": 3, "targets": 2} in out.detail["failures"]
    assert out.detail["compared"]["mu"] == [4, 2]


def test_counting_branch_pairs():
    out = rule_counting(P("K5", "A7+2A1"))
    assert out.status is Status.FAIL
    assert any(f["check"] == "branch_pairs" for f in out.detail["failures"])


@pytest.mark.parametrize(
    "src,tgt,status",
    [
        ("K5", "3K3+A1", Status.FAIL),
        ("K(4,3)", "7A3+4A1", Status.FAIL),
        ("J10", "3A3", Status.PASS),
        ("D4", "3A1", Status.PASS),
    ],
)
def test_dual_graph(src, tgt, status):
    assert rule_dual_graph(P(src, tgt)).status is status


def test_dual_graph_budget_is_skipped():
    out = rule_dual_graph(P("K9", "12K3"), SearchBudget(max_nodes=2))
    assert out.status is Status.SKIPPED and out.detail["reason"] == "budget"


def test_dual_graph_delta_mismatch_is_skipped():
    assert rule_dual_graph(P("D4", "2A1")).status is Status.SKIPPED


def test_spectrum_signature_j10():
    out = rule_spectrum_signature(P("J10", "3A3"))
    assert out.status is Status.FAIL
    assert {"check": "mu_minus", "source": 8, "targets": 9} in out.detail["failures"]
    assert out.detail["open_windows"] == "FAIL"


def test_spectrum_signature_a3_into_nodes():
    assert rule_spectrum_signature(P("A3", "2A1")).status is Status.PASS


def test_spectrum_signature_k5_half_open_and_signature_pass():
    out = rule_spectrum_signature(P("K5", "3K3+A1"))
    assert out.detail["target_signature"] == {"plus": 0, "zero": 0, "minus": 13}
    assert out.detail["source_signature"] == {"plus": 2, "zero": 0, "minus": 14}
    assert out.detail["half_open_windows"] == "PASS"
    assert [f["check"] for f in out.detail["failures"]] == ["open_windows"]


def test_k5_open_window_count_exceeds_source():
    # the open unit window centred at -1/10 holds 13 target numbers against 12
    src = spectrum(BrieskornModel(5, 5))
    tgt = joint_spectrum([spectrum(BrieskornModel(3, 3))] * 3 + [spectrum(BrieskornModel(2, 2))])
    bad = spectrum_interval_violation(src, tgt, open_windows=True)
    assert bad is not None and bad["targets"] > bad["source"]
    assert spectrum_interval_violation(src, tgt) is None


def test_spectrum_skipped_without_model():
    assert rule_spectrum_signature(P("D6", "3A1+A1")).status is Status.SKIPPED


@pytest.mark.parametrize(
    "src,tgt,status,detail",
    [
        ("K21", "21K5", Status.FAIL, {"lhs": 0, "rhs": 168}),
        ("K9", "12K3", Status.PASS, {"lhs": 36, "rhs": 36}),
        ("K4", "2D4", Status.SKIPPED, {"reason": "precondition"}),
        ("J10", "3A3", Status.SKIPPED, {"reason": "not ordinary multiple points"}),
    ],
)
def test_hirzebruch(src, tgt, status, detail):
    out = rule_hirzebruch(P(src, tgt))
    assert out.status is status
    assert detail.items() <= out.detail.items()


@pytest.mark.parametrize(
    "src,tgt,status",
    [
        ("K5", "3K3+A1", Status.FAIL),
        ("K(4,3)", "7A3+4A1", Status.FAIL),
        ("K(3,2)", "2A3+2A1", Status.PASS),
        ("K4", "2D4", Status.FAIL),
        ("K4", "D6", Status.FAIL),
        ("K(3,3)", "3A5", Status.FAIL),
        ("K(3,3)", "2A5+A3+A1", Status.FAIL),
        ("K(3,3)", "2A5+3A1", Status.PASS),
        ("K(3,4)", "A7+3A5", Status.FAIL),
        ("K(3,4)", "A7+A5+A3+A5", Status.FAIL),
        ("K(3,4)", "A7+A5+A3+3A1", Status.PASS),
        ("K(3,2)", "A5+A3+A1", Status.FAIL),
        ("D6", "3A1+A1", Status.SKIPPED),
        ("K7", "K4+K3+6A1", Status.PASS),
    ],
)
def test_series(src, tgt, status):
    assert rule_series(P(src, tgt)).status is status


def test_series_not_applicable_criterion_is_skipped():
    out = rule_series(P("K9", "12K3"))
    assert out.status is Status.SKIPPED and out.detail["criterion"] == "NOT_APPLICABLE"


@pytest.mark.parametrize(
    "src,tgt,status",
    [("X9", "2D4", Status.WARN), ("J10", "3A3", Status.WARN), ("K3", "3A1", Status.PASS), ("D6", "3A1+A1", Status.SKIPPED)],
)
def test_tau_es(src, tgt, status):
    out = rule_tau_es(P(src, tgt))
    assert out.status is status


# --- aggregate verdicts ----------------------------------------------------


def test_x9_into_two_d4_impossible():
    rep = aggregate_verdict(P("X9", "2D4"))
    assert rep.verdict is Verdict.IMPOSSIBLE
    assert {"series", "dual_graph"} <= set(rep.failed)
    assert rep.warnings and "special moduli" in rep.warnings[0]


@pytest.mark.parametrize(
    "src,tgt,rule",
    [("K5", "3K3+A1", "dual_graph"), ("J10", "3A3", "spectrum_signature"), ("K(4,3)", "7A3+4A1", "dual_graph")],
)
def test_impossible_with_attribution(src, tgt, rule):
    rep = aggregate_verdict(P(src, tgt))
    assert rep.verdict is Verdict.IMPOSSIBLE and rule in rep.failed


def test_j10_independence():
    rep = aggregate_verdict(P("J10", "3A3"))
    assert rep.rule("dual_graph").status is Status.PASS
    assert rep.rule("spectrum_signature").status is Status.FAIL


def test_k21_independence(pg24):
    p = DeformationProblem(make_named_type("K21"), tuple([make_named_type("K5")] * 21), DecompositionWitness.from_json(pg24["witness"]))
    rep = aggregate_verdict(p)
    assert rep.rule("dual_graph").status is Status.PASS
    assert rep.rule("hirzebruch").status is Status.FAIL
    assert rep.verdict is Verdict.IMPOSSIBLE


def test_fano_configuration_rejected_despite_graph_decomposition():
    # seven triples on seven lines decompose K_7 but are not realisable over C
    rep = aggregate_verdict(P("K7", "7K3"))
    assert rep.rule("dual_graph").status is Status.PASS
    assert {"spectrum_signature", "hirzebruch"} <= set(rep.failed)


def test_k34_into_six_a3_unknown():
    rep = aggregate_verdict(P("K(3,4)", "6A3"))
    assert rep.verdict is Verdict.UNKNOWN and rep.failed == []


def test_k42_line_and_conics_possible():
    rep = aggregate_verdict(P("K(4,2)", "3D4+3A1"))
    assert rep.verdict is Verdict.POSSIBLE and rep.failed == []
    assert rep.certificate["kind"] == "existence-table"
    assert rep.rule("dual_graph").detail["witness"]


def test_rules_reported_in_fixed_order():
    rep = aggregate_verdict(P("K5", "3K3+A1"))
    assert tuple(r.id for r in rep.rules) == RULE_ORDER


def test_exhaustive_flag_runs_full_search():
    rep = aggregate_verdict(P("K5", "K4+D4+A1"), exhaustive=True)
    assert rep.rule("dual_graph").status in (Status.PASS, Status.FAIL)


def test_budget_never_turns_into_impossible():
    tiny = SearchBudget(max_nodes=1)
    for src, tgt in [("K9", "12K3"), ("K(3,4)", "6A3"), ("K(4,2)", "3D4+3A1"), ("K(3,3)", "2A5+3A1")]:
        rep = aggregate_verdict(P(src, tgt), tiny)
        assert rep.verdict is not Verdict.IMPOSSIBLE


def test_budget_exceeded_flag():
    rep = aggregate_verdict(P("K(3,4)", "6A3"), SearchBudget(max_nodes=1))
    assert rep.budget_exceeded and rep.verdict is Verdict.UNKNOWN


def test_text_report_uses_pretty_names():
    text = aggregate_verdict(P("K(3,4)", "6A3")).to_text()
    assert text.splitlines()[0] == "K(3,4) -> 6A_3: UNKNOWN"


# --- certificates ----------------------------------------------------------


def test_certificate_kinds():
    assert find_certificate(make_named_type("D4"), [make_named_type("D4")])["kind"] == "identity"
    assert find_certificate(make_named_type("A7"), parse_expression("4A1").types())["kind"] == "all-nodes"
    assert find_certificate(make_named_type("K6"), parse_expression("K4+K3+6A1").types())["kind"] == "omp-arrangement"
    cert = find_certificate(make_named_type("K(3,4)"), parse_expression("2A7+4A1").types())
    assert cert is not None


def test_refinement_certificate_nests():
    cert = find_certificate(make_named_type("K(4,2)"), parse_expression("2D4+6A1").types())
    assert cert["kind"] == "refinement"
    assert cert["base"]["targets"] == "3D4+3A1"
    assert [s["source"] for s in cert["steps"]] == ["D4"]


def test_no_certificate_for_obstructed():
    assert find_certificate(make_named_type("X9"), parse_expression("2D4").types()) is None


# --- golden soundness set --------------------------------------------------


def golden():
    cases = [(r.source, r.targets) for r in existence_rows()]
    for k in range(2, 7):
        cases.append((make_named_type(f"K(3,{k})"), tuple(parse_expression(f"2A{2 * k - 1}+{k}A1").types())))
    cases.append((make_named_type("K(4,2)"), tuple(parse_expression("3D4+3A1").types())))
    for d in range(1, 9):
        for s in enumerate_types_with_delta(d):
            dec = canonical_omp_decomposition(s)
            if dec.count > 1:
                cases.append((s, tuple(dec.targets())))
    return cases


@pytest.mark.parametrize("case", golden(), ids=lambda c: f"{c[0].label}->{format_expression(c[1])}")
def test_golden_set_never_fails(case):
    src, tgts = case
    rep = aggregate_verdict(DeformationProblem(src, tgts))
    assert rep.failed == []
    assert rep.verdict is Verdict.POSSIBLE


# --- monotonicity ----------------------------------------------------------


@pytest.mark.parametrize(
    "src,tgt",
    [("X9", "2D4"), ("J10", "3A3"), ("K5", "3K3+A1"), ("K(4,3)", "7A3+4A1"), ("D6", "A5+A1")],
)
def test_adding_a_node_keeps_impossible_impossible(src, tgt):
    # one more node on the targets needs one more delta on the source, so compare
    # the obstructed problem with the same targets plus a node: it stays obstructed
    base = aggregate_verdict(P(src, tgt))
    bigger = aggregate_verdict(P(src, tgt + "+A1"))
    if base.verdict is Verdict.IMPOSSIBLE:
        assert bigger.verdict is Verdict.IMPOSSIBLE


def test_problem_parse_and_json():
    p = P("K(3,4)", "A7 + 2 A5 + 2A1")
    assert p.to_json() == {"source": "K(3,4)", "targets": "A7+2A5+2A1"}
    with pytest.raises(ValueError):
        P("2A1", "A1")
