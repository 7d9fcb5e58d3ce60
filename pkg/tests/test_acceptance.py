"""Acceptance suite: one test per acceptance criterion.

Each test prints a single summary line on success (visible with ``-rP`` or
on failure via captured output); the ``pytest -v`` status line per test is
the pass/fail record.  The randomized criteria use fixed seeds so the run
is reproducible; case counts and time budgets are asserted explicitly.
"""

import io
import random
import time

import pytest

from mtlcheck.engine import record_tau, record_truth, run_pipeline
from mtlcheck.formula import parse_formula, to_text
from mtlcheck.semantics import (
    ANCHOR_ZERO,
    LAZY,
    POINT,
    eval_lazy,
    eval_point,
    eval_table,
)
from mtlcheck.trace import GeneratorConfig, generate_trace, parse_trace, word
from mtlcheck.transforms import decompose, lazy_translation
from oracles import random_formula, random_word

EXAMPLE_WORD = word(
    (("p",), 1), (("p",), 2), ((), 4), (("p",), 6),
    (("p",), 8), ((), 9), ((), 10),
)
PHI = parse_formula("F[3,7] p")

TWO_ELEMENT_WORD = word((("q",), 1), (("p",), 7))
PSI_1 = parse_formula("F=6 p")
PSI_2 = parse_formula("F=3 (F=3 p)")


class _Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds
        self.start = time.perf_counter()

    def done(self, label: str, detail: str = "") -> None:
        elapsed = time.perf_counter() - self.start
        assert elapsed < self.seconds, (
            f"{label} exceeded its {self.seconds:.0f}s budget: {elapsed:.1f}s"
        )
        suffix = f" — {detail}" if detail else ""
        print(f"{label}: PASS ({elapsed:.1f}s){suffix}")


def test_criterion_1_worked_example_point_run():
    """The pipeline reproduces the worked example's reducer output exactly."""
    budget = _Budget(1.0)
    result = run_pipeline(EXAMPLE_WORD, PHI, collect_streams=True)
    root_stream = sorted(result.stream_of(result.table.root), reverse=True)
    got = [(record_truth(r), record_tau(r)) for r in root_stream]
    assert got == [
        (False, 10), (False, 9), (False, 8), (False, 6),
        (True, 4), (True, 2), (True, 1),
    ]
    assert result.verdict is True
    budget.done("criterion 1", "root reducer stream and verdict match")


def test_criterion_2_decomposition_needs_the_translation():
    """Decomposing without translating changes the point reading; after
    translation the lazy reading at position timestamps restores it."""
    budget = _Budget(1.0)
    phi_point_row = [eval_point(EXAMPLE_WORD, i, PHI) for i in range(len(EXAMPLE_WORD))]
    assert phi_point_row == [True, True, True, False, False, False, False]

    bare_rewrite = decompose(PHI, 4)
    assert to_text(bare_rewrite) == "F[3,4] p | F=4 (F[0,3] p)"
    bare_row = [
        eval_point(EXAMPLE_WORD, i, bare_rewrite) for i in range(len(EXAMPLE_WORD))
    ]
    assert bare_row == [False, True, True, False, False, False, False]
    mismatch = [
        EXAMPLE_WORD.timestamp_at(i)
        for i, (a, b) in enumerate(zip(phi_point_row, bare_row))
        if a != b
    ]
    assert mismatch == [1]

    checked = decompose(lazy_translation(PHI), 4)
    lazy_row = [
        eval_lazy(EXAMPLE_WORD, t, checked) for t in EXAMPLE_WORD.timestamps
    ]
    assert lazy_row == phi_point_row
    budget.done("criterion 2", "bare rewrite flips timestamp 1; translated rewrite agrees everywhere")


def test_criterion_3_point_and_lazy_readings_disagree():
    """The two-element example separates point from lazy semantics."""
    budget = _Budget(1.0)
    assert eval_point(TWO_ELEMENT_WORD, 0, PSI_1) is True
    assert eval_point(TWO_ELEMENT_WORD, 0, PSI_2) is False

    first = TWO_ELEMENT_WORD.timestamps[0]
    assert eval_lazy(TWO_ELEMENT_WORD, first, PSI_1) is True
    assert eval_lazy(TWO_ELEMENT_WORD, first, PSI_2) is True

    assert eval_lazy(TWO_ELEMENT_WORD, 0, PSI_1) is False
    assert eval_lazy(TWO_ELEMENT_WORD, 0, PSI_2) is False
    budget.done("criterion 3", "point separates the pair, lazy readings agree per anchor")


def test_criterion_4_translation_equivalence():
    """Point truth at a position equals lazy truth of the translation at
    that position's timestamp, over at least 10,000 random triples."""
    budget = _Budget(300.0)
    rng = random.Random(2024_04_01)
    triples = 0
    while triples < 10_500:
        f = random_formula(rng, max_depth=3, max_bound=10)
        w = random_word(rng, max_len=8, max_timestamp=30)
        translated = lazy_translation(f)
        for _ in range(5):
            i = rng.randrange(len(w))
            point_value = eval_point(w, i, f)
            lazy_value = eval_lazy(w, w.timestamp_at(i), translated)
            assert point_value == lazy_value, (
                f"translation mismatch at position {i} of {w.elements} "
                f"for {to_text(f)}"
            )
            triples += 1
    budget.done("criterion 4", f"{triples} random (formula, word, position) triples agree")


def test_criterion_5_rewrite_equivalences():
    """The window-budget rewrite and the window identities it rests on
    preserve lazy truth values over large random populations."""
    budget = _Budget(300.0)
    rng = random.Random(2024_04_02)

    from mtlcheck.transforms import max_bounded_upper

    rewritten_cases = 0
    while rewritten_cases < 5_000:
        f = random_formula(rng, max_depth=2, max_bound=8)
        w = random_word(rng, max_len=6, max_timestamp=24)
        k = rng.randint(1, 4)
        rewritten = decompose(f, k)
        assert max_bounded_upper(rewritten) <= k
        for t in (0, *w.timestamps):
            assert eval_lazy(w, t, rewritten) == eval_lazy(w, t, f), (
                f"budget rewrite changed the value of {to_text(f)} at {t} with k={k}"
            )
        rewritten_cases += 1

    # stacked windows compose by interval sum (closed-closed pairs and
    # exact singleton factors: the shapes the rewrite itself produces)
    from mtlcheck.formula import (
        Eventually,
        ExactStep,
        Interval,
        Or,
        minkowski_sum,
        overlap_union,
        singleton,
    )

    def closed(lo_max: int, width_max: int) -> Interval:
        lo = rng.randint(0, lo_max)
        return Interval(lo, lo + rng.randint(0, width_max), True, True)

    stacked_cases = 0
    while stacked_cases < 2_000:
        w = random_word(rng, max_len=5, max_timestamp=18)
        inner = random_formula(rng, max_depth=1, max_bound=5)
        if rng.random() < 0.5:
            pair = (singleton(rng.randint(0, 6)), closed(5, 4))
            i, j = pair if rng.random() < 0.5 else reversed(pair)
        else:
            i, j = closed(5, 4), closed(5, 4)
        nested = Eventually(i, Eventually(j, inner))
        flat = Eventually(minkowski_sum(i, j), inner)
        t = rng.choice((0, w.timestamps[0]))
        assert eval_lazy(w, t, nested) == eval_lazy(w, t, flat)
        stacked_cases += 1

    # chains of equal exact steps collapse to one long step
    chain_cases = 0
    while chain_cases < 2_000:
        w = random_word(rng, max_len=5, max_timestamp=18)
        inner = random_formula(rng, max_depth=1, max_bound=5)
        step = rng.randint(1, 6)
        count = rng.randint(1, 4)
        chained = inner
        for _ in range(count):
            chained = ExactStep(step, chained)
        flat = ExactStep(step * count, inner)
        t = rng.choice((0, w.timestamps[0]))
        assert eval_lazy(w, t, chained) == eval_lazy(w, t, flat)
        chain_cases += 1

    # overlapping windows merge to their union
    union_cases = 0
    while union_cases < 2_000:
        w = random_word(rng, max_len=5, max_timestamp=18)
        inner = random_formula(rng, max_depth=1, max_bound=5)
        i = closed(6, 4)
        lo = rng.randint(i.lower, i.upper)  # guaranteed overlap
        j = Interval(lo, lo + rng.randint(0, 4), True, True)
        split = Or(Eventually(i, inner), Eventually(j, inner))
        merged = Eventually(overlap_union(i, j), inner)
        t = rng.choice((0, w.timestamps[0]))
        assert eval_lazy(w, t, split) == eval_lazy(w, t, merged)
        union_cases += 1

    budget.done(
        "criterion 5",
        f"{rewritten_cases} rewrites, {stacked_cases} stacked, "
        f"{chain_cases} chains, {union_cases} unions agree",
    )


def test_criterion_6_pipeline_matches_the_evaluator():
    """Pipeline verdicts and intermediate truth streams match the reference
    evaluation table and are identical across worker counts, over at least
    2,000 random cases."""
    budget = _Budget(600.0)
    rng = random.Random(2024_04_03)
    cases = 0
    while cases < 2_000:
        f = random_formula(rng, max_depth=3, max_bound=8)
        w = random_word(rng, max_len=8, max_timestamp=24)
        mode = rng.randrange(3)
        if mode == 0:
            kwargs = {}
            expected = eval_point(w, 0, f)
        elif mode == 1:
            kwargs = dict(semantics=LAZY, window_budget=rng.randint(1, 5))
            expected = eval_point(w, 0, f)  # first-position anchor
        else:
            kwargs = dict(
                semantics=LAZY, window_budget=rng.randint(1, 5), anchor=ANCHOR_ZERO
            )
            expected = eval_lazy(w, 0, lazy_translation(f))
        base = run_pipeline(w, f, workers=1, collect_streams=True, **kwargs)
        assert base.verdict == expected, (
            f"verdict mismatch for {to_text(f)} over {w.elements} ({kwargs})"
        )
        if mode == 0:
            reference = eval_table(w, f, POINT)
            index_of = {t: i for i, t in enumerate(w.timestamps)}
            for node in base.table.nodes:
                row = reference.row(node)
                for r in base.streams[base.table.id_of[node]]:
                    assert row[index_of[record_tau(r)]] == record_truth(r)
        else:
            for node in base.table.nodes:
                target = base.guard_map[node]
                for r in base.streams[base.table.id_of[node]]:
                    assert eval_lazy(w, record_tau(r), target) == record_truth(r)
        for workers in (2, 4):
            other = run_pipeline(w, f, workers=workers, collect_streams=True, **kwargs)
            assert other.verdict == base.verdict
            assert other.streams == base.streams
        cases += 1
    budget.done("criterion 6", f"{cases} cases x workers 1/2/4 agree with the evaluator")


@pytest.fixture(scope="module")
def heavy_traces():
    traces = {}
    for name, kwargs in (
        ("force_p", dict(force_p=True, suppress_q=False)),
        ("suppress_q", dict(force_p=False, suppress_q=True)),
    ):
        buf = io.BytesIO()
        generate_trace(GeneratorConfig(n=100_000, m=20, seed=0, **kwargs), buf)
        buf.seek(0)
        traces[name] = parse_trace(buf)
    return traces


def test_criterion_7_window_peaks_at_scale(heavy_traces):
    """Over 100,000-element traces the undecomposed peak window is N+1
    records and the budgeted peak stays within K+1."""
    budget = _Budget(600.0)
    details = []
    for template, trace_name, expected_verdict in (
        ("F[0,{N}] p", "force_p", True),      # p forced everywhere
        ("G[0,{N}] q", "suppress_q", False),  # q never holds: worst case for G
    ):
        w = heavy_traces[trace_name]
        for n in (10_000, 50_000):
            f = parse_formula(template.format(N=n))
            res = run_pipeline(w, f)
            assert res.stats.peak_win_records == n + 1, (
                f"undecomposed peak for {to_text(f)}: {res.stats.peak_win_records}"
            )
            assert res.verdict is expected_verdict
            for k in (1_000, 5_000):
                res_k = run_pipeline(w, f, window_budget=k)
                assert res_k.stats.peak_win_records <= k + 1, (
                    f"budgeted peak for {to_text(f)} at k={k}: "
                    f"{res_k.stats.peak_win_records}"
                )
                assert res_k.verdict is expected_verdict
            details.append(f"{to_text(f)} ok")
    budget.done("criterion 7", "; ".join(details))


def test_criterion_8_budget_tradeoff_is_monotone(heavy_traces):
    """Shrinking the window budget trades peak memory for iterations."""
    budget = _Budget(900.0)
    w = heavy_traces["force_p"]
    f = parse_formula("F[0,50000] p")
    peaks, heights, iterations, walls = [], [], [], []
    for k in (25_000, 10_000, 5_000, 2_000):
        start = time.perf_counter()
        res = run_pipeline(w, f, window_budget=k)
        walls.append(time.perf_counter() - start)
        peaks.append(res.stats.peak_win_records)
        heights.append(res.table.height)
        iterations.append(res.stats.iterations)
        assert res.verdict is True
    assert peaks == sorted(peaks, reverse=True)
    assert len(set(peaks)) == len(peaks), f"peaks not strictly decreasing: {peaks}"
    for series, label in ((heights, "heights"), (iterations, "iterations")):
        assert series == sorted(series), f"{label} not increasing: {series}"
        assert len(set(series)) == len(series), f"{label} not strictly increasing: {series}"
    assert walls[-1] > walls[0], (
        f"smallest budget should cost the most wall time: {walls}"
    )
    budget.done(
        "criterion 8",
        f"peaks {peaks}, heights {heights}, iterations {iterations}, "
        f"walls {[f'{x:.1f}s' for x in walls]}",
    )
