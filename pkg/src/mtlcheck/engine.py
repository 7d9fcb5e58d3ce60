"""Local multi-worker MapReduce-style pipeline for trace checking.

The pipeline evaluates one key per distinct subformula.  A read step turns
trace elements into atom records; each later iteration reduces all keys of
the next height, so a run takes as many iterations as the formula is tall.
Mappers route every record to the keys of its superformulas and, for
position records, plant virtual-instant markers; reducers process one
key's records in descending timestamp order with a sliding window whose
retention span is the key's interval widened to zero.

Records are packed into single integers::

    (timestamp << 24) | (child_id << 3) | flags

with flag bits 1 = truth, 2 = position record, 4 = sanctioned marker.
Child id 0 is reserved for the position marker; formula node ids start
at 1.  A record's key is implicit in the per-key list holding it.

Record discipline: plain window and until reducers admit only position
records as witnesses or violations (this stands in for the stripped
position-marker guards; see transforms), while exact-step reducers admit
any record.  Reducers emit output exactly at instants where their input
holds a position record or a sanctioned marker; unsanctioned markers are
consumed but never answered, since the instants they point at are not
always instants the key's operands were evaluated at.

For throughput the runner plants sanctioned markers for each key up front
from the precomputed offset sets instead of emitting them record by
record through ``map_step``; the two routes produce identical per-key
streams after duplicate elimination (the mapper's marker instants are
exactly the position set shifted by the key's offsets), which the test
suite checks by driving the composed single-step operators directly.
"""

from __future__ import annotations

import os
import tempfile
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .formula import (
    Act,
    And,
    Atom,
    Eventually,
    ExactStep,
    Formula,
    FormulaTable,
    Globally,
    Not,
    Or,
    Until,
    analyze,
    children,
    convex_union_with_zero,
    node_interval,
    to_text,
)
from .semantics import ANCHOR_FIRST, ANCHOR_ZERO, LAZY, POINT
from .trace import TimedWord, TraceError, parse_trace_lines
from .transforms import pipeline_formula

ACT_CHILD = 0
CHILD_BITS = 21
CHILD_MASK = (1 << CHILD_BITS) - 1
TAU_SHIFT = CHILD_BITS + 3
TRUTH_FLAG = 1
POSITION_FLAG = 2
SANCTIONED_FLAG = 4

BYTES_PER_RECORD_ESTIMATE = 16  # window entries held as packed 16-byte slots

DEFAULT_BLOCK_SIZE = 4096

TMPDIR_ENV = "MTLCHECK_TMPDIR"


class EngineError(RuntimeError):
    """Raised when pipeline configuration or invariants are violated."""


# ---------------------------------------------------------------------------
# Packed records
# ---------------------------------------------------------------------------

def pack_record(tau: int, child: int, truth: bool, position: bool, sanctioned: bool) -> int:
    flags = (TRUTH_FLAG if truth else 0) | (POSITION_FLAG if position else 0) | (
        SANCTIONED_FLAG if sanctioned else 0
    )
    return (tau << TAU_SHIFT) | (child << 3) | flags


def record_tau(r: int) -> int:
    return r >> TAU_SHIFT


def record_child(r: int) -> int:
    return (r >> 3) & CHILD_MASK


def record_truth(r: int) -> bool:
    return bool(r & TRUTH_FLAG)


def record_position(r: int) -> bool:
    return bool(r & POSITION_FLAG)


def record_sanctioned(r: int) -> bool:
    return bool(r & SANCTIONED_FLAG)


# ---------------------------------------------------------------------------
# Spill framing
# ---------------------------------------------------------------------------

def write_varint(buf: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varints encode non-negative integers")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def read_varint(data: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7


def encode_spill_frame(buf: bytearray, key: int, record: int) -> None:
    """Frame layout: key id, child id, one truth/flags byte, timestamp."""
    write_varint(buf, key)
    write_varint(buf, record_child(record))
    buf.append(record & 7)
    write_varint(buf, record_tau(record))


def decode_spill_frames(data: bytes) -> Iterable[tuple[int, int]]:
    pos = 0
    end = len(data)
    while pos < end:
        key, pos = read_varint(data, pos)
        child, pos = read_varint(data, pos)
        flags = data[pos]
        pos += 1
        tau, pos = read_varint(data, pos)
        yield key, (tau << TAU_SHIFT) | (child << 3) | flags
    if pos != end:
        raise EngineError("truncated spill frame")


class _Inboxes:
    """Per-key record buffers that spill to disk over a record budget."""

    def __init__(self, spill_budget: Optional[int], tmpdir: Optional[str]) -> None:
        self.lists: dict[int, list[int]] = {}
        self.budget = spill_budget
        self.buffered = 0
        self.segments: list[str] = []
        self.dir = tmpdir or os.environ.get(TMPDIR_ENV) or tempfile.gettempdir()

    def extend(self, key: int, records: Sequence[int]) -> None:
        self.lists.setdefault(key, []).extend(records)
        if self.budget is not None:
            self.buffered += len(records)
            if self.buffered > self.budget:
                self._spill()

    def _spill(self) -> None:
        buf = bytearray()
        for key in sorted(self.lists):
            for record in self.lists[key]:
                encode_spill_frame(buf, key, record)
        path = os.path.join(
            self.dir, f"mtlcheck-spill-{os.getpid()}-{id(self)}-{len(self.segments)}.bin"
        )
        with open(path, "wb") as fh:
            fh.write(buf)
        self.segments.append(path)
        self.lists.clear()
        self.buffered = 0

    def consume(self, key: int) -> list[int]:
        records = self.lists.pop(key, [])
        for path in self.segments:
            with open(path, "rb") as fh:
                data = fh.read()
            records.extend(rec for frame_key, rec in decode_spill_frames(data) if frame_key == key)
        return records

    def close(self) -> None:
        for path in self.segments:
            try:
                os.unlink(path)
            except OSError:
                pass
        self.segments.clear()
        self.lists.clear()


# ---------------------------------------------------------------------------
# Pipeline operators
# ---------------------------------------------------------------------------

def atom_records(word: TimedWord, table: FormulaTable) -> dict[int, list[int]]:
    """The read step: one position record per trace element and atom key."""
    per_atom: dict[int, list[int]] = {}
    names = [(node.name, table.id_of[node]) for node in table.nodes if isinstance(node, Atom)]
    for name, aid in names:
        per_atom[aid] = []
    for atoms, tau in word.elements:
        for name, aid in names:
            per_atom[aid].append(pack_record(tau, aid, name in atoms, True, False))
    return per_atom


def input_read(
    lines: Sequence[Union[str, bytes]],
    table: FormulaTable,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> tuple[TimedWord, dict[int, list[int]]]:
    """Parse trace text in independent blocks and emit atom records.

    Block boundaries never change the produced records; parse failures are
    reported with the failing block's starting line.
    """
    if block_size < 1:
        raise EngineError("block size must be at least 1")
    all_lines = list(lines)
    elements: list[tuple[frozenset[str], int]] = []
    for start in range(0, len(all_lines), block_size):
        block = all_lines[start : start + block_size]
        meaningful = [
            ln for ln in block
            if (ln.decode("utf-8") if isinstance(ln, bytes) else ln).strip()
            and not (ln.decode("utf-8") if isinstance(ln, bytes) else ln).lstrip().startswith("#")
        ]
        if not meaningful:
            continue
        try:
            parsed = parse_trace_lines(block)
        except TraceError as exc:
            raise TraceError(f"block starting at line {start + 1}: {exc}") from exc
        elements.extend(parsed.elements)
    if not elements:
        raise TraceError("empty trace")
    word = TimedWord(tuple(elements))  # re-validates ordering across blocks
    return word, atom_records(word, table)


def compute_offsets(table: FormulaTable) -> dict[int, frozenset[int]]:
    """Virtual-instant offsets per key: the shifts (relative to position
    timestamps) at which each key's value is needed by its superformulas.

    Exact-step parents push their offsets forward by their step; boolean
    parents pass offsets through; window parents need only position
    instants from their operands.  Processing in decreasing height order
    is sound because every parent is strictly taller than its children.
    """
    working: dict[int, set[int]] = {i: {0} for i in range(1, table.size + 1)}
    order = sorted(range(1, table.size + 1), key=lambda i: -table.height_of[i])
    for node_id in order:
        node = table.node(node_id)
        if isinstance(node, ExactStep):
            contribution = {o + node.step for o in working[node_id]}
        elif isinstance(node, (Not, And, Or)):
            contribution = set(working[node_id])
        else:
            contribution = set()
        if contribution:
            for child in table.child_ids[node_id]:
                working[child] |= contribution
    return {i: frozenset(s) for i, s in working.items()}


def map_step(
    key_id: int,
    record: int,
    table: FormulaTable,
    offsets: dict[int, frozenset[int]],
) -> list[tuple[int, int]]:
    """Map one record of one key to the records it contributes upstream.

    Every record is routed to each superformula key.  A position record
    additionally plants sanctioned markers at the parent's offset instants
    and, under a decomposition-made exact-step parent, an (unsanctioned)
    marker one step ahead.  The function is pure: output depends only on
    the record and the job's static tables.
    """
    outs: list[tuple[int, int]] = []
    tau = record >> TAU_SHIFT
    is_real = ((record >> 3) & CHILD_MASK) != ACT_CHILD
    flagged = bool(record & POSITION_FLAG)
    for parent_id in sorted(table.parent_ids[key_id]):
        outs.append((parent_id, record))
        if is_real and flagged:
            for off in sorted(offsets.get(parent_id, frozenset((0,)))):
                if off:
                    outs.append(
                        (parent_id, pack_record(tau + off, ACT_CHILD, False, False, True))
                    )
            parent = table.node(parent_id)
            if isinstance(parent, ExactStep) and parent.lazy_marker:
                outs.append(
                    (parent_id, pack_record(tau + parent.step, ACT_CHILD, False, False, False))
                )
    return outs


def shuffle_sort(records: list[int]) -> list[int]:
    """Order one key's records for reduction: timestamps descending; within
    a timestamp real records first (higher child ids first), then sanctioned
    markers, then unsanctioned ones."""
    records.sort(reverse=True)
    return records


def check_dup(records: Sequence[int], key_text: str = "?") -> list[int]:
    """Collapse duplicates in a shuffled stream (idempotent).

    A marker colliding with a position record at the same instant is
    dropped (the position record already triggers emission there);
    otherwise one marker per instant is kept.  Markers routinely share an
    instant with unflagged value records — whenever a key and its operand
    carry the same offset the operand's off-position value lands exactly
    on the key's marker instant — so only position records suppress them.
    Identical real duplicates collapse; real duplicates that disagree on
    truth are an error.
    """
    out: list[int] = []
    i = 0
    n = len(records)
    while i < n:
        tau = records[i] >> TAU_SHIFT
        saw_position = False
        kept_marker = False
        prev_child = -1
        prev_truth = False
        while i < n:
            r = records[i]
            if (r >> TAU_SHIFT) != tau:
                break
            child = (r >> 3) & CHILD_MASK
            if child != ACT_CHILD:
                truth = bool(r & TRUTH_FLAG)
                if child == prev_child:
                    if truth != prev_truth:
                        raise EngineError(
                            f"conflicting duplicate records for {key_text} at instant {tau}"
                        )
                else:
                    out.append(r)
                    prev_child = child
                    prev_truth = truth
                if r & POSITION_FLAG:
                    saw_position = True
            elif not saw_position and not kept_marker:
                out.append(r)
                kept_marker = True
            i += 1
    return out


# ---------------------------------------------------------------------------
# Reducers
# ---------------------------------------------------------------------------

def _interval_edges(interval) -> tuple[int, bool, Optional[int], bool, Optional[int], bool]:
    span = convex_union_with_zero(interval)
    return (
        interval.lower,
        interval.lower_closed,
        interval.upper,
        interval.upper_closed,
        span.upper,
        span.upper_closed,
    )


def _window_holds(win: deque, tau: int, lo: int, lo_closed: bool,
                  up: Optional[int], up_closed: bool) -> bool:
    """Whether the window holds an entry whose distance from tau is in range.

    Entries arrive in descending order, so the leftmost entry is the
    farthest ahead; when it is still within the upper edge a single
    comparison settles the query, otherwise the nearest entries are
    scanned first.
    """
    if not win:
        return False
    far = win[0] - tau
    if up is None or far < up or (far == up and up_closed):
        return far > lo or (far == lo and lo_closed)
    for entry in reversed(win):
        d = entry - tau
        if d < lo or (d == lo and not lo_closed):
            continue
        return d < up or (d == up and up_closed)
    return False


def _evict(win: deque, span_up: Optional[int], span_up_closed: bool) -> None:
    if span_up is None:
        return
    while win:
        spread = win[0] - win[-1]
        if spread > span_up or (spread == span_up and not span_up_closed):
            win.popleft()
        else:
            return


def reduce_window(
    records: Sequence[int],
    child_id: int,
    interval,
    out_key: int,
    *,
    admit_any: bool = False,
    buffer_truth: bool = True,
    negate: bool = False,
) -> tuple[list[int], int]:
    """Sliding-window reducer for eventually / globally / exact-step keys.

    Buffers the child records of the sought polarity (witnesses for
    eventually and exact-step, violations for globally), keeps the buffer
    within the zero-widened interval span, and answers each emission
    instant by probing the buffer against the shifted interval.
    """
    lo, lo_closed, up, up_closed, span_up, span_up_closed = _interval_edges(interval)
    win: deque = deque()
    outputs: list[int] = []
    peak = 0
    i = 0
    n = len(records)
    while i < n:
        r = records[i]
        tau = r >> TAU_SHIFT
        emit = False
        pos_out = False
        while True:
            child = (r >> 3) & CHILD_MASK
            if child == ACT_CHILD:
                if r & SANCTIONED_FLAG:
                    emit = True
            else:
                if r & POSITION_FLAG:
                    emit = True
                    pos_out = True
                if (
                    child == child_id
                    and bool(r & TRUTH_FLAG) == buffer_truth
                    and (admit_any or r & POSITION_FLAG)
                ):
                    win.append(tau)
            i += 1
            if i >= n:
                break
            r = records[i]
            if (r >> TAU_SHIFT) != tau:
                break
        if win:
            _evict(win, span_up, span_up_closed)
            if len(win) > peak:
                peak = len(win)
        if emit:
            val = _window_holds(win, tau, lo, lo_closed, up, up_closed)
            if negate:
                val = not val
            outputs.append(
                (tau << TAU_SHIFT)
                | (out_key << 3)
                | (POSITION_FLAG if pos_out else 0)
                | (TRUTH_FLAG if val else 0)
            )
    return outputs, peak


def reduce_until(
    records: Sequence[int],
    left_id: int,
    right_id: int,
    interval,
    out_key: int,
) -> tuple[list[int], int]:
    """Until reducer: keeps the live right-witness instants, discards those
    cut off by a failing left operand at a position, and answers emission
    instants from the surviving witnesses."""
    lo, lo_closed, up, up_closed, span_up, span_up_closed = _interval_edges(interval)
    live: deque = deque()
    outputs: list[int] = []
    peak = 0
    i = 0
    n = len(records)
    while i < n:
        r = records[i]
        tau = r >> TAU_SHIFT
        emit = False
        pos_out = False
        left_failed = False
        while True:
            child = (r >> 3) & CHILD_MASK
            if child == ACT_CHILD:
                if r & SANCTIONED_FLAG:
                    emit = True
            else:
                if r & POSITION_FLAG:
                    emit = True
                    pos_out = True
                    truth = bool(r & TRUTH_FLAG)
                    if child == right_id and truth:
                        live.append(tau)
                    if child == left_id and not truth:
                        left_failed = True
            i += 1
            if i >= n:
                break
            r = records[i]
            if (r >> TAU_SHIFT) != tau:
                break
        _evict(live, span_up, span_up_closed)
        if len(live) > peak:
            peak = len(live)
        if emit:
            val = _window_holds(live, tau, lo, lo_closed, up, up_closed)
            outputs.append(
                (tau << TAU_SHIFT)
                | (out_key << 3)
                | (POSITION_FLAG if pos_out else 0)
                | (TRUTH_FLAG if val else 0)
            )
        if left_failed:
            # a failing left operand at this position cuts continuity for
            # every earlier instant toward witnesses strictly beyond it
            while live and live[0] > tau:
                live.popleft()
    return outputs, peak


def reduce_join(
    records: Sequence[int],
    operand_ids: tuple[int, ...],
    operand_is_leaf: tuple[bool, ...],
    op: str,
    out_key: int,
    key_text: str,
) -> tuple[list[int], int]:
    """Boolean reducer: joins operand values instant by instant.

    At an emission instant every composite operand must have produced a
    record (anything else is a pipeline defect); a missing atom operand
    simply reads false, since atoms only ever have records at positions.
    Instants without an emission trigger are skipped silently — shared
    operands may legitimately stream values at a superset of instants.
    """
    wanted = set(operand_ids)
    outputs: list[int] = []
    i = 0
    n = len(records)
    while i < n:
        r = records[i]
        tau = r >> TAU_SHIFT
        emit = False
        pos_out = False
        values: dict[int, bool] = {}
        while True:
            child = (r >> 3) & CHILD_MASK
            if child == ACT_CHILD:
                if r & SANCTIONED_FLAG:
                    emit = True
            else:
                if r & POSITION_FLAG:
                    emit = True
                    pos_out = True
                if child in wanted:
                    values[child] = bool(r & TRUTH_FLAG)
            i += 1
            if i >= n:
                break
            r = records[i]
            if (r >> TAU_SHIFT) != tau:
                break
        if not emit:
            continue
        resolved = []
        for oid, leaf in zip(operand_ids, operand_is_leaf):
            if oid in values:
                resolved.append(values[oid])
            elif leaf:
                resolved.append(False)
            else:
                raise EngineError(
                    f"missing operand value for {key_text} at instant {tau}"
                )
        if op == "not":
            val = not resolved[0]
        elif op == "and":
            val = resolved[0] and resolved[1]
        else:
            val = resolved[0] or resolved[1]
        outputs.append(
            (tau << TAU_SHIFT)
            | (out_key << 3)
            | (POSITION_FLAG if pos_out else 0)
            | (TRUTH_FLAG if val else 0)
        )
    return outputs, 0


# ---------------------------------------------------------------------------
# Job plan and runner
# ---------------------------------------------------------------------------

@dataclass
class ReducerStats:
    reducer_key: str
    peak_win: int
    records_in: int
    records_out: int
    iteration_ms: float

    def to_json_dict(self) -> dict:
        return {
            "reducer_key": self.reducer_key,
            "peak_win": self.peak_win,
            "records_in": self.records_in,
            "records_out": self.records_out,
            "iteration_ms": self.iteration_ms,
        }


@dataclass
class RunStats:
    verdict: bool
    iterations: int
    peak_win_records: int
    peak_win_bytes_est: int
    reducers: list[ReducerStats] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "iterations": self.iterations,
            "peak_win_records": self.peak_win_records,
            "peak_win_bytes_est": self.peak_win_bytes_est,
            "reducers": [row.to_json_dict() for row in self.reducers],
        }


@dataclass
class PipelineResult:
    verdict: bool
    stats: RunStats
    table: FormulaTable
    guard_map: dict[Formula, Formula]
    offsets: dict[int, frozenset[int]]
    anchor_instant: int
    streams: Optional[dict[int, list[int]]] = None

    def stream_of(self, f: Formula) -> list[int]:
        if self.streams is None:
            raise EngineError("run was not asked to collect streams")
        return self.streams[self.table.id_of[f]]


def _contains_markers(f: Formula) -> bool:
    if isinstance(f, (Act, ExactStep)):
        return True
    return any(_contains_markers(c) for c in children(f))


def _reducer_spec(node: Formula, table: FormulaTable):
    node_id = table.id_of[node]
    kids = table.child_ids[node_id]
    if isinstance(node, Eventually):
        return ("window", kids[0], node.interval, dict(admit_any=False, buffer_truth=True, negate=False))
    if isinstance(node, ExactStep):
        return ("window", kids[0], node_interval(node), dict(admit_any=True, buffer_truth=True, negate=False))
    if isinstance(node, Globally):
        return ("window", kids[0], node.interval, dict(admit_any=False, buffer_truth=False, negate=True))
    if isinstance(node, Until):
        left_id = table.id_of[node.left]
        right_id = table.id_of[node.right]
        return ("until", left_id, right_id, node.interval)
    if isinstance(node, Not):
        ids = (kids[0],)
        leafs = (table.height_of[kids[0]] == 1,)
        return ("join", ids, leafs, "not")
    if isinstance(node, (And, Or)):
        left_id = table.id_of[node.left]
        right_id = table.id_of[node.right]
        ids = (left_id, right_id)
        leafs = tuple(table.height_of[i] == 1 for i in ids)
        return ("join", ids, leafs, "and" if isinstance(node, And) else "or")
    raise EngineError(f"no reducer for node {node!r}")


def _reduce_one(node_id: int, table: FormulaTable, spec, records: list[int]):
    start = time.perf_counter()
    records_in = len(records)
    shuffle_sort(records)
    key_text = to_text(table.node(node_id))
    stream = check_dup(records, key_text)
    kind = spec[0]
    if kind == "window":
        outputs, peak = reduce_window(stream, spec[1], spec[2], node_id, **spec[3])
    elif kind == "until":
        outputs, peak = reduce_until(stream, spec[1], spec[2], spec[3], node_id)
    else:
        outputs, peak = reduce_join(stream, spec[1], spec[2], spec[3], node_id, key_text)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return outputs, peak, records_in, elapsed_ms


def _seed_instants(
    positions: Sequence[int],
    position_set: set[int],
    offs: Iterable[int],
    extra: Iterable[int],
) -> list[int]:
    """Instants to plant sanctioned markers at: every position shifted by
    each nonzero offset (minus instants that already are positions), plus
    any extra anchor instants."""
    first, last = positions[0], positions[-1]
    contiguous = len(positions) == last - first + 1
    inst: set[int] = set()
    for off in offs:
        if not off:
            continue
        if contiguous:
            start = max(first + off, last + 1)
            inst.update(range(start, last + off + 1))
        else:
            inst.update(t + off for t in positions if (t + off) not in position_set)
    inst.update(o for o in extra if o not in position_set)
    return sorted(inst)


def run_pipeline(
    word: TimedWord,
    formula: Formula,
    *,
    semantics: str = POINT,
    window_budget: Optional[int] = None,
    anchor: str = ANCHOR_FIRST,
    workers: int = 1,
    spill_budget: Optional[int] = None,
    tmpdir: Optional[str] = None,
    collect_streams: bool = False,
) -> PipelineResult:
    """Check a formula over a timed word with the MapReduce-style pipeline.

    Without a window budget the reducers interpret the formula directly in
    point semantics.  With a budget the formula is translated, decomposed
    so no window exceeds the budget, and checked in lazy semantics; with
    point semantics the verdict is still read at the first position's
    timestamp (the translation makes the two agree there).
    """
    if semantics not in (POINT, LAZY):
        raise EngineError(f"unknown semantics {semantics!r}")
    if anchor not in (ANCHOR_FIRST, ANCHOR_ZERO):
        raise EngineError(f"unknown anchor {anchor!r}")
    if workers < 1:
        raise EngineError("worker count must be at least 1")
    if semantics == LAZY and window_budget is None:
        raise EngineError("lazy pipeline checking requires a window budget")
    if anchor == ANCHOR_ZERO and semantics != LAZY:
        raise EngineError("the zero anchor requires lazy semantics")

    if window_budget is not None:
        run_root, guard_map = pipeline_formula(formula, window_budget)
    else:
        if _contains_markers(formula):
            raise EngineError("point-mode input must not contain marker nodes")
        run_root = formula
        guard_map = {}
    table = analyze(run_root)
    if window_budget is None:
        guard_map = {node: node for node in table.nodes}
    if table.size >= CHILD_MASK:
        raise EngineError("formula too large for the record encoding")
    lazy_mode = window_budget is not None
    offsets = (
        compute_offsets(table)
        if lazy_mode
        else {i: frozenset((0,)) for i in range(1, table.size + 1)}
    )
    anchor_instant = 0 if anchor == ANCHOR_ZERO else word.timestamps[0]

    positions = word.timestamps
    position_set = set(positions)
    inboxes = _Inboxes(spill_budget, tmpdir)
    streams: Optional[dict[int, list[int]]] = {} if collect_streams else None

    # read step: atom records, routed to each atom's superformula keys
    per_atom = atom_records(word, table)
    for aid, recs in per_atom.items():
        for parent_id in table.parent_ids[aid]:
            inboxes.extend(parent_id, recs)
        if streams is not None:
            streams[aid] = list(recs)

    # sanctioned markers, planted from the offset tables
    if lazy_mode:
        for node_id in range(1, table.size + 1):
            node = table.node(node_id)
            if isinstance(node, (Atom, Act)):
                continue
            extra = offsets[node_id] if anchor == ANCHOR_ZERO else ()
            instants = _seed_instants(
                positions, position_set, offsets[node_id], extra
            )
            if instants:
                inboxes.extend(
                    node_id,
                    [pack_record(t, ACT_CHILD, False, False, True) for t in instants],
                )

    specs = {
        table.id_of[node]: _reducer_spec(node, table)
        for node in table.nodes
        if not isinstance(node, (Atom, Act))
    }
    if not lazy_mode:
        for node in table.nodes:
            if isinstance(node, (ExactStep, Act)):
                raise EngineError("point-mode input must not contain marker nodes")

    reducer_rows: list[ReducerStats] = []
    peak_global = 0
    root_id = table.root_id
    root_outputs: Optional[list[int]] = None
    total_height = table.height

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for height in range(2, total_height + 1):
            key_ids = table.ids_at_height(height)
            reducer_count = min(len(key_ids), workers)
            tasks = [(kid, inboxes.consume(kid)) for kid in key_ids]
            buckets: list[list[tuple[int, list[int]]]] = [[] for _ in range(reducer_count)]
            for kid, recs in tasks:
                buckets[kid % reducer_count].append((kid, recs))

            def run_bucket(bucket):
                return [
                    (kid, _reduce_one(kid, table, specs[kid], recs))
                    for kid, recs in bucket
                ]

            if pool is not None and reducer_count > 1:
                bucket_results = list(pool.map(run_bucket, buckets))
            else:
                bucket_results = [run_bucket(b) for b in buckets]
            by_key = {kid: res for chunk in bucket_results for kid, res in chunk}
            for kid in key_ids:
                outputs, peak, records_in, elapsed_ms = by_key[kid]
                reducer_rows.append(
                    ReducerStats(
                        reducer_key=to_text(table.node(kid)),
                        peak_win=peak,
                        records_in=records_in,
                        records_out=len(outputs),
                        iteration_ms=elapsed_ms,
                    )
                )
                if peak > peak_global:
                    peak_global = peak
                for parent_id in table.parent_ids[kid]:
                    inboxes.extend(parent_id, outputs)
                if streams is not None:
                    streams[kid] = outputs
                if kid == root_id:
                    root_outputs = outputs
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
        inboxes.close()

    if total_height == 1:
        verdict_value = False
        root_atom = table.root
        assert isinstance(root_atom, Atom)
        for atoms, tau in word.elements:
            if tau == anchor_instant:
                verdict_value = root_atom.name in atoms
                break
    else:
        if root_outputs is None:
            raise EngineError("pipeline produced no stream for the root key")
        verdict_value = None
        for record in root_outputs:
            if (record >> TAU_SHIFT) == anchor_instant:
                verdict_value = bool(record & TRUTH_FLAG)
                break
        if verdict_value is None:
            raise EngineError(
                f"no verdict record at anchor instant {anchor_instant}"
            )

    stats = RunStats(
        verdict=verdict_value,
        iterations=total_height,
        peak_win_records=peak_global,
        peak_win_bytes_est=peak_global * BYTES_PER_RECORD_ESTIMATE,
        reducers=reducer_rows,
    )
    return PipelineResult(
        verdict=verdict_value,
        stats=stats,
        table=table,
        guard_map=guard_map,
        offsets=offsets,
        anchor_instant=anchor_instant,
        streams=streams,
    )


def run_pipeline_from_lines(
    lines: Sequence[Union[str, bytes]],
    formula: Formula,
    *,
    block_size: int = DEFAULT_BLOCK_SIZE,
    **kwargs,
) -> PipelineResult:
    """Like run_pipeline, reading and block-parsing the trace text itself."""
    probe_table = analyze(formula)
    word, _records = input_read(lines, probe_table, block_size)
    return run_pipeline(word, formula, **kwargs)
