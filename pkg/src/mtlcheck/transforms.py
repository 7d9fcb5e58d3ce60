"""Formula rewrites that prepare point-semantics queries for lazy checking.

``to_lazy_form`` (exposed as ``l2p``-style translation ``lazy_translation``)
rewrites a plain formula so that its lazy value at a position's timestamp
matches its point value at that position: temporal witnesses are required
to coincide with trace positions by conjoining the position marker onto
witness subformulas.

``decompose`` splits every bounded window wider than ``k`` into a chain of
exact ``k``-step hops around windows of width at most ``k``, preserving the
lazy value at every instant.  The eventually case distinguishes three
shapes (window already narrow; window reachable by whole hops; window that
overhangs the last hop).  The globally case is the dual rewrite through
negation.

The until case is handled by peeling one hop::

    l U<a,b> r  ==  l U<a,k] r                          (only if a <= k and <a,k] nonempty)
                    or ( all positions in (0,k] satisfy l
                         and after exactly k steps: l U T r )

where T = <a-k, b-k> when a > k (original brackets) and T = (0, b-k>
otherwise.  A witness at exactly k steps is matched by the first disjunct
(whose upper end is closed), so the recursive tail only needs witnesses
strictly beyond the hop; that is why T's lower end is open when a <= k.
The "all positions" conjunct is expressed as a globally window over
``position -> l`` so that non-position instants cannot violate it.  The
rewrite is validated against the reference evaluators over randomized
formulas and words.

``strip_position_guards`` removes the explicit position-marker guards the
translation introduced and returns a mapping from each stripped node to
its guarded counterpart; the pipeline engine re-imposes the guards as a
record discipline and is compared against the guarded originals.
"""

from __future__ import annotations

from .formula import (
    Act,
    And,
    Atom,
    Eventually,
    ExactStep,
    Formula,
    Globally,
    Interval,
    Not,
    Or,
    Until,
    children,
    node_interval,
)


class TransformError(ValueError):
    """Raised when a rewrite's input precondition is violated."""


def _check_plain(f: Formula) -> None:
    if isinstance(f, (Act, ExactStep)):
        raise TransformError(
            "translation input must not contain position markers or exact-step nodes"
        )
    for child in children(f):
        _check_plain(child)


def _guard(f: Formula) -> Formula:
    return And(Act(), f)


def lazy_translation(f: Formula) -> Formula:
    """Rewrite so lazy evaluation at a position timestamp matches point
    evaluation at that position."""
    _check_plain(f)
    return _translate(f)


def _translate(f: Formula) -> Formula:
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(_translate(f.child))
    if isinstance(f, And):
        return And(_translate(f.left), _translate(f.right))
    if isinstance(f, Or):
        return Or(_translate(f.left), _translate(f.right))
    if isinstance(f, Until):
        return Until(f.interval, _translate(f.left), _guard(_translate(f.right)))
    if isinstance(f, Eventually):
        return Eventually(f.interval, _guard(_translate(f.child)))
    if isinstance(f, Globally):
        # all t': ... == not exists t' failing; witnesses must be positions.
        return Not(Eventually(f.interval, _guard(Not(_translate(f.child)))))
    raise TypeError(f"unknown formula node {f!r}")


def max_bounded_upper(f: Formula) -> int:
    """Largest finite window upper bound occurring anywhere in the formula."""
    best = 0
    interval = node_interval(f)
    if interval is not None and interval.upper is not None:
        best = interval.upper
    for child in children(f):
        best = max(best, max_bounded_upper(child))
    return best


def split_zero_window(child: Formula, step: int, span: int, span_closed: bool) -> Formula:
    """Cover a window of the given span from the current instant with
    step-sized chunks chained by exact hops."""
    if span <= step:
        return Eventually(Interval(0, span, True, span_closed), child)
    head = Eventually(Interval(0, step, True, True), child)
    tail = ExactStep(step, split_zero_window(child, step, span - step, span_closed))
    return Or(head, tail)


def _exact_chain(depth: int, step: int, inner: Formula) -> Formula:
    for _ in range(depth):
        inner = ExactStep(step, inner)
    return inner


def _require_bounded(interval: Interval) -> None:
    if interval.upper is None:
        raise TransformError("window decomposition requires bounded intervals")


def _decompose_eventually(interval: Interval, child: Formula, k: int) -> Formula:
    _require_bounded(interval)
    a, b = interval.lower, interval.upper
    if b <= k:
        return Eventually(interval, child)
    hops = a // k
    remainder = a % k
    if b <= (hops + 1) * k:
        # the residue window is kept even when it degenerates to [0,0]:
        # window reducers are what hold operands to position instants, so
        # collapsing it would let the step chain read the operand at
        # arbitrary instants
        inner = Eventually(
            Interval(remainder, b - hops * k, interval.lower_closed, interval.upper_closed),
            child,
        )
        return _exact_chain(hops, k, inner)
    head = Eventually(Interval(remainder, k, interval.lower_closed, True), child)
    overhang = b - (hops + 1) * k
    tail = ExactStep(k, split_zero_window(child, k, overhang, interval.upper_closed))
    return _exact_chain(hops, k, Or(head, tail))


def _position_guarded_all(interval: Interval, f: Formula) -> Formula:
    return Globally(interval, Or(Not(Act()), f))


def _decompose_until(interval: Interval, left: Formula, right: Formula, k: int) -> Formula:
    _require_bounded(interval)
    a, b = interval.lower, interval.upper
    if b <= k:
        return Until(interval, left, right)
    if a > k:
        tail_interval = Interval(a - k, b - k, interval.lower_closed, interval.upper_closed)
    else:
        tail_interval = Interval(0, b - k, False, interval.upper_closed)
    tail = And(
        _position_guarded_all(Interval(0, k, False, True), left),
        ExactStep(k, _decompose_until(tail_interval, left, right, k)),
    )
    if a > k or (a == k and not interval.lower_closed):
        return tail
    head = Until(Interval(a, k, interval.lower_closed, True), left, right)
    return Or(head, tail)


def decompose(f: Formula, k: int) -> Formula:
    """Split every bounded window wider than k into exact k-step hops.

    The result's lazy value equals the input's at every integer instant.
    """
    if k < 1:
        raise TransformError("window budget must be at least 1")
    if isinstance(f, (Atom, Act)):
        return f
    if isinstance(f, Not):
        return Not(decompose(f.child, k))
    if isinstance(f, And):
        return And(decompose(f.left, k), decompose(f.right, k))
    if isinstance(f, Or):
        return Or(decompose(f.left, k), decompose(f.right, k))
    if isinstance(f, Eventually):
        return _decompose_eventually(f.interval, decompose(f.child, k), k)
    if isinstance(f, Globally):
        _require_bounded(f.interval)
        if f.interval.upper <= k:
            return Globally(f.interval, decompose(f.child, k))
        return Not(_decompose_eventually(f.interval, Not(decompose(f.child, k)), k))
    if isinstance(f, Until):
        return _decompose_until(f.interval, decompose(f.left, k), decompose(f.right, k), k)
    if isinstance(f, ExactStep):
        if f.step <= k:
            return ExactStep(f.step, decompose(f.child, k))
        return _decompose_eventually(
            Interval(f.step, f.step, True, True), decompose(f.child, k), k
        )
    raise TypeError(f"unknown formula node {f!r}")


def strip_position_guards(f: Formula) -> tuple[Formula, dict[Formula, Formula]]:
    """Remove explicit position-marker guards, keeping their meaning on file.

    Returns the stripped formula together with a mapping from every node of
    the stripped formula to its guarded counterpart; the engine's record
    discipline stands in for the removed guards and its output streams are
    checked against lazy evaluation of the guarded originals.
    """
    mapping: dict[Formula, Formula] = {}

    def strip(node: Formula) -> Formula:
        if isinstance(node, And) and isinstance(node.left, Act):
            return strip(node.right)
        if (
            isinstance(node, Or)
            and isinstance(node.left, Not)
            and isinstance(node.left.child, Act)
        ):
            return strip(node.right)
        if isinstance(node, (Atom, Act)):
            stripped: Formula = node
        elif isinstance(node, Not):
            stripped = Not(strip(node.child))
        elif isinstance(node, And):
            stripped = And(strip(node.left), strip(node.right))
        elif isinstance(node, Or):
            stripped = Or(strip(node.left), strip(node.right))
        elif isinstance(node, Until):
            stripped = Until(node.interval, strip(node.left), strip(node.right))
        elif isinstance(node, Eventually):
            stripped = Eventually(node.interval, strip(node.child))
        elif isinstance(node, Globally):
            stripped = Globally(node.interval, strip(node.child))
        elif isinstance(node, ExactStep):
            stripped = ExactStep(node.step, strip(node.child))
        else:
            raise TypeError(f"unknown formula node {node!r}")
        mapping.setdefault(stripped, node)
        return stripped

    return strip(f), mapping


def pipeline_formula(f: Formula, k: int) -> tuple[Formula, dict[Formula, Formula]]:
    """Formula the distributed checker runs for a window budget of k, plus
    the guard mapping used to validate its streams."""
    return strip_position_guards(decompose(lazy_translation(f), k))
