"""Oracle segment-to-speaker assignment and the relative confusion-error measure.

The oracle labels each segment with the reference speaker that minimizes the
session cpWER; it lower-bounds what any reassignment method can reach.
Exact mode enumerates every assignment (with branch-and-bound pruning that
never changes the result); greedy mode scales to long sessions via local
alignment initialization plus coordinate descent.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import LabelAssignment, ReferenceTranscript, SessionHypothesis
from .metrics import (
    CpWerReport,
    _advance_row,
    _distance_ids,
    _to_ids,
    cpwer_from_segments,
    segment_order,
)

EXACT_SEARCH_BUDGET = 10**6


def exact_fits_budget(num_ref_speakers: int, num_segments: int) -> bool:
    """Whether exhaustive assignment enumeration stays within budget."""
    return num_ref_speakers**num_segments <= EXACT_SEARCH_BUDGET


def _free_end_gap_cost(pattern_ids: np.ndarray, text_ids: np.ndarray) -> int:
    """Edit cost of the pattern against its best-matching window of the text.

    Unconsumed text before and after the window is free, approximating the
    cost of the best contiguous match.
    """
    if pattern_ids.size == 0:
        return 0
    if text_ids.size == 0:
        return int(pattern_ids.size)
    row = np.zeros(text_ids.size + 1, dtype=np.int64)
    for word_id in pattern_ids:
        row = _advance_row(row, text_ids, word_id)
    return int(row.min())


def _exact_search(
    seg_ids: list[np.ndarray], ref_ids: list[np.ndarray]
) -> tuple[int, list[int]]:
    """Minimum total edit cost over all segment-to-speaker assignments.

    Segments are consumed in stream order so each partial assignment extends
    per-speaker DP rows in place.  Pruning uses the row minima, a valid
    lower bound on any completion, and preserves the lexicographically
    smallest minimizing assignment.
    """
    k = len(ref_ids)
    num_segments = len(seg_ids)
    rows: list[np.ndarray] = [
        np.arange(r.size + 1, dtype=np.int64) for r in ref_ids
    ]
    mins = [0] * k
    labels = [0] * num_segments
    best_cost: int | None = None
    best_labels: list[int] | None = None

    def search(depth: int) -> None:
        nonlocal best_cost, best_labels
        if best_cost is not None and sum(mins) >= best_cost:
            return
        if depth == num_segments:
            cost = sum(int(r[-1]) for r in rows)
            if best_cost is None or cost < best_cost:
                best_cost = cost
                best_labels = labels.copy()
            return
        words = seg_ids[depth]
        for r in range(k):
            saved_row, saved_min = rows[r], mins[r]
            new_row = saved_row
            for word_id in words:
                new_row = _advance_row(new_row, ref_ids[r], word_id)
            rows[r] = new_row
            mins[r] = int(new_row.min())
            labels[depth] = r
            search(depth + 1)
            rows[r] = saved_row
            mins[r] = saved_min

    search(0)
    assert best_cost is not None and best_labels is not None
    return best_cost, best_labels


def _greedy_search(
    seg_ids: list[np.ndarray], ref_ids: list[np.ndarray]
) -> tuple[int, list[int]]:
    """Free-end-gap initialization followed by best-move coordinate descent.

    Each round evaluates every single-segment reassignment and applies the
    one that decreases the cpWER error count the most (first such move on
    ties); terminates when no move helps, which is guaranteed because the
    error count strictly decreases.
    """
    k = len(ref_ids)
    num_segments = len(seg_ids)
    labels = [
        int(np.argmin([_free_end_gap_cost(words, ref_ids[r]) for r in range(k)]))
        for words in seg_ids
    ]

    empty = np.empty(0, dtype=np.int64)
    column_cache: dict[tuple[int, ...], np.ndarray] = {}

    def column(members: tuple[int, ...]) -> np.ndarray:
        cached = column_cache.get(members)
        if cached is None:
            stream = (
                np.concatenate([seg_ids[i] for i in members]) if members else empty
            )
            cached = np.array(
                [_distance_ids(ref_ids[r], stream) for r in range(k)], dtype=np.int64
            )
            column_cache[members] = cached
        return cached

    members: list[list[int]] = [[] for _ in range(k)]
    for i, label in enumerate(labels):
        members[label].append(i)
    cost = np.stack([column(tuple(members[h])) for h in range(k)], axis=1)
    rows, cols = linear_sum_assignment(cost)
    current = int(cost[rows, cols].sum())

    while current > 0:
        best_total = current
        best_move = None
        for i in range(num_segments):
            a = labels[i]
            removed = tuple(m for m in members[a] if m != i)
            for b in range(k):
                if b == a:
                    continue
                added = tuple(sorted(members[b] + [i]))
                candidate = cost.copy()
                candidate[:, a] = column(removed)
                candidate[:, b] = column(added)
                rows, cols = linear_sum_assignment(candidate)
                total = int(candidate[rows, cols].sum())
                if total < best_total:
                    best_total = total
                    best_move = (i, a, b, candidate)
        if best_move is None:
            break
        i, a, b, cost = best_move
        labels[i] = b
        members[a].remove(i)
        members[b] = sorted(members[b] + [i])
        current = best_total
    return current, labels


def oracle_assignment(
    session: SessionHypothesis,
    reference: ReferenceTranscript,
    mode: str = "exact",
) -> tuple[LabelAssignment, CpWerReport]:
    """Segment labeling over the reference speakers that minimizes cpWER.

    Label ``c`` stands for the c-th reference speaker (file order), so the
    cpWER permutation of the result is the identity by construction.  Exact
    mode requires (#reference speakers) ** (#segments) <=
    ``EXACT_SEARCH_BUDGET``.
    """
    if mode not in ("exact", "greedy"):
        raise ValueError(f"mode must be 'exact' or 'greedy', got {mode!r}")
    if reference.session_id != session.session_id:
        raise ValueError(
            f"reference session {reference.session_id!r} does not match "
            f"hypothesis session {session.session_id!r}"
        )
    ref_labels = list(reference.per_speaker)
    k = len(ref_labels)
    if k == 0:
        raise ValueError("reference has no speakers")

    order = segment_order(session)
    streams = [reference.per_speaker[l] for l in ref_labels] + [
        session.segments[i].words for i in order
    ]
    ids = _to_ids(streams)
    ref_ids, seg_ids = ids[:k], ids[k:]

    if mode == "exact":
        if not exact_fits_budget(k, len(seg_ids)):
            raise ValueError(
                f"exact oracle over budget: {k}^{len(seg_ids)} > "
                f"{EXACT_SEARCH_BUDGET}; use greedy mode"
            )
        cost, ordered_labels = _exact_search(seg_ids, ref_ids)
    else:
        cost, ordered_labels = _greedy_search(seg_ids, ref_ids)

    labels = [0] * len(session.segments)
    for position, segment_index in enumerate(order):
        labels[segment_index] = ordered_labels[position]
    assignment = LabelAssignment(session_id=session.session_id, labels=tuple(labels))
    report = cpwer_from_segments(
        reference, session, assignment, num_clusters=k, label_names=ref_labels
    )
    assert report.errors == cost
    return assignment, report


def relative_confusion_error(
    cpwer_none: float, cpwer_slr: float, cpwer_oracle: float
) -> float:
    """Share of the fixable speaker-confusion error that remains after reassignment.

    0 means the oracle assignment was reached, 1 means no improvement over
    skipping reassignment; values above 1 (reassignment made things worse)
    are legal and not clamped.
    """
    if min(cpwer_none, cpwer_slr, cpwer_oracle) < 0:
        raise ValueError("cpWER values must be non-negative")
    if cpwer_none < cpwer_oracle:
        raise ValueError(
            f"cpwer_none ({cpwer_none}) must be >= cpwer_oracle ({cpwer_oracle})"
        )
    denominator = cpwer_none - cpwer_oracle
    if denominator == 0:
        if cpwer_slr == cpwer_oracle:
            return 0.0
        raise ValueError(
            "relative confusion error undefined: oracle equals the "
            "no-reassignment cpWER but the reassigned cpWER differs"
        )
    return (cpwer_slr - cpwer_oracle) / denominator
