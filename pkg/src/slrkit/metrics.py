"""Word-level edit distance and the concatenated minimum-permutation WER (cpWER).

For cpWER, the words of each speaker are concatenated on both sides, the
smaller side is padded with empty dummy speakers, and the speaker pairing
that minimizes the total word errors is found with the Hungarian algorithm.
A brute-force permutation search is provided as an independent check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import LabelAssignment, ReferenceTranscript, SessionHypothesis

BRUTE_FORCE_MAX_SPEAKERS = 8


@dataclass(frozen=True)
class EditCounts:
    """Substitution/deletion/insertion counts of one minimal alignment."""

    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "EditCounts") -> "EditCounts":
        return EditCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_len + other.ref_len,
        )


@dataclass(frozen=True)
class CpWerReport:
    """cpWER value, its error breakdown, and the minimizing speaker mapping.

    ``pairs`` holds (reference speaker, hypothesis speaker, counts) per
    scored pair; a ``None`` side marks a padded dummy.  ``mapping`` is
    hypothesis speaker -> reference speaker (``None`` when unmatched).
    """

    pairs: tuple[tuple[str | None, str | None, EditCounts], ...]
    errors: int
    ref_words: int
    cpwer: float
    mapping: dict[str, str | None]


def _advance_row(row: np.ndarray, ref_ids: np.ndarray, word_id: int) -> np.ndarray:
    """One row step of the Levenshtein DP: append ``word_id`` to the hypothesis.

    ``row[k]`` is the distance between ref[:k] and the hypothesis so far.
    The deletion recurrence is resolved with a running minimum so the whole
    step is vectorized.
    """
    base = np.empty_like(row)
    base[0] = row[0] + 1
    np.minimum(row[1:] + 1, row[:-1] + (ref_ids != word_id), out=base[1:])
    steps = np.arange(row.shape[0])
    return steps + np.minimum.accumulate(base - steps)


def _distance_ids(ref_ids: np.ndarray, hyp_ids: np.ndarray) -> int:
    """Levenshtein distance between two integer token sequences."""
    if ref_ids.size == 0:
        return int(hyp_ids.size)
    if hyp_ids.size == 0:
        return int(ref_ids.size)
    row = np.arange(ref_ids.size + 1)
    for word_id in hyp_ids:
        row = _advance_row(row, ref_ids, word_id)
    return int(row[-1])


def _to_ids(streams: Sequence[Sequence[str]]) -> list[np.ndarray]:
    vocab: dict[str, int] = {}
    out = []
    for stream in streams:
        out.append(
            np.array([vocab.setdefault(t, len(vocab)) for t in stream], dtype=np.int64)
        )
    return out


def token_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    """Total minimal edit distance (unit costs) between two token sequences."""
    ref_ids, hyp_ids = _to_ids([tuple(ref), tuple(hyp)])
    return _distance_ids(ref_ids, hyp_ids)


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> EditCounts:
    """Minimal-cost alignment counts between reference and hypothesis tokens.

    Unit costs for substitution, deletion, and insertion.  When several
    minimal alignments exist the backtrace prefers substitution over
    insertion over deletion; this only affects the count decomposition,
    never the total.

    >>> edit_distance("a b c".split(), "a x c".split())
    EditCounts(substitutions=1, deletions=0, insertions=0, ref_len=3)
    """
    ref = tuple(ref)
    hyp = tuple(hyp)
    m, n = len(ref), len(hyp)
    dp = np.zeros((m + 1, n + 1), dtype=np.int64)
    dp[:, 0] = np.arange(m + 1)
    dp[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        prev = dp[i - 1]
        cur = dp[i]
        ref_word = ref[i - 1]
        for j in range(1, n + 1):
            best = prev[j - 1] + (ref_word != hyp[j - 1])
            up = prev[j] + 1
            if up < best:
                best = up
            left = cur[j - 1] + 1
            if left < best:
                best = left
            cur[j] = best

    subs = dels = ins = 0
    i, j = m, n
    while i > 0 or j > 0:
        here = dp[i, j]
        if i > 0 and j > 0 and dp[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]) == here:
            if ref[i - 1] != hyp[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif j > 0 and dp[i, j - 1] + 1 == here:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return EditCounts(substitutions=subs, deletions=dels, insertions=ins, ref_len=m)


def _speaker_streams(
    reference: ReferenceTranscript | Mapping[str, Sequence[str]],
) -> dict[str, tuple[str, ...]]:
    per_speaker = (
        reference.per_speaker
        if isinstance(reference, ReferenceTranscript)
        else reference
    )
    return {str(label): tuple(words) for label, words in per_speaker.items()}


def _padded_cost_matrix(
    ref_map: dict[str, tuple[str, ...]], hyp_map: dict[str, tuple[str, ...]]
) -> tuple[list[str | None], list[str | None], list[tuple[str, ...]], list[tuple[str, ...]], np.ndarray]:
    """Pad the smaller side with empty dummy speakers and fill the cost matrix."""
    size = max(len(ref_map), len(hyp_map))
    ref_labels: list[str | None] = list(ref_map) + [None] * (size - len(ref_map))
    hyp_labels: list[str | None] = list(hyp_map) + [None] * (size - len(hyp_map))
    ref_streams = [ref_map.get(l, ()) if l is not None else () for l in ref_labels]
    hyp_streams = [hyp_map.get(l, ()) if l is not None else () for l in hyp_labels]
    id_streams = _to_ids(ref_streams + hyp_streams)
    ref_ids, hyp_ids = id_streams[:size], id_streams[size:]
    cost = np.zeros((size, size), dtype=np.int64)
    for i in range(size):
        for j in range(size):
            cost[i, j] = _distance_ids(ref_ids[i], hyp_ids[j])
    return ref_labels, hyp_labels, ref_streams, hyp_streams, cost


def _report_from_pairing(
    ref_labels: Sequence[str | None],
    hyp_labels: Sequence[str | None],
    ref_streams: Sequence[tuple[str, ...]],
    hyp_streams: Sequence[tuple[str, ...]],
    pairing: Sequence[tuple[int, int]],
    total_errors: int,
    ref_words: int,
) -> CpWerReport:
    pairs = []
    mapping: dict[str, str | None] = {}
    for i, j in pairing:
        ref_label, hyp_label = ref_labels[i], hyp_labels[j]
        if ref_label is None and hyp_label is None:
            continue
        counts = edit_distance(ref_streams[i], hyp_streams[j])
        pairs.append((ref_label, hyp_label, counts))
        if hyp_label is not None:
            mapping[hyp_label] = ref_label
    assert sum(c.total for _, _, c in pairs) == total_errors
    return CpWerReport(
        pairs=tuple(pairs),
        errors=total_errors,
        ref_words=ref_words,
        cpwer=total_errors / ref_words,
        mapping=mapping,
    )


def cpwer(
    reference: ReferenceTranscript | Mapping[str, Sequence[str]],
    hypothesis: Mapping[str, Sequence[str]],
) -> CpWerReport:
    """cpWER between per-speaker reference and hypothesis token streams.

    The rate is (minimal total word errors over speaker pairings) divided by
    the total number of reference words, including words of reference
    speakers that end up unmatched.

    >>> cpwer({"A": "hello world".split()}, {"1": "hello world".split()}).cpwer
    0.0
    """
    ref_map = _speaker_streams(reference)
    hyp_map = _speaker_streams(hypothesis)
    ref_words = sum(len(w) for w in ref_map.values())
    if ref_words == 0:
        raise ValueError("cpWER undefined: reference contains no words")
    ref_labels, hyp_labels, ref_streams, hyp_streams, cost = _padded_cost_matrix(
        ref_map, hyp_map
    )
    rows, cols = linear_sum_assignment(cost)
    total = int(cost[rows, cols].sum())
    return _report_from_pairing(
        ref_labels,
        hyp_labels,
        ref_streams,
        hyp_streams,
        list(zip(rows.tolist(), cols.tolist())),
        total,
        ref_words,
    )


def brute_force_cpwer(
    reference: ReferenceTranscript | Mapping[str, Sequence[str]],
    hypothesis: Mapping[str, Sequence[str]],
) -> CpWerReport:
    """Exhaustive-permutation cpWER; independent check of the Hungarian result.

    Limited to ``BRUTE_FORCE_MAX_SPEAKERS`` padded speakers.  Ties between
    permutations resolve to the lexicographically smallest one.
    """
    ref_map = _speaker_streams(reference)
    hyp_map = _speaker_streams(hypothesis)
    ref_words = sum(len(w) for w in ref_map.values())
    if ref_words == 0:
        raise ValueError("cpWER undefined: reference contains no words")
    ref_labels, hyp_labels, ref_streams, hyp_streams, cost = _padded_cost_matrix(
        ref_map, hyp_map
    )
    size = cost.shape[0]
    if size > BRUTE_FORCE_MAX_SPEAKERS:
        raise ValueError(
            f"{size} padded speakers exceed the brute-force limit "
            f"({BRUTE_FORCE_MAX_SPEAKERS})"
        )
    rows = cost.tolist()
    best_total = None
    best_perm = None
    for perm in itertools.permutations(range(size)):
        total = sum(rows[i][j] for i, j in enumerate(perm))
        if best_total is None or total < best_total:
            best_total = total
            best_perm = perm
    return _report_from_pairing(
        ref_labels,
        hyp_labels,
        ref_streams,
        hyp_streams,
        list(enumerate(best_perm)),
        best_total,
        ref_words,
    )


def segment_order(session: SessionHypothesis) -> list[int]:
    """Indices of the session's segments in stream order: ascending start, ties by segment id."""
    return sorted(
        range(len(session.segments)),
        key=lambda i: (session.segments[i].start, session.segments[i].segment_id),
    )


def assignment_streams(
    session: SessionHypothesis,
    assignment: LabelAssignment,
    num_clusters: int | None = None,
    label_names: Sequence[str] | None = None,
) -> dict[str, tuple[str, ...]]:
    """Per-cluster hypothesis word streams induced by a label assignment."""
    if num_clusters is None:
        num_clusters = (
            len(label_names)
            if label_names is not None
            else max(assignment.labels) + 1
        )
    assignment.validate_for(session, num_clusters)
    streams: list[list[str]] = [[] for _ in range(num_clusters)]
    for idx in segment_order(session):
        streams[assignment.labels[idx]].extend(session.segments[idx].words)
    if label_names is None:
        label_names = [f"spk{c}" for c in range(num_clusters)]
    return {label_names[c]: tuple(streams[c]) for c in range(num_clusters)}


def cpwer_from_segments(
    reference: ReferenceTranscript | Mapping[str, Sequence[str]],
    session: SessionHypothesis,
    assignment: LabelAssignment,
    *,
    num_clusters: int | None = None,
    label_names: Sequence[str] | None = None,
) -> CpWerReport:
    """cpWER of a session under a label assignment.

    Hypothesis streams concatenate segment words per assigned cluster in
    ascending start time (ties broken by segment id).
    """
    hyp = assignment_streams(session, assignment, num_clusters, label_names)
    return cpwer(reference, hyp)
