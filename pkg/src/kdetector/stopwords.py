"""Stop-word derivation and filtering for crash stacks.

A stop word is a function name that shows up in most backtraces yet
(almost) never in the exception part of a stack: scaffolding the runtime
pushes around every crash rather than anything near the root cause. Each
name is scored ``(backtrace document frequency) * (1 - exception document
frequency)`` over a corpus of parsed dumps, and the first ``cutoff_length``
entries of the ranked list are filtered out before sequencing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .dump_parser import CrashDump, StackFrame
from .errors import EmptyCorpus
from .knowledge_miner import ComponentMap
from .sequencer import ComponentSequence, to_component_sequence
from .similarity import ModelParams, match_features, score_features
from .trainer import DUPLICATE, LabeledPair


@dataclass
class StopWordList:
    """Ranked (name, score) entries; only the first cutoff_length apply."""

    entries: list[tuple[str, float]]
    cutoff_length: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.cutoff_length <= len(self.entries):
            raise ValueError("cutoff_length must be within 0..len(entries)")

    def active(self) -> frozenset[str]:
        return frozenset(name for name, _ in self.entries[: self.cutoff_length])


def derive_stop_words(corpus: Sequence[CrashDump], cutoff: int = 0) -> StopWordList:
    """Rank every function name seen in the corpus by dispensability.

    Scores use dump-level document frequency: a name present in every
    backtrace and no exception scores 1.0. Ties are broken by name so the
    ranking is total.
    """
    if not corpus:
        raise EmptyCorpus("cannot derive stop words from an empty corpus")
    backtrace_df: dict[str, int] = {}
    exception_df: dict[str, int] = {}
    for dump in corpus:
        for name in {f.function_name for f in dump.backtrace_frames}:
            backtrace_df[name] = backtrace_df.get(name, 0) + 1
        for name in {f.function_name for f in dump.exception_frames}:
            exception_df[name] = exception_df.get(name, 0) + 1
    total = len(corpus)
    names = set(backtrace_df) | set(exception_df)
    entries = [
        (
            name,
            (backtrace_df.get(name, 0) / total)
            * (1.0 - exception_df.get(name, 0) / total),
        )
        for name in names
    ]
    entries.sort(key=lambda entry: (-entry[1], entry[0]))
    return StopWordList(entries, min(cutoff, len(entries)))


def filter_stop_words(
    frames: Sequence[StackFrame], stop_list: StopWordList
) -> list[StackFrame]:
    """Drop stop-word frames; survivors keep order and original indices."""
    active = stop_list.active()
    return [frame for frame in frames if frame.function_name not in active]


def precision_curve(
    pairs: Sequence[LabeledPair],
    frames_by_dump: Mapping[str, Sequence[StackFrame]],
    cmap: ComponentMap,
    stop_list: StopWordList,
    params: ModelParams,
    lengths: Sequence[int] | None = None,
) -> list[tuple[int, float]]:
    """Precision of the duplicate verdict at each stop-list prefix length.

    For every cutoff L the referenced stacks are re-filtered, re-sequenced
    and re-scored; a pair counts as predicted duplicate when its score
    meets params.threshold. A stack that filters to nothing scores 0
    against everything. Precision with no positive predictions is 0.
    """
    if lengths is None:
        lengths = range(len(stop_list.entries) + 1)
    dump_ids = {p.dump_id_a for p in pairs} | {p.dump_id_b for p in pairs}
    curve: list[tuple[int, float]] = []
    for cutoff in lengths:
        trimmed = StopWordList(stop_list.entries, cutoff)
        sequences: dict[str, ComponentSequence | None] = {}
        for dump_id in dump_ids:
            kept = filter_stop_words(frames_by_dump[dump_id], trimmed)
            sequences[dump_id] = (
                to_component_sequence(kept, cmap, dump_id=dump_id) if kept else None
            )
        tp = fp = 0
        for pair in pairs:
            seq_a = sequences[pair.dump_id_a]
            seq_b = sequences[pair.dump_id_b]
            if seq_a is None or seq_b is None:
                score = 0.0
            else:
                score = score_features(match_features(seq_a, seq_b), params)
            if score >= params.threshold:
                if pair.label == DUPLICATE:
                    tp += 1
                else:
                    fp += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        curve.append((cutoff, precision))
    return curve


def plateau_cutoff(
    curve: Sequence[tuple[int, float]], window: int = 3, min_gain: float = 1e-3
) -> int:
    """First length whose next ``window`` lengths gain less than min_gain.

    This is where the precision curve flattens; the final length always
    qualifies, so a cutoff is always found.
    """
    if not curve:
        raise ValueError("empty precision curve")
    for idx, (cutoff, precision) in enumerate(curve):
        lookahead = curve[idx + 1 : idx + 1 + window]
        if all(later - precision < min_gain for _, later in lookahead):
            return cutoff
    return curve[-1][0]


def format_stop_words(stop_list: StopWordList) -> str:
    lines = [f"#cutoff: {stop_list.cutoff_length}"]
    lines.extend(f"{name}\t{score:.6f}" for name, score in stop_list.entries)
    return "\n".join(lines) + "\n"


def parse_stop_words(text: str) -> StopWordList:
    cutoff = 0
    entries: list[tuple[str, float]] = []
    for line in text.splitlines():
        if line.startswith("#cutoff:"):
            cutoff = int(line.split(":", 1)[1].strip())
            continue
        if not line.strip() or line.startswith("#"):
            continue
        name, _, score = line.partition("\t")
        entries.append((name, float(score)))
    return StopWordList(entries, min(cutoff, len(entries)))
