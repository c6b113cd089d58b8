"""Online triage: score an incoming dump against recent history.

The failure store is an append-only directory: one ``bugs.ndjson`` line per
record plus a serialized component sequence per dump. Detection scores the
incoming sequence against every stored sequence inside the recency window;
a best score at or above the threshold binds the candidate group's
canonical bug id (the smallest in its union-find group, so bindings stay
stable as groups grow), anything else files a new bug.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass
from pathlib import Path

from .dump_parser import CrashDump, parse_dump
from .errors import DuplicateDumpId, StoreWriteError
from .knowledge_miner import ComponentMap
from .sequencer import ComponentSequence, sequence_from_text, sequence_to_text, to_component_sequence
from .similarity import ModelParams, match_features, score_features
from .stopwords import StopWordList, filter_stop_words
from .trainer import FailureRecord, UnionFind, record_from_json, record_to_json

DUPLICATE = "duplicate"
NEW = "new"

_RECORDS_FILE = "bugs.ndjson"
_SEQUENCE_DIR = "sequences"


@dataclass(frozen=True)
class RecencyWindow:
    """Candidate bound: by age in days, or by the last K records."""

    days: float | None = 30.0
    last_k: int | None = None


@dataclass
class DetectionResult:
    dump_id: str
    verdict: str  # DUPLICATE or NEW
    bug_id: int | None
    score: float | None
    candidates_considered: int
    params: ModelParams


class FailureStore:
    """Append-only record + sequence store backed by a directory."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        try:
            (self.root / _SEQUENCE_DIR).mkdir(parents=True, exist_ok=True)
            (self.root / _RECORDS_FILE).touch()
        except OSError as exc:
            raise StoreWriteError(f"cannot initialize store at {self.root}") from exc
        self._records: list[FailureRecord] = []
        self._sequences: dict[str, ComponentSequence] = {}
        text = (self.root / _RECORDS_FILE).read_text()
        for line in text.splitlines():
            if line.strip():
                self._records.append(record_from_json(line))

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[FailureRecord]:
        return list(self._records)

    def has_dump(self, dump_id: str) -> bool:
        return any(record.dump_id == dump_id for record in self._records)

    def sequence_for(self, dump_id: str) -> ComponentSequence:
        if dump_id not in self._sequences:
            path = self.root / _SEQUENCE_DIR / f"{dump_id}.tsv"
            self._sequences[dump_id] = sequence_from_text(path.read_text(), dump_id)
        return self._sequences[dump_id]

    def next_bug_id(self) -> int:
        return max((record.bug_id for record in self._records), default=0) + 1

    def canonical_bug(self, bug_id: int) -> int:
        """Smallest bug id in the union-find group along dupe_of edges."""
        uf = UnionFind()
        known = {record.bug_id for record in self._records}
        for record in self._records:
            uf.add(record.bug_id)
            if record.dupe_of is not None and record.dupe_of in known:
                uf.union(record.bug_id, record.dupe_of)
        root = uf.find(bug_id)
        return min(b for b in known if uf.find(b) == root)

    def append(self, record: FailureRecord, sequence: ComponentSequence) -> None:
        if self.has_dump(record.dump_id):
            raise DuplicateDumpId(record.dump_id)
        try:
            path = self.root / _SEQUENCE_DIR / f"{record.dump_id}.tsv"
            path.write_text(sequence_to_text(sequence))
            with (self.root / _RECORDS_FILE).open("a") as fh:
                fh.write(record_to_json(record) + "\n")
        except OSError as exc:
            raise StoreWriteError(f"cannot append {record.dump_id}") from exc
        self._records.append(record)
        self._sequences[record.dump_id] = sequence


class Detector:
    """Wires the pipeline (parse, filter, sequence, score) over a store."""

    def __init__(
        self,
        store: FailureStore,
        cmap: ComponentMap,
        stop_list: StopWordList,
        params: ModelParams,
    ):
        self.store = store
        self.cmap = cmap
        self.stop_list = stop_list
        self.params = params

    def sequence_dump(self, text: str, dump_id: str | None = None) -> tuple[CrashDump, ComponentSequence]:
        """Run parse -> clean -> stop-filter -> sequence on dump text."""
        dump = parse_dump(text, dump_id)
        frames = filter_stop_words(dump.backtrace_frames, self.stop_list)
        sequence = to_component_sequence(frames, self.cmap, dump_id=dump.dump_id)
        return dump, sequence

    def ingest(
        self, text: str, dump_path: str = "", dump_id: str | None = None
    ) -> tuple[FailureRecord, ComponentSequence]:
        """Add a historical dump to the store under a fresh bug id.

        The record's creation time is the crash time from the dump header,
        keeping replays of the same corpus byte-identical.
        """
        dump, sequence = self.sequence_dump(text, dump_id)
        record = FailureRecord(
            bug_id=self.store.next_bug_id(),
            dump_id=dump.dump_id,
            resolution="",
            creation_time=_parse_time(dump.header["time"]),
            dupe_of=None,
            top_component=sequence.occurrences[0].component,
            dump_path=dump_path,
        )
        self.store.append(record, sequence)
        return record, sequence

    def detect(
        self,
        sequence: ComponentSequence,
        window: RecencyWindow = RecencyWindow(),
        now: datetime.datetime | None = None,
    ) -> DetectionResult:
        """Score the sequence against stored history; read-only.

        Score ties go to the most recent creation time, then the smallest
        bug id. An empty window yields a NEW verdict with no bug id bound;
        the caller files it via bind_or_file.
        """
        candidates = self._window_records(window, now)
        best: FailureRecord | None = None
        best_score: float | None = None
        for record in candidates:
            stored = self.store.sequence_for(record.dump_id)
            score = score_features(match_features(sequence, stored), self.params)
            if best is None or _better(score, record, best_score, best):
                best, best_score = record, score
        if best is not None and best_score >= self.params.threshold:
            return DetectionResult(
                dump_id=sequence.dump_id,
                verdict=DUPLICATE,
                bug_id=self.store.canonical_bug(best.bug_id),
                score=best_score,
                candidates_considered=len(candidates),
                params=self.params,
            )
        return DetectionResult(
            dump_id=sequence.dump_id,
            verdict=NEW,
            bug_id=None,
            score=best_score,
            candidates_considered=len(candidates),
            params=self.params,
        )

    def bind_or_file(
        self,
        result: DetectionResult,
        sequence: ComponentSequence,
        dump_path: str = "",
        now: datetime.datetime | None = None,
    ) -> FailureRecord:
        """Persist the verdict: bind the duplicate or file a new bug."""
        is_duplicate = result.verdict == DUPLICATE
        record = FailureRecord(
            bug_id=self.store.next_bug_id(),
            dump_id=result.dump_id,
            resolution="DUPLICATE" if is_duplicate else "",
            creation_time=now or datetime.datetime.now(datetime.timezone.utc),
            dupe_of=result.bug_id if is_duplicate else None,
            top_component=sequence.occurrences[0].component,
            dump_path=dump_path,
        )
        self.store.append(record, sequence)
        if not is_duplicate:
            result.bug_id = record.bug_id
        return record

    def triage(
        self,
        text: str,
        dump_path: str = "",
        window: RecencyWindow = RecencyWindow(),
        bind: bool = True,
    ) -> DetectionResult:
        """Full workflow for one incoming dump.

        The dump's own crash time anchors the recency window and, when
        binding, the filed record's creation time, so triage runs are
        reproducible from their inputs.
        """
        dump, sequence = self.sequence_dump(text)
        crash_time = _parse_time(dump.header["time"])
        result = self.detect(sequence, window=window, now=crash_time)
        if bind:
            self.bind_or_file(result, sequence, dump_path=dump_path, now=crash_time)
        return result

    def _window_records(
        self, window: RecencyWindow, now: datetime.datetime | None
    ) -> list[FailureRecord]:
        ordered = sorted(
            self.store.records, key=lambda r: (r.creation_time, r.bug_id)
        )
        if window.last_k is not None:
            return ordered[-window.last_k :] if window.last_k > 0 else []
        if window.days is None:
            return ordered
        now = now or datetime.datetime.now(datetime.timezone.utc)
        horizon = now - datetime.timedelta(days=window.days)
        return [record for record in ordered if record.creation_time >= horizon]


def _better(
    score: float,
    record: FailureRecord,
    best_score: float | None,
    best: FailureRecord,
) -> bool:
    if score != best_score:
        return score > best_score
    if record.creation_time != best.creation_time:
        return record.creation_time > best.creation_time
    return record.bug_id < best.bug_id


def _parse_time(text: str) -> datetime.datetime:
    stamp = datetime.datetime.fromisoformat(text.replace("Z", "+00:00"))
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=datetime.timezone.utc)
    return stamp


def render_report(result: DetectionResult) -> str:
    """One-line JSON detection report for stdout and logs."""
    return json.dumps(
        {
            "dump_id": result.dump_id,
            "verdict": result.verdict,
            "bug_id": result.bug_id,
            "score": result.score,
            "candidates_considered": result.candidates_considered,
            "m": result.params.m,
            "n": result.params.n,
            "threshold": result.params.threshold,
        },
        sort_keys=True,
    )
