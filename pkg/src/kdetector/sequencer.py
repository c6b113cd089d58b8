"""Convert cleaned call stacks into component sequences.

Consecutive frames that map to the same component collapse into one
occurrence; the occurrence keeps the contributing function names in frame
order. Functions absent from the component map go to an ``UNKNOWN:<name>``
pseudo-component, which can only ever match an occurrence of the same
function name.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dump_parser import StackFrame
from .errors import ComponentMismatch, EmptyStack
from .knowledge_miner import ComponentMap

UNKNOWN_PREFIX = "UNKNOWN:"


@dataclass(frozen=True)
class ComponentOccurrence:
    """A run of consecutive frames belonging to one component."""

    component: str
    position: int
    functions: tuple[str, ...]


@dataclass(frozen=True)
class ComponentSequence:
    """Ordered component occurrences; position 0 is the top of the stack."""

    dump_id: str
    occurrences: tuple[ComponentOccurrence, ...]

    def __len__(self) -> int:
        return len(self.occurrences)

    def components(self) -> tuple[str, ...]:
        return tuple(occ.component for occ in self.occurrences)


def to_component_sequence(
    frames: list[StackFrame], cmap: ComponentMap, dump_id: str = ""
) -> ComponentSequence:
    """Map frames to components and collapse consecutive repeats."""
    if not frames:
        raise EmptyStack("cannot build a component sequence from zero frames")
    occurrences: list[ComponentOccurrence] = []
    run: list[str] = []
    run_component: str | None = None
    for frame in frames:
        component = cmap.component_for(frame.function_name)
        if component is None:
            component = UNKNOWN_PREFIX + frame.function_name
        if component == run_component:
            run.append(frame.function_name)
            continue
        if run_component is not None:
            occurrences.append(
                ComponentOccurrence(run_component, len(occurrences), tuple(run))
            )
        run_component = component
        run = [frame.function_name]
    occurrences.append(ComponentOccurrence(run_component, len(occurrences), tuple(run)))
    return ComponentSequence(dump_id, tuple(occurrences))


def token_levenshtein(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    """Edit distance where each function name counts as one token."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, tok in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j in range(1, len(b) + 1):
            cost = 0 if tok == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def component_distance(a: ComponentOccurrence, b: ComponentOccurrence) -> float:
    """Normalized token-level edit distance of two same-component runs."""
    if a.component != b.component:
        raise ComponentMismatch(f"{a.component!r} vs {b.component!r}")
    if a.functions == b.functions:
        return 0.0
    return token_levenshtein(a.functions, b.functions) / max(
        len(a.functions), len(b.functions)
    )


def sequence_to_text(sequence: ComponentSequence) -> str:
    """Line-delimited ``position<TAB>component<TAB>fn1,fn2,…`` form.

    Function names with commas (template instantiations) do not round-trip.
    """
    lines = [
        f"{occ.position}\t{occ.component}\t{','.join(occ.functions)}"
        for occ in sequence.occurrences
    ]
    return "\n".join(lines) + "\n"


def sequence_from_text(text: str, dump_id: str = "") -> ComponentSequence:
    occurrences = []
    for line in text.splitlines():
        if not line.strip():
            continue
        position, component, functions = line.split("\t")
        occurrences.append(
            ComponentOccurrence(component, int(position), tuple(functions.split(",")))
        )
    if not occurrences:
        raise EmptyStack("serialized sequence has no occurrences")
    return ComponentSequence(dump_id, tuple(occurrences))
