"""Line-delimited transcript persistence.

One JSON object per line.  The first line is a header naming the run
parameters; every following line is one insertion step:

    {"record": "header", "alg": ..., "n": ..., "m": ..., "r": "<decimal>"}
    {"record": "step", "t": ..., "new_key": "<decimal>",
     "labels_changed": [["<key>", old-or-null, new], ...],
     "busy": [lo, hi], "lazy": ...,
     "hierarchy": [[lo, hi, buffer, created_at], ...],
     "p": ..., "weights": [...]}

Keys are decimal strings because they routinely exceed 64 bits; labels fit
machine words at desk scale but nothing depends on that.  Objects are
written with sorted keys and no optional whitespace, so identical runs
produce byte-identical files.  File size scales with the relabeling cost of
the run, so cheap subjects write small transcripts even for long runs.

Reading replays the label changes into full allocations; the result feeds
the same verifiers as an in-memory run, with no algorithm re-execution.
"""

from __future__ import annotations

import json
from typing import IO, Iterable

from .adversary import (
    AdversaryStep,
    AdversaryTranscript,
    HierarchyLevel,
    SegmentHierarchy,
)
from .bucketing import BucketingTrace
from .core import Allocation, Segment, TraceStep


class TranscriptParseError(Exception):
    """Malformed transcript; line is the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def step_record(adv: AdversaryStep) -> dict:
    st = adv.step
    changed = []
    for key in sorted(st.relocated):
        old = st.alloc_before.label_of(key) if key != st.new_key else None
        changed.append([str(key), old, st.alloc_after.label_of(key)])
    return {
        "record": "step",
        "t": st.t,
        "new_key": str(st.new_key),
        "labels_changed": changed,
        "busy": [st.busy.lo, st.busy.hi],
        "lazy": st.lazy,
        "hierarchy": [
            [lvl.segment.lo, lvl.segment.hi, lvl.buffer, lvl.created_at]
            for lvl in adv.hierarchy.levels
        ],
        "p": adv.p,
        "weights": list(adv.weights),
    }


def write_transcript(tr: AdversaryTranscript, out: IO[str]) -> None:
    out.write(
        _dump(
            {
                "record": "header",
                "alg": tr.algorithm,
                "n": tr.n,
                "m": tr.m,
                "r": str(tr.r),
            }
        )
        + "\n"
    )
    for adv in tr.steps:
        out.write(_dump(step_record(adv)) + "\n")


def save_transcript(tr: AdversaryTranscript, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as out:
        write_transcript(tr, out)


def read_transcript(lines: Iterable[str]) -> AdversaryTranscript:
    """Rebuild a transcript, replaying label changes into allocations.

    Raises TranscriptParseError with the line number on any malformed or
    inconsistent record; semantic invariant checking is the verifier's job,
    parsing only enforces what is needed to reconstruct the run.
    """
    it = iter(enumerate(lines, start=1))
    try:
        lineno, raw = next(it)
    except StopIteration:
        raise TranscriptParseError(0, "empty transcript") from None
    header = _parse_json(lineno, raw)
    if header.get("record") != "header":
        raise TranscriptParseError(lineno, "first record must be the header")
    try:
        n = int(header["n"])
        m = int(header["m"])
        r = int(header["r"])
        alg = str(header["alg"])
    except (KeyError, ValueError) as exc:
        raise TranscriptParseError(lineno, f"bad header: {exc}") from None

    labels: dict[int, int] = {}
    alloc = Allocation.empty()
    steps: list[AdversaryStep] = []
    expected_t = 0
    for lineno, raw in it:
        if not raw.strip():
            continue
        rec = _parse_json(lineno, raw)
        if rec.get("record") != "step":
            raise TranscriptParseError(lineno, f"unexpected record {rec.get('record')!r}")
        expected_t += 1
        try:
            t = int(rec["t"])
            new_key = int(rec["new_key"])
            changed = rec["labels_changed"]
            busy = Segment(int(rec["busy"][0]), int(rec["busy"][1]))
            lazy = bool(rec["lazy"])
            hierarchy = SegmentHierarchy(
                tuple(
                    HierarchyLevel(Segment(int(lo), int(hi)), int(b), int(ca))
                    for lo, hi, b, ca in rec["hierarchy"]
                )
            )
            p = int(rec["p"])
            weights = tuple(int(w) for w in rec["weights"])
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            raise TranscriptParseError(lineno, f"bad step record: {exc}") from None
        if t != expected_t:
            raise TranscriptParseError(lineno, f"step {t} out of order (expected {expected_t})")
        relocated = set()
        for entry in changed:
            try:
                key, old, new = int(entry[0]), entry[1], int(entry[2])
            except (ValueError, TypeError, IndexError) as exc:
                raise TranscriptParseError(lineno, f"bad change entry: {exc}") from None
            if key == new_key:
                if old is not None:
                    raise TranscriptParseError(lineno, "new key carries an old label")
            elif labels.get(key) != old:
                raise TranscriptParseError(
                    lineno, f"old label of {key} is {labels.get(key)}, record says {old}"
                )
            labels[key] = new
            relocated.add(key)
        if new_key not in relocated:
            raise TranscriptParseError(lineno, "new key missing from labels_changed")
        try:
            alloc_after = Allocation.from_pairs(labels.items())
        except Exception as exc:
            raise TranscriptParseError(lineno, f"replayed allocation invalid: {exc}") from None
        step = TraceStep(t, new_key, alloc, alloc_after, frozenset(relocated), busy, lazy)
        steps.append(AdversaryStep(hierarchy, weights, p, step))
        alloc = alloc_after
    if expected_t != n:
        raise TranscriptParseError(lineno if steps else 1, f"expected {n} steps, found {expected_t}")
    return AdversaryTranscript(alg, n, m, r, tuple(steps))


def load_transcript(path: str) -> AdversaryTranscript:
    with open(path, "r", encoding="ascii") as f:
        return read_transcript(f)


def _parse_json(lineno: int, raw: str) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise TranscriptParseError(lineno, f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise TranscriptParseError(lineno, "record is not an object")
    return obj


def save_bucketing(trace: BucketingTrace, path: str) -> None:
    """Derived-bucketing file: header with k, then one record per step."""
    with open(path, "w", encoding="ascii", newline="\n") as out:
        out.write(_dump({"record": "header", "k": trace.k, "n": trace.n}) + "\n")
        for t, step in enumerate(trace.steps, start=1):
            out.write(
                _dump(
                    {
                        "record": "step",
                        "t": t,
                        "p": step.p,
                        "step_cost": step.step_cost,
                        "config": list(step.config_after),
                    }
                )
                + "\n"
            )
