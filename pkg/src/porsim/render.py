"""Timeline rendering: the column-per-actor table used for golden traces.

Mirrors the worked-scenario layout: a Time column plus one column per actor,
rows for request sends/forwards, response-due markers, sync settlements
(annotated with the payer, "+ edge" when a severance proof rides along, or
"DOESN'T PAY" on default), off-sync proof sends, and the originator's final
receipt. Output is byte-stable for a given trace.
"""

from __future__ import annotations

from .sim import RunResult, TraceRecord

_TIME_W = 8
_COL_W = 18


def _fields(action: str) -> tuple[str, dict[str, str]]:
    parts = action.split()
    kv = {}
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if sep:
            kv.setdefault(key, value)
    return parts[0], kv


def _msg_author(tag: str) -> str:
    return tag.rsplit("#", 1)[0]


def _line(time: int, placements: list[tuple[int, str]]) -> str:
    row = f"{time:<{_TIME_W}}"
    for pos, text in sorted(placements):
        if len(row) < pos:
            row += " " * (pos - len(row))
        row += text
    return row.rstrip()


def _span_center(left_pos: int, right_pos: int, text: str) -> int:
    span = right_pos + _COL_W - left_pos
    return left_pos + max(0, (span - len(text)) // 2)


def render_timeline(result: RunResult, actors: list[str] | None = None) -> str:
    """Render the actor-column timeline for a finished run."""
    if actors is None:
        actors = result.scenario.actors
    if not actors:
        actors = sorted(result.nodes)
    pos = {name: _TIME_W + _COL_W * i for i, name in enumerate(actors)}
    lines = [_line_header(actors, pos)]
    for rec in result.trace:
        row = _render_record(rec, pos)
        if row is not None:
            lines.append(row)
    return "\n".join(lines) + "\n"


def _line_header(actors: list[str], pos: dict[str, int]) -> str:
    return _line_text(0, "Time", [(pos[a], a) for a in actors])


def _line_text(_: int, head: str, placements: list[tuple[int, str]]) -> str:
    row = f"{head:<{_TIME_W}}"
    for p, text in sorted(placements):
        if len(row) < p:
            row += " " * (p - len(row))
        row += text
    return row.rstrip()


def _render_record(rec: TraceRecord, pos: dict[str, int]) -> str | None:
    kind, kv = _fields(rec.action)
    if kind == "originate":
        actor = rec.actors[0]
        if actor in pos:
            return _line(rec.time, [(pos[actor], "Send request")])
        return None
    if kind == "send":
        sender = rec.actors[0]
        if kv.get("kind") == "forward":
            author = _msg_author(kv.get("msg", ""))
            if sender in pos and sender != author:
                return _line(rec.time, [(pos[sender], "Forward request")])
            return None
        if kv.get("kind") == "proof":
            to = kv.get("to", "")
            if sender in pos and to in pos:
                left, right = sorted((sender, to), key=lambda n: pos[n])
                text = f"<- {sender} sends proof of edge ->"
                return _line(rec.time, [(_span_center(pos[left], pos[right], text), text)])
            return None
        return None
    if kind == "recv":
        actor = rec.actors[0]
        author = _msg_author(kv.get("msg", ""))
        if actor != author or actor not in pos:
            return None
        if kv.get("kind") == "response":
            return _line(rec.time, [(pos[actor], "Receive response")])
        if kv.get("kind") == "proof":
            return _line(rec.time, [(pos[actor], "Receive proof")])
        return None
    if kind == "due":
        actor = rec.actors[0]
        author = _msg_author(kv.get("msg", ""))
        if kv.get("status") == "pending" and actor in pos and actor != author:
            return _line(rec.time, [(pos[actor], "Response due")])
        return None
    if kind == "sync":
        a, b = rec.actors
        if a not in pos or b not in pos:
            return None
        left, right = sorted((a, b), key=lambda n: pos[n])
        payers = []
        defaulters = []
        has_edge = False
        for part in rec.action.split()[1:]:
            key, _, value = part.partition("=")
            if key == "pay":
                payers.append(value.split(":")[0])
            elif key == "default":
                defaulters.append(value)
            elif key == "edge":
                has_edge = True
        bits = []
        for payer in payers:
            bits.append(f"{payer} pays")
        for side in defaulters:
            bits.append(f"{side} DOESN'T PAY")
        if not bits:
            body = "no late payment"
        else:
            body = ", ".join(bits)
        if has_edge:
            body += " + edge"
        text = f"<- sync, {body} ->"
        return _line(rec.time, [(_span_center(pos[left], pos[right], text), text)])
    return None
