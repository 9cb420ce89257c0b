#!/usr/bin/env python3
"""Reference evaluator for unit-test expressions, written independently of the
C++ implementation.

Grooves are held the way the reference pseudocode holds them: a dict from
instrument letter to a list of four beat strings. Expressions are translated
to Python source (&& -> and, || -> or, ! -> not, bare tags -> strings) and
evaluated with eval().

Usage:
  dsl_oracle.py echo-verdicts DEV_JSONL            print {id: verdict} for edited == original
  dsl_oracle.py check-echo DEV_JSONL FIXTURE_JSON  exit 1 if the fixture disagrees
"""

import json
import re
import sys


def to_drum_dict(text):
    drum_dict = {}
    for line in text.strip().split("\n"):
        inst, body = line.split(":", 1)
        drum_dict[inst.strip()] = body.strip().split("|")
    return drum_dict


def notes_of(drum_dict, inst):
    beats = drum_dict.get(inst, [])
    return [note for beat in beats for note in beat]


# Timbre of each glyph per instrument, from the notation legend.
TIMBRE = {
    "K": {"O": "head", "o": "head"},
    "S": {"O": "head", "o": "head", "X": "sidestick", "x": "sidestick"},
    "H": {"O": "open", "o": "open", "X": "closed", "x": "closed"},
    "T": {"O": "head", "o": "head"},
    "C": {"O": "head", "o": "head"},
    "R": {"O": "bell", "o": "bell", "X": "bow", "x": "bow"},
}


def make_env(original, edited):
    def have_inst_on_note(inst, pos):
        notes = notes_of(edited, inst)
        # If the 16th note at the position is not '-', return True
        if notes[pos] != "-":
            return True
        return False

    def no_inst_on_note(inst, pos):
        return notes_of(edited, inst)[pos] == "-"

    def have_inst_in_beat(inst, beat):
        return any(n != "-" for n in edited[inst][beat])

    def no_inst_in_beat(inst, beat):
        return all(n == "-" for n in edited[inst][beat])

    def no_inst_anywhere(inst):
        return all(n == "-" for n in notes_of(edited, inst))

    def hits(dd, inst):
        return sum(1 for n in notes_of(dd, inst) if n != "-")

    def count_cmp(inst, op, ref):
        lhs = hits(edited, inst)
        rhs = hits(original, inst) if ref == "original" else int(ref)
        return {
            "lt": lhs < rhs,
            "le": lhs <= rhs,
            "gt": lhs > rhs,
            "ge": lhs >= rhs,
            "eq": lhs == rhs,
        }[op]

    def has_backbeat_notes(minimum):
        n = 0
        for inst in edited:
            for i, note in enumerate(notes_of(edited, inst)):
                if note != "-" and i % 4 != 0:
                    n += 1
        return n >= minimum

    def have_artic_on_note(inst, pos, cls):
        note = notes_of(edited, inst)[pos]
        if note == "-":
            return False
        timbre, _, dyn = cls.partition("_")
        if timbre in ("hard", "soft"):
            timbre, dyn = "any", timbre
        if timbre not in ("any",) and TIMBRE[inst][note] != timbre:
            return False
        if dyn == "hard":
            return note.isupper()
        if dyn == "soft":
            return note.islower()
        return True

    return {k: v for k, v in locals().items() if callable(v)}


FUNCS = {
    "have_inst_on_note",
    "no_inst_on_note",
    "have_inst_in_beat",
    "no_inst_in_beat",
    "no_inst_anywhere",
    "count_cmp",
    "has_backbeat_notes",
    "have_artic_on_note",
}


def to_python(expr):
    expr = re.sub(r"^\s*\w+\s*:=", "", expr)
    out = []
    for tok in re.findall(r'"[^"]*"|&&|\|\||!|\w+|[(),]|\s+', expr):
        if tok == "&&":
            out.append(" and ")
        elif tok == "||":
            out.append(" or ")
        elif tok == "!":
            out.append(" not ")
        elif re.fullmatch(r"[A-Za-z_]\w*", tok) and tok not in FUNCS:
            out.append(repr(tok))
        else:
            out.append(tok)
    return "".join(out)


def evaluate(expr, original_text, edited_text):
    env = make_env(to_drum_dict(original_text), to_drum_dict(edited_text))
    return bool(eval(to_python(expr), {"__builtins__": {}}, env))


def echo_verdicts(path):
    verdicts = {}
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            verdicts[row["id"]] = evaluate(row["test"], row["original"], row["original"])
    return verdicts


def main(argv):
    if len(argv) >= 3 and argv[1] == "echo-verdicts":
        print(json.dumps(echo_verdicts(argv[2]), indent=2, sort_keys=True))
        return 0
    if len(argv) >= 4 and argv[1] == "check-echo":
        with open(argv[3]) as f:
            frozen = json.load(f)
        fresh = echo_verdicts(argv[2])
        if fresh != frozen:
            for k in sorted(set(fresh) | set(frozen)):
                if fresh.get(k) != frozen.get(k):
                    print(f"{k}: oracle={fresh.get(k)} fixture={frozen.get(k)}")
            return 1
        print(f"{len(fresh)} verdicts agree")
        return 0
    print(__doc__)
    return 2


if __name__ == "__main__":
    sys.exit(main(sys.argv))
