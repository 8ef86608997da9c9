"""Verdict lines collected by the acceptance tests, printed after the
run by the terminal-summary hook in conftest (pytest's fd capture would
swallow them if the tests printed directly)."""

LINES = []


def record(ok, label, detail):
    LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return ok
