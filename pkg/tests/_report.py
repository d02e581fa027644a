"""Collects one status line per acceptance criterion for the session summary."""

LINES = []


def record(number, title, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    LINES.append(f"criterion {number}: [{status}] {title}" + (f" ({detail})" if detail else ""))
    print(LINES[-1])
