import pytest

# criterion number -> list of (part, ok, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}

TITLES = {
    1: "defining relations, exact mode check",
    2: "OPE closed forms and raw-product oracle",
    3: "difference equations",
    4: "pole and zero structure",
    5: "product collapse and survivor counts",
    6: "parafermions",
    7: "cross-backend agreement (tol 1e-9)",
    8: "negative controls",
}


@pytest.fixture
def acceptance():
    def record(criterion: int, part: str, ok: bool, detail: str = ""):
        ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        bad = [p for p, ok, _ in parts if not ok]
        status = "PASS" if not bad else "FAIL"
        tail = f" (failed: {'; '.join(bad)})" if bad else ""
        tr.write_line(f"criterion {n} [{status}] {TITLES[n]}: "
                      f"{len(parts) - len(bad)}/{len(parts)} parts{tail}")
        for p, ok, detail in parts:
            tr.write_line(f"    {'ok  ' if ok else 'FAIL'} {p}{': ' + detail if detail else ''}")
