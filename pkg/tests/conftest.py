import pytest

# criterion -> list of verify.Check, filled by test_acceptance
_ACCEPTANCE: dict[int, list] = {}


@pytest.fixture(scope="session")
def record_checks():
    def record(criterion, checks):
        _ACCEPTANCE.setdefault(criterion, []).extend(checks)
        return checks
    return record


def criterion_line(criterion, checks) -> str:
    gating = [c for c in checks if c.gating]
    known = [c for c in checks if not c.gating]
    ok_gating = all(c.passed for c in gating)
    known_failed = [c for c in known if not c.passed]
    if ok_gating and not known_failed:
        status = "PASS"
    else:
        status = "FAIL"
    note = f"{sum(c.passed for c in gating)}/{len(gating)} checks"
    if known_failed:
        note += (f"; {len(known_failed)} stated value(s) not reproduced, "
                 f"corrected checks {'pass' if ok_gating else 'FAIL'}")
    return f"criterion {criterion}: {status} ({note})"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        tr.write_line(criterion_line(crit, _ACCEPTANCE[crit]))
    tr.section("acceptance checks")
    for crit in sorted(_ACCEPTANCE):
        for c in _ACCEPTANCE[crit]:
            tr.write_line(c.line())
