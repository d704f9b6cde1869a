import re


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance" not in report.nodeid:
        return
    match = re.search(r"::test_c(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    if report.when == "setup" and report.skipped:
        status = "SKIP"
    elif report.when == "call":
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    else:
        return
    print(f"\n[criterion {match.group(1)}] {match.group(2)}: {status}", flush=True)
