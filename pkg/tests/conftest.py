from hypothesis import HealthCheck, settings

# Property tests sample deterministically so reruns are reproducible.
settings.register_profile(
    "repro", derandomize=True, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repro")


# One pass/fail line per acceptance criterion, printed after the run.
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _CRITERIA[number] = (title, call.excinfo is None, call.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, duration, detail = _CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number:2d} {title}: {'PASS' if ok else 'FAIL'} ({duration:.1f} s) {detail}"
        )
