import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose per-phase outcomes so the acceptance suite can print its
    # verdict lines even though pytest captures test output
    outcome = yield
    report = outcome.get_result()
    setattr(item, "outcome_" + report.when, report.outcome)
