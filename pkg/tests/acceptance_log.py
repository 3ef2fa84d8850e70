"""Pass/fail lines collected by test_acceptance and printed by conftest."""

RESULTS: list[tuple[str, bool, str]] = []
