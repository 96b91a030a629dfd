def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key, (ok, title, detail) in mod.RESULTS.items():
        terminalreporter.write_line(f"[{mod.verdict(ok, key)}] {key} {title}: {detail}")
