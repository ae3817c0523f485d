"""Shared pass/fail reporting for the acceptance suite."""

RESULTS = []


def record(name, checks, elapsed):
    """Print one pass/fail line for an acceptance criterion and assert it."""
    ok = all(flag for flag, _ in checks)
    status = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {status}: {name} [{elapsed:.1f}s]"
    RESULTS.append(line)
    print(f"\n{line}", flush=True)
    for flag, detail in checks:
        print(f"    {'ok  ' if flag else 'FAIL'} {detail}", flush=True)
    failed = [detail for flag, detail in checks if not flag]
    assert ok, f"{name}: " + "; ".join(failed)
