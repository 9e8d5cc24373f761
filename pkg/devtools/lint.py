"""Linting, type checking and the unit suite in one pass."""

import subprocess
import sys

SRC_PATHS = ["src", "tests", "devtools"]
DOC_PATHS = ["README.md", "DESIGN.md", "data"]

CHECKS: list[tuple[str, list[str]]] = [
    ("codespell", ["codespell", *SRC_PATHS, *DOC_PATHS, "--skip", "uv.lock"]),
    ("ruff check", ["ruff", "check", *SRC_PATHS]),
    ("ruff format", ["ruff", "format", "--check", *SRC_PATHS]),
    ("basedpyright", ["basedpyright", *SRC_PATHS]),
]


def run_command(name: str, command: list[str]) -> bool:
    """Run a command and return success status.

    Args:
        name: Name of the tool being run
        command: Command and arguments to execute

    Returns:
        True if command succeeded, False otherwise
    """
    print(f"\n{'=' * 60}")
    print(f"Running {name}...")
    print(f"{'=' * 60}")

    result = subprocess.run(command, check=False)

    ok = result.returncode == 0
    print(f"{'✓' if ok else '✗'} {name} {'passed' if ok else 'failed'}")
    return ok


def main(argv: list[str]) -> int:
    """Run every check; ``--tests`` also runs pytest.

    Returns:
        Exit code (0 for success, 1 for failure)
    """
    checks = list(CHECKS)
    if "--tests" in argv:
        checks.append(("pytest", ["pytest", "-q"]))

    results = {name: run_command(name, command) for name, command in checks}

    print(f"\n{'=' * 60}")
    print("Summary")
    print(f"{'=' * 60}")
    for name, ok in results.items():
        print(f"  {'✓' if ok else '✗'} {name}")
    print(f"Passed: {sum(results.values())}/{len(results)}")

    return 0 if all(results.values()) else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
