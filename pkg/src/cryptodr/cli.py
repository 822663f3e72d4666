"""Command-line entry point.

    analyze --config run.json [--output DIR] [--format json,md,csv]
    analyze fixtures verify

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from .errors import AnalysisError, ConfigError, DataError

log = logging.getLogger("cryptodr")


def fixtures_dir() -> Path:
    return Path(str(resources.files("cryptodr") / "fixtures"))


def default_config_path() -> Path:
    return fixtures_dir() / "default_config.json"


def verify_fixtures(root: Path | None = None) -> list[tuple[str, bool]]:
    """Recompute fixture hashes against ``MANIFEST.json``; returns (file, ok) pairs."""
    root = root or fixtures_dir()
    try:
        manifest = json.loads((root / "MANIFEST.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {root / 'MANIFEST.json'}: {exc}") from None
    results = []
    for name, expected in sorted(manifest["files"].items()):
        try:
            actual = hashlib.sha256((root / name).read_bytes()).hexdigest()
        except OSError as exc:
            raise DataError(f"cannot read {root / name}: {exc.strerror}") from None
        results.append((name, actual == expected))
    return results


def _analyze_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="analyze",
        description="Run the BTC/ETH feature, PCA/CCA and regression pipeline and write a report.",
        epilog="Use 'analyze fixtures verify' to check the bundled fixture hashes.",
    )
    ap.add_argument("--config", type=Path, default=None,
                    help="JSON experiment config (default: the bundled fixture config)")
    ap.add_argument("--output", type=Path, default=None, help="output directory (overrides the config)")
    ap.add_argument("--format", dest="formats", default=None,
                    help="comma-separated subset of json,md,csv (overrides the config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _run_fixtures(argv: list[str]) -> int:
    ap = argparse.ArgumentParser(prog="analyze fixtures", description="Fixture maintenance.")
    ap.add_argument("action", choices=["verify"])
    ap.parse_args(argv)
    results = verify_fixtures()
    for name, ok in results:
        print(f"{'ok' if ok else 'MISMATCH'}  {name}")
    return 0 if all(ok for _, ok in results) else DataError.exit_code


def _run_analyze(argv: list[str]) -> int:
    args = _analyze_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    # heavy imports after argument parsing keeps --help fast
    from .pipeline import ExperimentConfig, parse_formats, run_experiment
    from .report import emit_report

    cfg = ExperimentConfig.load(args.config or default_config_path())
    formats = parse_formats(args.formats) if args.formats else None
    report = run_experiment(cfg)
    written = emit_report(report, cfg, output_dir=args.output, formats=formats)
    for path in written:
        print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv[:1] == ["fixtures"]:
            return _run_fixtures(argv[1:])
        return _run_analyze(argv)
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
