#!/usr/bin/env python3
"""Run only the acceptance criteria and show their PASS/FAIL lines."""

import sys
from pathlib import Path

import pytest

root = Path(__file__).resolve().parents[1]
sys.exit(pytest.main([str(root / "tests" / "test_acceptance.py"), "-q", "-s", "-p", "no:cacheprovider"]))
