"""Row formatting and the trial-mapping helper."""

import numpy as np
import pytest

from dperm.experiments import (
    CSV_COLUMNS,
    Row,
    _cell,
    map_trials,
    rows_to_csv,
    thread_count,
)
from dperm.seeding import trial_rng


class TestCell:
    def test_formats(self):
        assert _cell(None) == ""
        assert _cell(True) == "true"
        assert _cell(False) == "false"
        assert _cell(3) == "3"
        assert _cell(np.int64(3)) == "3"
        assert _cell(0.1) == "0.1"
        assert _cell(np.float64(1 / 3)) == "0.333333333333"
        assert _cell("em") == "em"

    def test_twelve_significant_digits(self):
        assert _cell(0.600646730605123) == "0.600646730605"


def test_rows_to_csv_quotes_commas():
    row = Row(
        experiment="audit",
        mechanism="em(threshold,eps=1)",
        problem="threshold",
        n=3,
        epsilon=1.0,
        delta=0.0,
        seed=0,
        metric="max_log_ratio",
        value=0.5,
        stderr=None,
        bound=1.0,
        passed=True,
    )
    text = rows_to_csv([row])
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert '"em(threshold,eps=1)"' in lines[1]
    assert lines[1].endswith("true")


class TestThreads:
    def test_default_is_one(self, monkeypatch):
        monkeypatch.delenv("DPERM_THREADS", raising=False)
        assert thread_count() == 1

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("DPERM_THREADS", "4")
        assert thread_count() == 4
        monkeypatch.setenv("DPERM_THREADS", "0")
        assert thread_count() == 1

    def test_garbage_rejected(self, monkeypatch):
        monkeypatch.setenv("DPERM_THREADS", "many")
        with pytest.raises(ValueError):
            thread_count()

    def test_threaded_matches_serial(self, monkeypatch):
        def trial(i):
            return float(trial_rng(42, i).uniform())

        monkeypatch.delenv("DPERM_THREADS", raising=False)
        serial = map_trials(trial, 32)
        monkeypatch.setenv("DPERM_THREADS", "4")
        threaded = map_trials(trial, 32)
        assert serial == threaded
