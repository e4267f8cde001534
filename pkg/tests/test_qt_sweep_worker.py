import logging

import pytest

from vegspot.parallel.qt_sweep_worker import THREADS_ENV, SweepWorker, run_parallel, thread_count


def _square(x):
    return x * x


def _fail_on_odd_multiples_of_three(x):
    if x % 3 == 0 and x % 2 == 1:
        raise ValueError(f"item {x}")
    return x


class TestSweepWorker:
    """A single runnable executed in the calling thread."""

    def test_result_stored(self):
        worker = SweepWorker(_square, 7, 0)
        worker.run()
        assert worker.result == 49 and worker.error is None

    def test_error_captured(self):
        worker = SweepWorker(_fail_on_odd_multiples_of_three, 3, 0)
        worker.run()
        assert isinstance(worker.error, ValueError)

    def test_stopped_worker_skips(self):
        worker = SweepWorker(_square, 7, 0)
        worker.stop()
        worker.run()
        assert worker.result is None


class TestRunParallel:
    """Item-ordered results from the thread pool."""

    def test_order_preserved(self):
        items = list(range(40))
        assert run_parallel(_square, items, threads=4) == [x * x for x in items]

    def test_inline_matches_threaded(self):
        items = [0.5 * k for k in range(17)]
        assert run_parallel(_square, items, threads=1) == run_parallel(_square, items, threads=3)

    def test_first_failure_reraised(self):
        with pytest.raises(ValueError, match="item 3"):
            run_parallel(_fail_on_odd_multiples_of_three, range(1, 12), threads=4)

    def test_empty_sweep(self):
        assert run_parallel(_square, [], threads=4) == []


class TestThreadCount:
    """VEGSPOT_THREADS handling."""

    def test_from_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert thread_count() == 3

    def test_floor_of_one(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "0")
        assert thread_count() == 1

    def test_bad_value_ignored(self, monkeypatch, caplog):
        monkeypatch.setenv(THREADS_ENV, "many")
        with caplog.at_level(logging.WARNING):
            assert thread_count() >= 1
        assert "many" in caplog.text

    def test_default(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert thread_count() >= 1
