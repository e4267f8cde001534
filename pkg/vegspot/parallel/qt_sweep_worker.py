"""
Thread-pool execution of independent sweep items (parameter rows, angular
wavenumbers, shooting launch points).

Each item runs in its own QRunnable; results are kept by item index so the
returned list never depends on the order in which the pool ran them.
"""
import logging
import os

from PyQt5.QtCore import QObject, QRunnable, QThread, QThreadPool, pyqtSignal, pyqtSlot

logger = logging.getLogger(__name__)

THREADS_ENV = "VEGSPOT_THREADS"


class SweepSignals(QObject):
    running = pyqtSignal(int)
    finished = pyqtSignal(int)
    cancelled = pyqtSignal(int)
    failed = pyqtSignal(int, str)


class SweepWorker(QRunnable):
    def __init__(self, fn, item, index):
        super(SweepWorker, self).__init__()

        self.fn = fn
        self.item = item
        self.index = index
        self.result = None
        self.error = None
        self.signals = SweepSignals()
        self.stop_now = False

    @pyqtSlot()
    def run(self):
        try:
            if self.stop_now:
                self.signals.cancelled.emit(self.index)
                return
            self.signals.running.emit(self.index)
            self.result = self.fn(self.item)
        except Exception as error:  # re-raised by run_parallel in index order
            self.error = error
            self.signals.failed.emit(self.index, str(error))
        finally:
            self.signals.finished.emit(self.index)

    def stop(self):
        self.stop_now = True


def thread_count():
    """worker cap from VEGSPOT_THREADS, else the ideal thread count"""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return max(1, QThread.idealThreadCount())
    try:
        value = int(raw)
    except ValueError:
        logger.warning("ignoring %s=%r, not an integer", THREADS_ENV, raw)
        return max(1, QThread.idealThreadCount())
    return max(1, value)


def run_parallel(fn, items, *, threads=None):
    """
    Apply fn to every item, in parallel when more than one thread is allowed.

    Parameters
    ----------
    fn : callable
        Pure function of one item.
    items : iterable
        Sweep items.
    threads : int, optional
        Worker cap, defaults to thread_count().

    Returns
    -------
    list
        fn(item) in item order. The first failing item (by index) re-raises.
    """
    items = list(items)
    threads = thread_count() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]

    pool = QThreadPool()
    pool.setMaxThreadCount(threads)
    workers = []
    for index, item in enumerate(items):
        worker = SweepWorker(fn, item, index)
        worker.setAutoDelete(False)
        workers.append(worker)
        pool.start(worker)
    pool.waitForDone()
    logger.debug("sweep of %d items finished on %d threads", len(items), threads)

    for worker in workers:
        if worker.error is not None:
            raise worker.error
    return [worker.result for worker in workers]
