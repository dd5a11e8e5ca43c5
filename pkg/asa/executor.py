"""Pluggable executors used for every parallel map in the library."""

import abc
import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class AbstractExecutor(metaclass=abc.ABCMeta):
    """
    Abstract executor.

    Implementations must return results in input order so that output is independent of
    the number of workers.
    """

    @abc.abstractmethod
    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """
        Apply a function to every item.

        :param fn: Function to apply; must not share mutable state between calls.
        :param items: Items to process.
        :return: Results, in the same order as ``items``.
        """
        raise NotImplementedError("Abstract method.")

    @property
    def workers(self) -> int:
        """Number of workers."""
        return 1


class SerialExecutor(AbstractExecutor):
    """Runs everything in the calling thread."""

    __slots__ = []

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        return [fn(item) for item in items]

    def __repr__(self):
        return f"{self.__class__.__name__}()"


class ThreadPoolMapExecutor(AbstractExecutor):
    """
    Thread pool executor.

    Numerical kernels release the GIL inside NumPy/SciPy, so threads give a useful speed-up
    for batched shooting and ensembles of simulations.
    """

    __slots__ = [
        "__threads",
    ]

    def __init__(self, threads: int):
        """
        :param threads: Number of worker threads (at least 1).
        """
        if threads < 1:
            raise ValueError(f"Number of threads must be positive, got {threads}")
        self.__threads = threads

    @property
    def workers(self) -> int:
        return self.__threads

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        if len(items) <= 1:
            return [fn(item) for item in items]
        log.debug(f"Mapping {len(items)} items over {self.__threads} threads")
        with ThreadPoolExecutor(max_workers=self.__threads) as pool:
            return list(pool.map(fn, items))

    def __repr__(self):
        return f"{self.__class__.__name__}(threads={self.__threads})"


def executor_for_threads(threads: int | None) -> AbstractExecutor:
    """
    Build the executor for a ``--threads`` value.

    :param threads: Worker count; ``None`` or 1 gives a :class:`SerialExecutor`.
    """
    if threads is None or threads <= 1:
        return SerialExecutor()
    return ThreadPoolMapExecutor(threads)


def default_executor(executor: AbstractExecutor | None) -> AbstractExecutor:
    return executor if executor is not None else SerialExecutor()
