"""Results of checks and runs."""

from enum import Enum, unique

from ..helpers import dump_json


@unique
class CheckStatus(Enum):
    PASSED = "passed"
    FAILED = "failed"
    SKIPPED = "skipped"

    def __str__(self):
        return self.value


class CheckResult:
    """
    Outcome of one property suite or consistency check.
    """

    __slots__ = [
        "__name",
        "__status",
        "__message",
        "__details",
    ]

    def __init__(
        self,
        name: str,
        status: CheckStatus,
        message: str = "",
        details: dict | None = None,
    ):
        """
        :param name: Suite or check name.
        :param status: Outcome.
        :param message: One-line summary.
        :param details: JSON-able details (counts, counterexamples).
        """
        self.__name = name
        self.__status = status
        self.__message = message
        self.__details = details if details is not None else {}

    @classmethod
    def from_violations(
        cls, name: str, violations: list, details: dict | None = None, what: str = "violations"
    ) -> "CheckResult":
        details = dict(details or {})
        details[what] = violations[:20]
        details[f"{what}_count"] = len(violations)
        status = CheckStatus.PASSED if not violations else CheckStatus.FAILED
        return cls(name, status, f"{len(violations)} {what}", details)

    def __repr__(self):
        return f"{self.__class__.__name__}(name={self.name}, status={self.status}, message={self.message!r})"

    @property
    def name(self) -> str:
        return self.__name

    @property
    def status(self) -> CheckStatus:
        return self.__status

    @property
    def passed(self) -> bool:
        """Whether the check didn't fail (skipped checks count as passed)."""
        return self.__status != CheckStatus.FAILED

    @property
    def message(self) -> str:
        return self.__message

    @property
    def details(self) -> dict:
        return self.__details

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": str(self.status),
            "message": self.message,
            "details": self.details,
        }


class DissipativityCondition:
    """One sampled dissipativity condition."""

    __slots__ = [
        "__name",
        "__holds",
        "__counterexample",
        "__note",
    ]

    def __init__(
        self,
        name: str,
        holds: bool | None,
        counterexample: dict | None = None,
        note: str = "",
    ):
        """
        :param name: Condition name.
        :param holds: ``True``/``False`` on the samples; ``None`` if it can't be sampled.
        :param counterexample: First failing sample.
        :param note: Extra information (bounds observed, why not checked).
        """
        self.__name = name
        self.__holds = holds
        self.__counterexample = counterexample
        self.__note = note

    def __repr__(self):
        return f"{self.__class__.__name__}(name={self.name}, holds={self.holds})"

    @property
    def name(self) -> str:
        return self.__name

    @property
    def holds(self) -> bool | None:
        return self.__holds

    @property
    def counterexample(self) -> dict | None:
        return self.__counterexample

    @property
    def note(self) -> str:
        return self.__note

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": self.holds,
            "counterexample": self.counterexample,
            "note": self.note,
        }


class DissipativityReport:
    """Sampled dissipativity conditions."""

    __slots__ = [
        "__conditions",
    ]

    def __init__(self, conditions: list[DissipativityCondition]):
        self.__conditions = list(conditions)

    def __repr__(self):
        return f"{self.__class__.__name__}(holds={self.holds})"

    def __getitem__(self, name: str) -> DissipativityCondition:
        for condition in self.__conditions:
            if condition.name == name:
                return condition
        raise KeyError(name)

    @property
    def conditions(self) -> list[DissipativityCondition]:
        return list(self.__conditions)

    @property
    def holds(self) -> bool:
        """No sampled condition failed."""
        return all(c.holds is not False for c in self.__conditions)

    @property
    def failures(self) -> list[DissipativityCondition]:
        return [c for c in self.__conditions if c.holds is False]

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "conditions": [c.to_dict() for c in self.__conditions],
        }


@unique
class Outcome(Enum):
    REACHED = "reached"
    TIMEOUT = "timeout"
    DIVERGED = "diverged"
    FAILED = "failed"
    """The unstable directions couldn't be computed, so nothing was run."""

    def __str__(self):
        return self.value


class HeteroclinicVerdict:
    """
    Result of following one unstable direction of an equilibrium.
    """

    __slots__ = [
        "__source",
        "__mode",
        "__sign",
        "__outcome",
        "__reached",
        "__time",
        "__distance",
        "__expected",
    ]

    def __init__(
        self,
        source: int,
        mode: int | None,
        sign: int,
        outcome: Outcome,
        reached: int | None = None,
        time: float = 0.0,
        distance: float | None = None,
        expected: int | None = None,
    ):
        """
        :param source: Label of the perturbed equilibrium.
        :param mode: Index ``k`` of the unstable direction ``φ_k``; ``None`` if no direction was run.
        :param sign: ``+1`` or ``-1``; ``0`` if no direction was run.
        :param outcome: How the run ended.
        :param reached: Label of the equilibrium reached, if any.
        :param time: Time at which the run stopped.
        :param distance: Final L²_w distance to the nearest equilibrium.
        :param expected: Label of the equilibrium the run was meant to reach, if any.
        """
        self.__source = source
        self.__mode = mode
        self.__sign = sign
        self.__outcome = outcome
        self.__reached = reached
        self.__time = float(time)
        self.__distance = distance
        self.__expected = expected

    def __repr__(self):
        if self.mode is None:
            direction = "none"
        else:
            direction = f"{'+' if self.sign > 0 else '-'}phi_{self.mode}"
        return (
            f"{self.__class__.__name__}("
            f"source={self.source}, "
            f"direction={direction}, "
            f"outcome={self.outcome}, "
            f"reached={self.reached}"
            ")"
        )

    @property
    def source(self) -> int:
        return self.__source

    @property
    def mode(self) -> int | None:
        return self.__mode

    @property
    def sign(self) -> int:
        return self.__sign

    @property
    def outcome(self) -> Outcome:
        return self.__outcome

    @property
    def reached(self) -> int | None:
        return self.__reached

    @property
    def time(self) -> float:
        return self.__time

    @property
    def distance(self) -> float | None:
        return self.__distance

    @property
    def expected(self) -> int | None:
        return self.__expected

    @property
    def reached_expected(self) -> bool | None:
        """Whether the run ended at :attr:`expected`; ``None`` without an expectation."""
        if self.__expected is None:
            return None
        return self.__outcome == Outcome.REACHED and self.__reached == self.__expected

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "mode": self.mode,
            "sign": self.sign,
            "outcome": str(self.outcome),
            "reached": self.reached,
            "expected": self.expected,
            "time": self.time,
            "distance": self.distance,
        }


class RunReport:
    """
    Report of an ``analyze`` or ``verify`` run.

    Serialization is deterministic; wall-clock timings are kept under a separate key.
    """

    __slots__ = [
        "__sections",
        "__checks",
        "__timings",
    ]

    def __init__(self):
        self.__sections = {}
        self.__checks = []
        self.__timings = {}

    def __repr__(self):
        return f"{self.__class__.__name__}(sections={list(self.__sections)}, checks={len(self.__checks)})"

    def set(self, key: str, value) -> None:
        """Set a top-level section; sections keep the order they are first set in."""
        self.__sections[key] = value

    def get(self, key: str, default=None):
        return self.__sections.get(key, default)

    def add_check(self, check: CheckResult) -> None:
        self.__checks.append(check)

    def add_timing(self, step: str, seconds: float) -> None:
        self.__timings[step] = round(seconds, 3)

    @property
    def checks(self) -> list[CheckResult]:
        return list(self.__checks)

    @property
    def timings(self) -> dict[str, float]:
        return dict(self.__timings)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.__checks)

    def to_dict(self, include_timings: bool = True) -> dict:
        data = dict(self.__sections)
        data["checks"] = [check.to_dict() for check in self.__checks]
        if include_timings:
            data["timings"] = self.timings
        return data

    def to_json(self, include_timings: bool = True) -> str:
        return dump_json(self.to_dict(include_timings=include_timings))
