from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from rdphase.core.exceptions import AcceptanceCheckError, RDPhaseError
from rdphase.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass
class CheckResult:
    """Holds the outcome of a single acceptance check."""

    name: str
    passed: bool
    detail: str = ""
    metrics: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "metrics": dict(self.metrics),
        }


CheckOutput = Union[CheckResult, Tuple[bool, str, Dict[str, Any]]]


class AcceptanceHarness:
    """
    Runs named acceptance checks for one experiment and collects their results.

    A check is any callable returning a `CheckResult` or a
    `(passed, detail, metrics)` tuple. Library errors raised inside a check
    count as a failure of that check instead of aborting the run.

    Example:
        harness = AcceptanceHarness("chain")
        harness.check("excursion mean", lambda: (abs(mean - 3) < 0.05, "", {"mean": mean}))
        harness.raise_for_failures()
    """

    def __init__(self, experiment: str):
        self.experiment = experiment
        self.results: List[CheckResult] = []

    def check(self, name: str, fn: Callable[[], CheckOutput]) -> CheckResult:
        try:
            output = fn()
        except RDPhaseError as e:
            result = CheckResult(name=name, passed=False, detail=e.reason())
        else:
            if isinstance(output, CheckResult):
                result = output
            else:
                passed, detail, metrics = output
                result = CheckResult(
                    name=name, passed=bool(passed), detail=detail, metrics=metrics
                )
        logger.info(
            "%s check '%s': %s", self.experiment, name, "pass" if result.passed else "FAIL"
        )
        self.results.append(result)
        return result

    def record(self, result: CheckResult) -> None:
        self.results.append(result)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> Dict[str, Any]:
        """Returns a dictionary summarizing the checks run so far."""
        total = len(self.results)
        return {
            "experiment": self.experiment,
            "checks": total,
            "passed": total - len(self.failures),
            "failed": [r.name for r in self.failures],
            "results": [r.summary() for r in self.results],
        }

    def raise_for_failures(self, message: Optional[str] = None) -> None:
        """
        Raises:
            AcceptanceCheckError: If any recorded check failed.
        """
        if self.failures:
            names = ", ".join(r.name for r in self.failures)
            raise AcceptanceCheckError(
                message or f"{self.experiment}: failed checks: {names}"
            )
