from .harness import AcceptanceHarness, CheckResult

__all__ = ["AcceptanceHarness", "CheckResult"]
