from .battery import AppendixValidationError, AppendixValidator

__all__ = ["AppendixValidator", "AppendixValidationError"]
