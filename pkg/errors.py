"""
Error hierarchy
Validation errors exit with code 1, physics-domain errors with code 2
"""

from typing import Any, Dict


class OptomechError(Exception):
    """Base class for every error raised by the simulator"""

    code = "error"
    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready description used by the CLI error channel"""
        payload: Dict[str, Any] = {"error": self.code, "message": str(self)}
        payload.update(self.details)
        return payload


class ConfigError(OptomechError, ValueError):
    """Invalid configuration, override or sweep specification"""

    code = "config_error"


class BudgetExceededError(ConfigError):
    """Sweep grid larger than its configured point budget"""

    code = "budget_exceeded"


class PhysicsDomainError(OptomechError):
    """The requested point lies outside the physically usable regime"""

    code = "physics_domain_error"
    exit_code = 2


class DegenerateCubicError(PhysicsDomainError):
    code = "degenerate_cubic"


class NoStableRootError(PhysicsDomainError):
    code = "no_stable_root"


class UnstableOperatingPointError(PhysicsDomainError):
    code = "unstable_operating_point"


class StaticInstabilityError(PhysicsDomainError):
    """Effective spring constant is not positive (linearized buckling)"""

    code = "static_instability"


class ParametricInstabilityError(PhysicsDomainError):
    """Effective damping is not positive"""

    code = "parametric_instability"


class QuadratureError(PhysicsDomainError):
    code = "quadrature_error"


class IntegrationError(PhysicsDomainError):
    code = "integration_error"


class InstabilityError(PhysicsDomainError):
    """A trajectory grew or diverged instead of settling"""

    code = "instability"
