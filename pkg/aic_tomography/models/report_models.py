"""
Fit, ranking, posterior and verification report models.
"""

import math
from typing import List, Optional

from pydantic import BaseModel, Field


class FitResult(BaseModel):
    """Maximum-likelihood fit of one model family."""
    name: str = Field(description="Model label")
    param_names: List[str] = Field(default_factory=list, description="Parameter names in theta order")
    theta_hat: List[float] = Field(default_factory=list, description="Maximum-likelihood parameters")
    loglik: float = Field(description="Maximized log-likelihood L_M in nats")
    K: int = Field(description="Number of free parameters")
    n_samples: float = Field(description="Number of shots N in the scored dataset")
    aic: float = Field(description="-2 L_M + 2K")
    aicc: Optional[float] = Field(default=None, description="Small-sample AIC; null when N <= K + 1")

    @property
    def log_likelihood(self) -> float:
        return self.loglik

    @property
    def theta(self) -> dict:
        return dict(zip(self.param_names, self.theta_hat))


class FpmBound(BaseModel):
    """Full-parameter model, represented only by its likelihood upper bound."""
    K: int = Field(description="Independent parameters of the full-parameter model")
    loglik_bound: float = Field(description="Log-likelihood of the observed frequencies")
    aic: float = Field(description="-2 * bound + 2K")
    aicc: Optional[float] = Field(default=None, description="AICc of the bound; null when N <= K + 1")


class RankingReport(BaseModel):
    """Models ranked against the full-parameter bound on one dataset."""
    models: List[FitResult] = Field(default_factory=list)
    fpm: FpmBound
    delta_aic: List[float] = Field(default_factory=list, description="AIC(model) - AIC(FPM) per model")
    delta_aicc: List[Optional[float]] = Field(default_factory=list, description="AICc(model) - AICc(FPM) per model")

    @property
    def neg_delta_aic(self) -> List[float]:
        """Positive entries mean the simple model is preferred."""
        return [-value for value in self.delta_aic]

    def preferred(self) -> List[bool]:
        return [value < 0 for value in self.delta_aic]

    def fit(self, name: str) -> FitResult:
        for model in self.models:
            if model.name == name:
                return model
        raise KeyError(name)


class PosteriorSummary(BaseModel):
    """Weighted mean and central credible interval of a monotone."""
    which: str = Field(description="Monotone name: N0, N1 or N2")
    mean: float
    ci_low: float
    ci_high: float
    credible_mass: float = Field(default=0.95)

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


class CheckResult(BaseModel):
    """Outcome of one verification check."""
    name: str
    passed: bool
    value: Optional[float] = None
    expected: Optional[float] = None
    tolerance: Optional[str] = None
    detail: str = ""
    seconds: float = 0.0


class VerificationReport(BaseModel):
    """All checks of one verify run."""
    level: str
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def to_table(self) -> str:
        """Plain-text acceptance table."""
        lines = [f"{'check':<44} {'result':<6} {'value':>14} {'expected':>14}  tolerance"]
        for check in self.checks:
            value = "" if check.value is None or math.isnan(check.value) else f"{check.value:.6g}"
            expected = "" if check.expected is None else f"{check.expected:.6g}"
            status = "PASS" if check.passed else "FAIL"
            lines.append(
                f"{check.name:<44} {status:<6} {value:>14} {expected:>14}  {check.tolerance or ''}"
            )
        return "\n".join(lines)
