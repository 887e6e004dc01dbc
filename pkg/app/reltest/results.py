"""
Test results module.
This module defines the result of a relative dependency test and its JSON form.
"""
import json
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

Method = Literal["dependent", "independent", "generalized"]


class TestResult(BaseModel):
    """Outcome of one relative dependency test."""
    __test__ = False

    statistic: float
    std_dev: float = Field(ge=0)
    p_value: float = Field(ge=0, le=1)
    alpha: float = Field(gt=0, lt=1)
    reject_null: bool
    method: Method
    small_m_warning: bool = False
    m: int
    kernel: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    estimates: Dict[str, float] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _decision_matches_p_value(self):
        if self.reject_null != (self.p_value < self.alpha):
            raise ValueError("reject_null must equal p_value < alpha")
        return self

    def to_payload(self) -> dict:
        """Plain dict in the documented key order."""
        return {
            "method": self.method,
            "statistic": self.statistic,
            "std_dev": self.std_dev,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject_null": self.reject_null,
            "m": self.m,
            "kernel": self.kernel,
            "estimates": self.estimates,
            "warnings": list(self.warnings),
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_payload(), indent=indent)
