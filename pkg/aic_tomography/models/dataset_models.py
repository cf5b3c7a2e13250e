"""
Dataset serialization records.

Format: ``{design_id, seed, settings: [{label, shots, counts: [...]}]}``.
Integer counts stay integers, expected-count surrogates stay floats, so a
dump/load cycle reproduces the arrays exactly.
"""

from typing import List, Optional, Union

from pydantic import BaseModel, Field, model_validator


class SettingRecord(BaseModel):
    """Counts recorded for one measurement setting."""
    label: str = Field(description="Setting label, e.g. 'sic', 'x', 'y'")
    shots: Union[int, float] = Field(description="Number of shots taken in this setting")
    counts: List[Union[int, float]] = Field(description="Outcome counts in outcome-label order")

    @model_validator(mode="after")
    def _counts_match_shots(self) -> "SettingRecord":
        total = sum(self.counts)
        if abs(total - self.shots) > 1e-9 * max(1.0, abs(self.shots)):
            raise ValueError(f"counts sum to {total}, expected {self.shots}")
        return self


class DatasetRecord(BaseModel):
    """Complete dataset as stored on disk."""
    design_id: str = Field(description="Measurement design id ('sic' or 'witness')")
    seed: Optional[int] = Field(default=None, description="Seed the counts were sampled with")
    settings: List[SettingRecord] = Field(default_factory=list, description="Per-setting counts")
