"""
Report records emitted by the CLI.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ReportEnvelope(BaseModel):
    """A JSON report: provenance header plus one or more records."""
    tool: str = Field(default="eikolab", description="Tool name")
    version: str = Field(..., description="Tool version")
    command: str = Field(..., description="Subcommand that produced the report")
    config_hash: str = Field(..., description="sha256 of the canonical run configuration")
    records: List[Dict[str, Any]] = Field(default_factory=list, description="Report records")


class GenerateRecord(BaseModel):
    """Summary of a generated field file."""
    generator: str
    params: Dict[str, Any] = Field(default_factory=dict)
    nx: int
    ny: int
    x0: float
    y0: float
    h: float
    shifted: bool = Field(..., description="Grid was half-shifted off the singular set")
    unit: bool
    unit_defect: float
    output: str


class SeminormRecord(BaseModel):
    """One rung of a seminorm or commutator ladder."""
    s: float
    p: float
    window: Dict[str, Any]
    h: float
    eps: Optional[float] = None
    value: float
    tail: Optional[float] = None
    pairs_used: Optional[int] = None
    stderr: Optional[float] = None


class ProductionRecord(BaseModel):
    entropy: Dict[str, Any]
    zeta: Dict[str, Any]
    h: float
    eps: Optional[float] = None
    I: Optional[float] = None
    II: Optional[float] = None
    total: float


class WindingRecord(BaseModel):
    loop: Dict[str, Any]
    degree: int
