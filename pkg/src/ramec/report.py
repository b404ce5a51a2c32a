from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SolveReport:
    """Diagnostics attached to every solve.

    ``objective_trace`` holds the best objective seen after each outer step
    (non-decreasing); ``raw_trace`` holds the objective of each step's iterate.
    """

    outer_iterations: int = 0
    objective_trace: list[float] = field(default_factory=list)
    raw_trace: list[float] = field(default_factory=list)
    converged: bool = True
    max_constraint_residual: float = 0.0
    kkt_residual: float = 0.0
    wall_time: float = 0.0
    newton_iterations: int = 0
    message: str = ""
