"""Coleman-Gurtin heat conduction with memory under a Beltrami conductivity.

Thin python surface over the C++ core: conductivity construction, the
divergence-form solver, kernel validation, the Beurling/Beltrami spectral
operators, and scenario execution.
"""

from __future__ import annotations

import json as _json
from typing import Any

from ._core import (  # noqa: F401
    NumericsError,
    ScenarioError,
    __version__,
    apply_operator,
    beurling,
    conductivity,
    ellipticity_report,
    neumann_resolvent,
    run_scenario_json,
    scenario_hash,
    smallest_eigenvalue,
    solve_beltrami,
    solve_dirichlet,
    validate_kernel_exp_sum,
)


def _to_json(scenario: "dict[str, Any] | str") -> str:
    if isinstance(scenario, str):
        return scenario
    return _json.dumps(scenario)


def run(scenario: "dict[str, Any] | str", outdir: str, mode: str = "run") -> dict:
    """Execute a scenario document and return its summary.

    ``mode`` selects the pipeline: run, steady, decompose, validate or
    beltrami. Raises ``ScenarioError`` / ``NumericsError`` on the same
    conditions that make the CLI exit 2 / 3.
    """
    result = run_scenario_json(_to_json(scenario), outdir, mode)
    summary = _json.loads(result["summary_json"])
    summary["_ok"] = result["ok"]
    summary["_outdir"] = result["outdir"]
    return summary


__all__ = [
    "NumericsError",
    "ScenarioError",
    "__version__",
    "apply_operator",
    "beurling",
    "conductivity",
    "ellipticity_report",
    "neumann_resolvent",
    "run",
    "run_scenario_json",
    "scenario_hash",
    "smallest_eigenvalue",
    "solve_beltrami",
    "solve_dirichlet",
    "validate_kernel_exp_sum",
]
