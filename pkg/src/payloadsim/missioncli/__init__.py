"""Mission runner: scenario files, the step loop, reports, server, CLI."""
from .engine import (CATEGORIES, STEP_S, STEPS_PER_DAY, DayLedger,
                     EventRecord, MissionEngine, MissionReport,
                     scenario_windows)
from .reporting import format_summary, parse_line, summarize
from .scenario import (AiConfig, BudgetConfig, CaptureRule, Scenario,
                       default_scenario, load_scenario, parse_scenario)

__all__ = [
    "AiConfig", "BudgetConfig", "CaptureRule", "CATEGORIES", "DayLedger",
    "EventRecord", "MissionEngine", "MissionReport", "Scenario", "STEP_S",
    "STEPS_PER_DAY", "default_scenario", "format_summary", "load_scenario",
    "parse_line", "parse_scenario", "scenario_windows", "summarize",
]
