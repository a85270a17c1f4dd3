from .ingest import (
    IssueReport,
    ManualTestSession,
    apply_issues,
    apply_manual,
    load_issue_report,
    load_manual_session,
)
from .metrics import ANOVA_METRICS, METRICS, Factor, group_runs, metric
from .report import AnovaOutcome, emit_report, format_p, run_anovas, stars
from .stats import AnovaResult, Summary, anova_oneway, betainc, descriptive, f_sf

__all__ = [
    "IssueReport", "ManualTestSession", "apply_issues", "apply_manual",
    "load_issue_report", "load_manual_session",
    "ANOVA_METRICS", "METRICS", "Factor", "group_runs", "metric",
    "AnovaOutcome", "emit_report", "format_p", "run_anovas", "stars",
    "AnovaResult", "Summary", "anova_oneway", "betainc", "descriptive", "f_sf",
]
