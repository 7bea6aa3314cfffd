"""
Rebuilding the published study tables
=====================================

The package ships the 22-subject roster and the device comparison as CSV.
This script recomputes the per-subject burn and the error summary.
"""

from parktrack import evaluation as ev

rows = ev.reproduce_table3(ev.load_roster())
print(ev.format_table3(rows))
print()

records = ev.load_comparisons()
report = ev.evaluate(records)
print(ev.format_report(report, records))

# The recomputed MAE and MPE do not agree with the headline figures;
# both are kept visible rather than forcing a match.
print()
print(f"MAE  recomputed {report.mae_kcal:.4f}  published {ev.PUBLISHED_MAE_KCAL}")
print(f"MPE  recomputed {report.mpe_percent:.4f}% published {ev.PUBLISHED_MPE_PERCENT}%")
