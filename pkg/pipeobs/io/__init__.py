"""Run artifacts: series CSV, canonical summaries and decay plots."""
