"""
Output writers: CSV traces and tables, JSON reports, PDF bench summaries.
"""

from .text import (
    write_trace_csv, write_bench_csv, write_curves_csv, format_bench_table, format_summary,
)
from .report import save_json, save_analysis_report, save_reverse_report, save_bench_report
from .pdf import save_bench_to_pdf
