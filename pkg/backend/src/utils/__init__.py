"""Utility package.

Expose table writers.
"""

from .tables import FORMATS, header_lines, render_table, resolve_output, write_table

__all__ = ["FORMATS", "header_lines", "render_table", "resolve_output", "write_table"]
