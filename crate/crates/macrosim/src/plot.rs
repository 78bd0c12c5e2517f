//! Self-contained SVG chart rendering for batch reports.
