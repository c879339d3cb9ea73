from .scan import (
    AuditResult,
    GridAxis,
    Row,
    ScanResult,
    ScanSpec,
    compare_routes,
    emit,
    load_scan_spec,
    parse_json,
    parse_scan_spec,
    run_scan,
)

__all__ = [
    "AuditResult",
    "GridAxis",
    "Row",
    "ScanResult",
    "ScanSpec",
    "compare_routes",
    "emit",
    "load_scan_spec",
    "parse_json",
    "parse_scan_spec",
    "run_scan",
]
