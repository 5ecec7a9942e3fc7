"""Summary workbook (xlsx) cho bảng so sánh EVRR / FRR."""
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Dict, List

from openpyxl import Workbook, load_workbook
from openpyxl.styles import Font

from .utils import m_to_mm, rad_to_deg

logger = logging.getLogger(__name__)

SHEET_SUMMARY = "summary"
SHEET_FAILURES = "failures"
HEADER = ["JOINT", "ANGLE_RAD", "R_MM", "S0_MM", "DTHETA_DEG", "K_FIXED", "W_TAKEOFF_J", "H_JUMP_M", "IMPROVEMENT_PCT"]


def _cell(value):
    # openpyxl không ghi được NaN vào ô số
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_summary_workbook(report, path: str | Path) -> Path:
    path = Path(path)
    wb = Workbook()
    ws = wb.active
    ws.title = SHEET_SUMMARY

    ws.append(["Takeoff comparison, rows ordered by crouch depth"])
    ws.append(HEADER)
    for cell in ws[2]:
        cell.font = Font(bold=True)

    for row in report.rows:
        p = row.vrr_params
        ws.append([
            "EVRR", row.angle, m_to_mm(p.r), m_to_mm(p.S0), rad_to_deg(p.delta_theta), None,
            row.w_vrr, row.h_vrr, _cell(row.improvement_pct),
        ])
    for row in report.rows:
        ws.append(["FRR", row.angle, None, None, None, row.frr_k, row.w_frr, row.h_frr, None])

    if report.failures:
        wf = wb.create_sheet(SHEET_FAILURES)
        wf.append(["ANGLE_RAD", "MESSAGE"])
        for angle, msg in report.failures.items():
            wf.append([angle, msg])

    wb.save(path)
    wb.close()
    logger.info("[Workbook] Saved %s (%d rows)", path, 2 * len(report.rows))
    return path


def read_summary_workbook(path: str | Path) -> List[Dict[str, Any]]:
    """Đọc lại sheet summary; header row được tìm theo cột JOINT."""
    wb = load_workbook(Path(path), data_only=True)
    try:
        ws = wb[SHEET_SUMMARY]
        rows = list(ws.iter_rows(values_only=True))

        # Tìm header row
        header_idx = None
        for idx, row in enumerate(rows):
            if row and any(cell and str(cell).upper().strip() == "JOINT" for cell in row):
                header_idx = idx
                break
        if header_idx is None:
            logger.warning("[Workbook] Sheet '%s' has no JOINT header", SHEET_SUMMARY)
            return []

        columns = {str(c).upper().strip(): i for i, c in enumerate(rows[header_idx]) if c is not None}
        out = []
        for row in rows[header_idx + 1:]:
            if not row or not any(v is not None for v in row):
                continue
            out.append({name.lower(): (row[i] if i < len(row) else None) for name, i in columns.items()})
        return out
    finally:
        wb.close()
