import hashlib
import json
import math
import unicodedata

from ..config import CSV_DIGITS

RPM_PER_RADS = 60.0 / (2.0 * math.pi)


def rpm_to_rads(rpm: float) -> float:
    return rpm / RPM_PER_RADS


def rads_to_rpm(omega: float) -> float:
    return omega * RPM_PER_RADS


def mm_to_m(value: float) -> float:
    return value / 1000.0


def m_to_mm(value: float) -> float:
    return value * 1000.0


def deg_to_rad(value: float) -> float:
    return math.radians(value)


def rad_to_deg(value: float) -> float:
    return math.degrees(value)


def fmt_num(value, digits: int = CSV_DIGITS) -> str:
    """9 significant digits, locale-independent ('nan' / 'inf' spelled out)."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(float(value), f".{digits}g")


def config_hash(document: dict) -> str:
    """sha256 over the canonical JSON form of a resolved config."""
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def normalize_text(text) -> str:
    """Bỏ dấu, lowercase và strip (used for enum-like config values)."""
    text = unicodedata.normalize("NFD", str(text))
    text = text.encode("ascii", "ignore").decode("utf-8")
    return text.lower().strip().replace("-", "_").replace(" ", "_")


def grid_axis(lo: float, hi: float, step: float) -> list:
    """Inclusive arithmetic grid lo, lo+step, ..., hi (integer-indexed, no drift)."""
    if step <= 0:
        raise ValueError(f"grid step must be > 0 (step={step})")
    if hi < lo:
        raise ValueError(f"grid needs min <= max ({lo}, {hi})")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]
