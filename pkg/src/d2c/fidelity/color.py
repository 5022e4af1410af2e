"""sRGB-to-Lab conversion, the CIEDE2000 color difference, and CSS color parsing."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

RGB = tuple[int, int, int]

# CIE constants (exact rational forms).
_EPSILON = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0

# sRGB -> XYZ under D65, full-precision derivation of the IEC 61966-2-1
# primaries. The reference white is the matrix applied to (1, 1, 1), which
# makes pure white map exactly to L=100, a=b=0.
_M = (
    (0.41239079926595934, 0.357584339383878, 0.1804807884018343),
    (0.21263900587151027, 0.715168678767756, 0.07219231536073371),
    (0.019330818715591825, 0.11919477979462598, 0.9505321522496607),
)
_D65 = tuple(sum(row) for row in _M)


@dataclass(frozen=True)
class LabColor:
    L: float
    a: float
    b: float


def _srgb_to_linear(c: float) -> float:
    return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4


def srgb_to_lab(rgb: tuple[float, float, float]) -> LabColor:
    """Convert an sRGB color (channels in [0, 255]) to Lab under D65."""
    r, g, b = (_srgb_to_linear(c / 255.0) for c in rgb)
    x = r * _M[0][0] + g * _M[0][1] + b * _M[0][2]
    y = r * _M[1][0] + g * _M[1][1] + b * _M[1][2]
    z = r * _M[2][0] + g * _M[2][1] + b * _M[2][2]

    def f(t: float) -> float:
        return t ** (1.0 / 3.0) if t > _EPSILON else (_KAPPA * t + 16.0) / 116.0

    fx, fy, fz = f(x / _D65[0]), f(y / _D65[1]), f(z / _D65[2])
    return LabColor(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))


def ciede2000(x: LabColor, y: LabColor, kl: float = 1.0, kc: float = 1.0, kh: float = 1.0) -> float:
    """CIEDE2000 color difference with standard weighting (kL = kC = kH = 1),
    including the blue-region hue rotation term."""
    c1 = math.hypot(x.a, x.b)
    c2 = math.hypot(y.a, y.b)
    c_bar = (c1 + c2) / 2.0
    g = 0.5 * (1.0 - math.sqrt(c_bar**7 / (c_bar**7 + 25.0**7)))
    a1p = (1.0 + g) * x.a
    a2p = (1.0 + g) * y.a
    c1p = math.hypot(a1p, x.b)
    c2p = math.hypot(a2p, y.b)
    h1p = math.degrees(math.atan2(x.b, a1p)) % 360.0 if (a1p or x.b) else 0.0
    h2p = math.degrees(math.atan2(y.b, a2p)) % 360.0 if (a2p or y.b) else 0.0

    dlp = y.L - x.L
    dcp = c2p - c1p
    if c1p * c2p == 0.0:
        dhp = 0.0
    elif abs(h2p - h1p) <= 180.0:
        dhp = h2p - h1p
    elif h2p - h1p > 180.0:
        dhp = h2p - h1p - 360.0
    else:
        dhp = h2p - h1p + 360.0
    dHp = 2.0 * math.sqrt(c1p * c2p) * math.sin(math.radians(dhp) / 2.0)

    l_bar = (x.L + y.L) / 2.0
    cp_bar = (c1p + c2p) / 2.0
    if c1p * c2p == 0.0:
        hp_bar = h1p + h2p
    elif abs(h1p - h2p) <= 180.0:
        hp_bar = (h1p + h2p) / 2.0
    elif h1p + h2p < 360.0:
        hp_bar = (h1p + h2p + 360.0) / 2.0
    else:
        hp_bar = (h1p + h2p - 360.0) / 2.0

    t = (
        1.0
        - 0.17 * math.cos(math.radians(hp_bar - 30.0))
        + 0.24 * math.cos(math.radians(2.0 * hp_bar))
        + 0.32 * math.cos(math.radians(3.0 * hp_bar + 6.0))
        - 0.20 * math.cos(math.radians(4.0 * hp_bar - 63.0))
    )
    sl = 1.0 + 0.015 * (l_bar - 50.0) ** 2 / math.sqrt(20.0 + (l_bar - 50.0) ** 2)
    sc = 1.0 + 0.045 * cp_bar
    sh = 1.0 + 0.015 * cp_bar * t
    d_theta = 30.0 * math.exp(-(((hp_bar - 275.0) / 25.0) ** 2))
    rc = 2.0 * math.sqrt(cp_bar**7 / (cp_bar**7 + 25.0**7))
    rt = -math.sin(math.radians(2.0 * d_theta)) * rc

    tl = dlp / (kl * sl)
    tc = dcp / (kc * sc)
    th = dHp / (kh * sh)
    return math.sqrt(tl * tl + tc * tc + th * th + rt * tc * th)


_HEX6 = re.compile(r"#([0-9a-fA-F]{6})\b")
_HEX3 = re.compile(r"#([0-9a-fA-F]{3})\b")
_RGB_FN = re.compile(r"rgba?\(\s*(\d{1,3})\s*,\s*(\d{1,3})\s*,\s*(\d{1,3})\s*(?:,[^)]*)?\)")


def parse_css_color(text: str) -> RGB | None:
    """Parse #rgb / #rrggbb / rgb(...) / rgba(...) notation; None otherwise."""
    text = text.strip()
    m = _HEX6.fullmatch(text)
    if m:
        v = m.group(1)
        return (int(v[0:2], 16), int(v[2:4], 16), int(v[4:6], 16))
    m = _HEX3.fullmatch(text)
    if m:
        v = m.group(1)
        return (int(v[0] * 2, 16), int(v[1] * 2, 16), int(v[2] * 2, 16))
    m = _RGB_FN.fullmatch(text)
    if m:
        r, g, b = (int(c) for c in m.groups())
        if max(r, g, b) > 255:
            return None
        return (r, g, b)
    return None


def rgb_to_hex(rgb: RGB) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def load_lab_pair_fixture(path) -> list[tuple[LabColor, LabColor, float]]:
    """Read a color-difference fixture: CSV rows of
    L1,a1,b1,L2,a2,b2,expected_dE00 ('#' lines are comments)."""
    cases = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            values = [float(v) for v in line.split(",")]
            if len(values) != 7:
                raise ValueError(f"expected 7 comma-separated values, got {line!r}")
            cases.append((LabColor(*values[:3]), LabColor(*values[3:6]), values[6]))
    return cases
