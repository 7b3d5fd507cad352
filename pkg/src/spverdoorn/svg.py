"""Deterministic SVG figures: Moran scatterplot and LISA cluster map."""

from __future__ import annotations

import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import ValidationError
from .esda import Quadrant

__all__ = ["moran_scatter_svg", "render_moran_scatter_svg", "lisa_map_svg", "render_lisa_outputs",
           "read_polygons", "QUADRANT_COLORS"]

QUADRANT_COLORS = {
    Quadrant.HIGH_HIGH.value: "#d7191c",
    Quadrant.LOW_LOW.value: "#2c7bb6",
    Quadrant.LOW_HIGH.value: "#abd9e9",
    Quadrant.HIGH_LOW.value: "#fdae61",
}
NEUTRAL = "#eeeeee"
LEGEND = (
    ("High-High", QUADRANT_COLORS["HIGH_HIGH"]),
    ("Low-Low", QUADRANT_COLORS["LOW_LOW"]),
    ("Low-High", QUADRANT_COLORS["LOW_HIGH"]),
    ("High-Low", QUADRANT_COLORS["HIGH_LOW"]),
    ("Not significant", NEUTRAL),
)


def _c(v: float) -> str:
    return f"{v:.2f}"


def moran_scatter_svg(scatter, variable: str = "x", size: int = 480) -> str:
    """Scatter of standardized values against their lags with the LS slope."""
    if len(scatter.z) < 2:
        raise ValidationError("Moran scatterplot needs at least two points")
    margin = 50
    extent = max(max(abs(v) for v in scatter.z), max(abs(v) for v in scatter.lag), 1e-12)
    extent = math.ceil(extent * 1.1 * 2) / 2  # half-unit grid
    span = size - 2 * margin

    def px(v):
        return margin + (v + extent) / (2 * extent) * span

    def py(v):
        return size - margin - (v + extent) / (2 * extent) * span

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{span}" height="{span}" fill="none" stroke="#999999"/>',
        f'<line x1="{_c(px(-extent))}" y1="{_c(py(0))}" x2="{_c(px(extent))}" y2="{_c(py(0))}" '
        'stroke="#555555" stroke-dasharray="4 3"/>',
        f'<line x1="{_c(px(0))}" y1="{_c(py(-extent))}" x2="{_c(px(0))}" y2="{_c(py(extent))}" '
        'stroke="#555555" stroke-dasharray="4 3"/>',
    ]
    lo = -extent
    hi = extent
    # clip the fitted line to the square
    if abs(scatter.slope) > 1:
        lo, hi = -extent / abs(scatter.slope), extent / abs(scatter.slope)
    out.append(
        f'<line x1="{_c(px(lo))}" y1="{_c(py(scatter.slope * lo))}" x2="{_c(px(hi))}" '
        f'y2="{_c(py(scatter.slope * hi))}" stroke="#b2182b" stroke-width="1.5"/>'
    )
    for rid, z, lag in zip(scatter.ids, scatter.z, scatter.lag):
        out.append(
            f'<circle cx="{_c(px(z))}" cy="{_c(py(lag))}" r="4" fill="#4d4d4d" fill-opacity="0.8">'
            f"<title>{escape(str(rid))}</title></circle>"
        )
    name = escape(variable)
    out += [
        f'<text x="{size / 2:.1f}" y="{size - 12}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{name} (standardized)</text>',
        f'<text x="14" y="{size / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 14 {size / 2:.1f})">W {name}</text>',
        f'<text x="{size / 2:.1f}" y="30" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">Moran scatterplot, I = {scatter.slope:.3f}</text>',
        f'<text x="{margin + 6}" y="{margin + 16}" font-family="sans-serif" font-size="11" '
        f'fill="#555555">range ±{extent:g}</text>',
        "</svg>",
    ]
    return "\n".join(out) + "\n"


def render_moran_scatter_svg(scatter, path, variable: str = "x") -> Path:
    path = Path(path)
    text = moran_scatter_svg(scatter, variable)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: cannot write figure ({exc.strerror})") from None
    return path


def read_polygons(path) -> dict:
    """GeoJSON FeatureCollection -> ``{region_id: [ring, ...]}`` (lon, lat rings)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: cannot read GeoJSON ({exc})") from None
    if doc.get("type") != "FeatureCollection":
        raise ValidationError(f"{path}: expected a GeoJSON FeatureCollection")
    shapes = {}
    for k, feat in enumerate(doc.get("features", [])):
        rid = (feat.get("properties") or {}).get("region_id")
        if rid is None:
            raise ValidationError(f"{path}: feature {k} has no region_id property")
        geom = feat.get("geometry") or {}
        if geom.get("type") == "Polygon":
            polys = [geom["coordinates"]]
        elif geom.get("type") == "MultiPolygon":
            polys = geom["coordinates"]
        else:
            raise ValidationError(f"{path}: feature {rid!r} is not a Polygon/MultiPolygon")
        shapes.setdefault(str(rid), []).extend(ring for poly in polys for ring in poly)
    return shapes


def lisa_map_svg(lisa, shapes: dict, size: int = 600) -> str:
    ids = set(lisa.ids)
    missing = sorted(ids - set(shapes))
    extra = sorted(set(shapes) - ids)
    if missing or extra:
        raise ValidationError(
            f"polygon/region id mismatch: no polygon for {missing}, unknown polygon ids {extra}"
        )
    pts = [pt for rings in shapes.values() for ring in rings for pt in ring]
    lon0, lon1 = min(p[0] for p in pts), max(p[0] for p in pts)
    lat0, lat1 = min(p[1] for p in pts), max(p[1] for p in pts)
    kx = math.cos(math.radians((lat0 + lat1) / 2.0))
    w_deg = max((lon1 - lon0) * kx, 1e-12)
    h_deg = max(lat1 - lat0, 1e-12)
    margin, legend_w = 20, 150
    scale = (size - 2 * margin) / max(w_deg, h_deg)

    def xy(p):
        return margin + (p[0] - lon0) * kx * scale, margin + (lat1 - p[1]) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + legend_w}" height="{size}" '
        f'viewBox="0 0 {size + legend_w} {size}">',
        f'<rect x="0" y="0" width="{size + legend_w}" height="{size}" fill="white"/>',
    ]
    for rid, q, sig in zip(lisa.ids, lisa.quadrant, lisa.significant):
        fill = QUADRANT_COLORS[q.value] if sig else NEUTRAL
        d = " ".join(
            "M " + " L ".join(f"{_c(x)} {_c(y)}" for x, y in map(xy, ring)) + " Z"
            for ring in shapes[rid]
        )
        out.append(f'<path d="{d}" fill="{fill}" stroke="#666666" stroke-width="0.6" '
                   f'fill-rule="evenodd"><title>{escape(str(rid))}</title></path>')
    for k, (label, color) in enumerate(LEGEND):
        y = margin + 22 * k
        out.append(f'<rect x="{size + 10}" y="{y}" width="14" height="14" fill="{color}" stroke="#666666"/>')
        out.append(f'<text x="{size + 30}" y="{y + 12}" font-family="sans-serif" font-size="12">{label}</text>')
    out.append(f'<text x="{size + 10}" y="{margin + 22 * len(LEGEND) + 12}" font-family="sans-serif" '
               f'font-size="11">alpha = {lisa.alpha:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_lisa_outputs(lisa, csv_path, polygons=None, svg_path=None) -> list[Path]:
    """Write the LISA CSV, plus a cluster map when polygons are supplied."""
    from .report import lisa_csv

    written = []
    csv_path = Path(csv_path)
    svg_text = None
    if polygons is not None:
        shapes = polygons if isinstance(polygons, dict) else read_polygons(polygons)
        svg_text = lisa_map_svg(lisa, shapes)
        if svg_path is None:
            svg_path = csv_path.with_suffix(".svg")
    try:
        csv_path.write_text(lisa_csv(lisa), encoding="utf-8")
        written.append(csv_path)
        if svg_text is not None:
            Path(svg_path).write_text(svg_text, encoding="utf-8")
            written.append(Path(svg_path))
    except OSError as exc:
        raise ValidationError(f"{exc.filename}: cannot write output ({exc.strerror})") from None
    return written
