"""CSV, SVG and JSON writers for frames, profiles and reports."""

from __future__ import annotations

import csv
import json
import math
import os
from xml.sax.saxutils import escape

import numpy as np

from .contour import extract_contour


def write_json(obj, path):
    """Deterministic JSON: sorted keys, fixed indent, numpy scalars unwrapped."""
    text = dumps(obj)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n"


def _plain(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (tuple, set)):
        return list(x)
    if hasattr(x, "to_dict"):
        return x.to_dict()
    if hasattr(x, "as_dict"):
        return x.as_dict()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def contour_pieces(contour):
    for kind, pieces in (("loop", contour.loops), ("arc", contour.arcs),
                         ("boundary", contour.boundary_curves)):
        for p in pieces:
            yield kind, p


def write_frames_csv(frames, path):
    """Contour polylines of each frame: time, piece id, kind, vertex index, r, z."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "piece", "kind", "index", "r", "z"])
        for fr in frames:
            for k, (kind, p) in enumerate(contour_pieces(extract_contour(fr.field))):
                for i, (r, z) in enumerate(p.points):
                    w.writerow([f"{fr.time:.10g}", k, kind, i, f"{r:.10g}", f"{z:.10g}"])
    return path


def write_series_csv(columns, path):
    """Columns (name -> sequence) of equal length as a CSV table."""
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in row])
    return path


def _svg(polylines, box, size=480, title=""):
    r0, r1, z0, z1 = box
    scale = size / max(r1 - r0, z1 - z0)
    W, H = (r1 - r0) * scale, (z1 - z0) * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.1f}" height="{H:.1f}" '
           f'viewBox="0 0 {W:.1f} {H:.1f}">']
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect width="{W:.1f}" height="{H:.1f}" fill="white" stroke="#999"/>')
    # rotation axis
    ax = (0 - r0) * scale
    out.append(f'<line x1="{ax:.1f}" y1="0" x2="{ax:.1f}" y2="{H:.1f}" stroke="#bbb" '
               'stroke-dasharray="4 3"/>')
    for pts, closed, color in polylines:
        xy = " ".join(f"{(r - r0) * scale:.2f},{(z1 - z) * scale:.2f}" for r, z in pts)
        tag = "polygon" if closed else "polyline"
        out.append(f'<{tag} points="{xy}" fill="none" stroke="{color}" stroke-width="1.2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


_PALETTE = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400")


def frame_svg(frame, title=None):
    g = frame.field.grid
    c = extract_contour(frame.field)
    lines = [(p.points, kind == "loop", _PALETTE[k % len(_PALETTE)])
             for k, (kind, p) in enumerate(contour_pieces(c))]
    return _svg(lines, (0.0, g.r_max, g.z_min, g.z_max),
                title=title or f"t = {frame.time:.4f}")


def write_frame_svgs(frames, directory, stem="frame"):
    os.makedirs(directory, exist_ok=True)
    paths = []
    for k, fr in enumerate(frames):
        p = os.path.join(directory, f"{stem}_{k:04d}.svg")
        with open(p, "w") as fh:
            fh.write(frame_svg(fr))
        paths.append(p)
    return paths


def profile_svg(profiles, title=""):
    if not isinstance(profiles, (list, tuple)):
        profiles = [profiles]
    boxes = np.array([p.bounding_box() for p in profiles])
    pad = 0.05 * max(boxes[:, 1].max(), boxes[:, 3].max() - boxes[:, 2].min())
    box = (0.0, boxes[:, 1].max() + pad, boxes[:, 2].min() - pad, boxes[:, 3].max() + pad)
    lines = [(p.vertices(), p.is_loop, _PALETTE[k % len(_PALETTE)]) for k, p in enumerate(profiles)]
    return _svg(lines, box, title=title)


def write_profile_svg(profiles, path, title=""):
    with open(path, "w") as fh:
        fh.write(profile_svg(profiles, title))
    return path


def write_profile_timings(rows, path):
    """Profiling table: one row per timed stage (name, seconds, calls)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "seconds", "calls"])
        for name, secs, calls in rows:
            w.writerow([name, f"{secs:.6f}", calls])
    return path


def finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)
