"""Byte-deterministic SVG emission for the lattice figures.

Markers carry CSS classes: cross for complement points, bullet for the
image set, circle for its mirror.  All coordinates are integers so the
output is stable across platforms.
"""

from __future__ import annotations

from .lattice import TriangleSpec, enumerate_T, split_T1
from .beta import region_K1
from .combos import k2_region

SCALE = 30
PAD = 20

_STYLE = (
    "<style>"
    ".grid{stroke:#ccc;stroke-width:1}"
    ".axis{stroke:#000;stroke-width:2}"
    ".antidiag{stroke:#000;stroke-width:1}"
    ".cross{stroke:#333;stroke-width:2}"
    ".bullet{fill:#000}"
    ".circle{fill:none;stroke:#000;stroke-width:2}"
    ".k1{fill:#7698d4}.k2{fill:#e8d44d}.mk1{fill:#eab6c8}.arrow{stroke:#888}"
    "</style>"
)


def _xy(pt, d):
    return PAD + pt[0] * SCALE, PAD + (d - pt[1]) * SCALE


def _header(d: int) -> list[str]:
    side = 2 * PAD + d * SCALE
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{side}" '
           f'height="{side}" viewBox="0 0 {side} {side}">', _STYLE]
    for i in range(d + 1):
        x0, y0 = _xy((i, 0), d)
        x1, y1 = _xy((i, d), d)
        out.append(f'<line class="grid" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}"/>')
        x0, y0 = _xy((0, i), d)
        x1, y1 = _xy((d, i), d)
        out.append(f'<line class="grid" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}"/>')
    xa, ya = _xy((0, d), d)
    xb, yb = _xy((d, 0), d)
    out.append(f'<line class="antidiag" x1="{xa}" y1="{ya}" x2="{xb}" y2="{yb}"/>')
    return out


def _marker(kind: str, pt, d) -> str:
    x, y = _xy(pt, d)
    r = SCALE // 5
    if kind == "cross":
        return (f'<line class="cross" x1="{x - r}" y1="{y - r}" x2="{x + r}" '
                f'y2="{y + r}"/><line class="cross" x1="{x - r}" y1="{y + r}" '
                f'x2="{x + r}" y2="{y - r}"/>')
    if kind == "bullet":
        return f'<circle class="bullet" cx="{x}" cy="{y}" r="{r}"/>'
    return f'<circle class="circle" cx="{x}" cy="{y}" r="{r}"/>'


def figure_t1_split(delta: TriangleSpec, p: int) -> str:
    """Crosses on the residue-stable part of T1, bullets on the rest."""
    d = delta.d
    t11, t12, _, _ = split_T1(delta, p)
    out = _header(d)
    out += [_marker("cross", q, d) for q in t11]
    out += [_marker("bullet", q, d) for q in t12]
    out.append("</svg>")
    return "\n".join(out) + "\n"


def figure_y0(delta: TriangleSpec, p: int) -> str:
    """Bullets on Y0, circles on m(Y0), crosses on the rest of the image."""
    d = delta.d
    _, _, y0, my0 = split_T1(delta, p)
    t1 = enumerate_T(delta, 1)
    image = sorted({((p * q[0]) % d, (p * q[1]) % d) for q in t1})
    rest = [q for q in image if q not in set(y0)]
    out = _header(d)
    out += [_marker("cross", q, d) for q in rest]
    out += [_marker("bullet", q, d) for q in y0]
    out += [_marker("circle", q, d) for q in my0]
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _cell(pt, d, cls) -> str:
    x, y = _xy(pt, d)
    h = SCALE // 2
    return (f'<rect class="{cls}" x="{x - h}" y="{y - h}" '
            f'width="{SCALE}" height="{SCALE}"/>')


def figure_regions(delta: TriangleSpec, p: int) -> str:
    """K1 / K2 / m(K1) shading inside the square."""
    d = delta.d
    out = _header(d)
    k1 = region_K1(delta, p)
    mk1 = [(d - q[0], d - q[1]) for q in k1]
    k2 = [q for q in k2_region(delta, p) if 0 <= q[0] <= d and 0 <= q[1] <= d]
    out += [_cell(q, d, "k1") for q in k1]
    out += [_cell(q, d, "mk1") for q in mk1]
    out += [_cell(q, d, "k2") for q in k2]
    out.append("</svg>")
    return "\n".join(out) + "\n"


def figure_beta(delta: TriangleSpec, p: int, mapping) -> str:
    """Arrows of an assembled bijection, bullets at sources."""
    d = delta.d
    out = _header(d)
    for src in sorted(mapping):
        q = mapping[src]
        x0, y0 = _xy(src, d)
        x1, y1 = _xy(q, d)
        out.append(f'<line class="arrow" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}"/>')
    for src in sorted(mapping):
        out.append(_marker("bullet", src, d))
        out.append(_marker("circle", mapping[src], d))
    out.append("</svg>")
    return "\n".join(out) + "\n"
