#!/usr/bin/env python3
"""Regenerates the synthetic glyph fixtures under data/glyphs/.

The files follow the KanjiVG layout (one glyph per file, ordered <path>
elements, 109x109 viewBox, M/L/C path data) so the ingestion pipeline treats
them exactly like the real dataset. Deterministic: rerunning this script
reproduces the same 50 files byte for byte.
"""

import os
import random

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "glyphs")
COUNT = 50
SEED = 20240811

rng = random.Random(SEED)


def f(v):
    return f"{v:.2f}".rstrip("0").rstrip(".")


def hline(y, x0=None, x1=None, bow=0.0):
    x0 = 18 + rng.uniform(-4, 4) if x0 is None else x0
    x1 = 91 + rng.uniform(-4, 4) if x1 is None else x1
    y = y + rng.uniform(-2, 2)
    if abs(bow) < 0.5:
        return f"M {f(x0)},{f(y)} L {f(x1)},{f(y)}"
    c1x, c2x = x0 + (x1 - x0) / 3, x0 + 2 * (x1 - x0) / 3
    return (f"M {f(x0)},{f(y)} C {f(c1x)},{f(y + bow)} {f(c2x)},{f(y + bow)} "
            f"{f(x1)},{f(y)}")


def vline(x, y0=None, y1=None, bow=0.0):
    y0 = 16 + rng.uniform(-4, 4) if y0 is None else y0
    y1 = 92 + rng.uniform(-4, 4) if y1 is None else y1
    x = x + rng.uniform(-2, 2)
    if abs(bow) < 0.5:
        return f"M {f(x)},{f(y0)} L {f(x)},{f(y1)}"
    c1y, c2y = y0 + (y1 - y0) / 3, y0 + 2 * (y1 - y0) / 3
    return (f"M {f(x)},{f(y0)} C {f(x + bow)},{f(c1y)} {f(x + bow)},{f(c2y)} "
            f"{f(x)},{f(y1)}")


def sweep(x0, y0, x1, y1, off=8.0):
    # gentle cubic along the chord with a perpendicular bow
    dx, dy = x1 - x0, y1 - y0
    ln = max((dx * dx + dy * dy) ** 0.5, 1.0)
    px, py = -dy / ln * off, dx / ln * off
    c1 = (x0 + dx / 3 + px, y0 + dy / 3 + py)
    c2 = (x0 + 2 * dx / 3 + px, y0 + 2 * dy / 3 + py)
    return (f"M {f(x0)},{f(y0)} C {f(c1[0])},{f(c1[1])} {f(c2[0])},{f(c2[1])} "
            f"{f(x1)},{f(y1)}")


def glyph_two():
    return [hline(38, bow=rng.uniform(-3, 3)), hline(72, bow=rng.uniform(-3, 3))]


def glyph_three():
    return [hline(30), hline(54, 26, 83), hline(80)]


def glyph_plus():
    return [hline(54), vline(54)]


def glyph_box():
    x0, x1 = 26 + rng.uniform(-3, 3), 84 + rng.uniform(-3, 3)
    y0, y1 = 24 + rng.uniform(-3, 3), 84 + rng.uniform(-3, 3)
    return [
        f"M {f(x0)},{f(y0)} L {f(x0)},{f(y1)}",
        f"M {f(x0)},{f(y0)} L {f(x1)},{f(y0)} L {f(x1)},{f(y1)}",
        f"M {f(x0)},{f(y1)} L {f(x1)},{f(y1)}",
    ]


def glyph_river():
    return [
        vline(30, 20, 88, bow=rng.uniform(-6, -3)),
        vline(54, 16, 92),
        vline(78, 20, 88, bow=rng.uniform(3, 6)),
    ]


def glyph_person():
    apex_x = 54 + rng.uniform(-3, 3)
    apex_y = 20 + rng.uniform(-2, 2)
    return [
        sweep(apex_x, apex_y, 26 + rng.uniform(-3, 3), 88, off=rng.uniform(4, 8)),
        sweep(apex_x + 2, apex_y + 12, 84 + rng.uniform(-3, 3), 88, off=rng.uniform(-8, -4)),
    ]


def glyph_work():
    return [hline(28), vline(54, 30, 78), hline(82)]


def glyph_soil():
    return [hline(44, 30, 80), vline(54, 22, 84), hline(84)]


def glyph_king():
    return [hline(28), hline(54, 28, 82), vline(54, 30, 80), hline(82)]


def glyph_seven():
    return [
        hline(48, 20, 86, bow=rng.uniform(2, 5)),
        sweep(50 + rng.uniform(-3, 3), 20, 60 + rng.uniform(-2, 2), 86, off=rng.uniform(-9, -5)),
    ]


def glyph_ladder():
    x = 36 + rng.uniform(-3, 3)
    return [vline(x, 20, 88), vline(x + 34, 20, 88), hline(40, x, x + 34), hline(68, x, x + 34)]


def glyph_curves():
    return [
        sweep(24, 30 + rng.uniform(-4, 4), 86, 34 + rng.uniform(-4, 4), off=rng.uniform(6, 11)),
        sweep(28, 62 + rng.uniform(-4, 4), 84, 70 + rng.uniform(-4, 4), off=rng.uniform(-11, -6)),
        vline(54, 30, 86, bow=rng.uniform(-5, 5)),
    ]


PATTERNS = [
    glyph_two, glyph_three, glyph_plus, glyph_box, glyph_river, glyph_person,
    glyph_work, glyph_soil, glyph_king, glyph_seven, glyph_ladder, glyph_curves,
]


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    for i in range(COUNT):
        strokes = PATTERNS[i % len(PATTERNS)]()
        gid = f"g{i:03d}"
        paths = "\n".join(
            f'    <path id="kvg:{gid}-s{k + 1}" d="{d}"/>' for k, d in enumerate(strokes)
        )
        svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="109" height="109" viewBox="0 0 109 109">
  <g id="kvg:StrokePaths_{gid}" style="fill:none;stroke:#000000;stroke-width:3">
{paths}
  </g>
</svg>
"""
        with open(os.path.join(OUT_DIR, f"glyph_{i:03d}.svg"), "w") as fh:
            fh.write(svg)
    print(f"wrote {COUNT} glyphs to {os.path.normpath(OUT_DIR)}")


if __name__ == "__main__":
    main()
