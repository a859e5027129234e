#!/usr/bin/env python3
"""Rasterize printable ASCII from DejaVu Sans Mono into a 1-bit glyph table
used by the PNG plot backend. Writes include/replay_bench/detail/font_data.hpp."""
import sys
from PIL import Image, ImageDraw, ImageFont

FONT = "/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf"
SIZE = 11
W, H = 7, 13
THRESHOLD = 96

font = ImageFont.truetype(FONT, SIZE)
ascent, _ = font.getmetrics()
rows = []
for code in range(32, 127):
    img = Image.new("L", (W, H), 0)
    ImageDraw.Draw(img).text((0, H - 2 - ascent), chr(code), fill=255, font=font)
    bits = []
    for y in range(H):
        v = 0
        for x in range(W):
            if img.getpixel((x, y)) >= THRESHOLD:
                v |= 1 << (W - 1 - x)
        bits.append(v)
    rows.append((code, bits))

out = sys.argv[1] if len(sys.argv) > 1 else "include/replay_bench/detail/font_data.hpp"
with open(out, "w") as f:
    f.write("#pragma once\n\n// Generated by tools/gen_font.py from DejaVu Sans Mono; do not edit.\n\n")
    f.write("#include <cstdint>\n\nnamespace replay_bench::plot::detail {\n\n")
    f.write(f"inline constexpr int kGlyphWidth = {W};\ninline constexpr int kGlyphHeight = {H};\n\n")
    f.write(f"/// Rows top to bottom, most significant of the low {W} bits is the leftmost pixel.\n")
    f.write(f"inline constexpr std::uint8_t kGlyphs[95][{H}] = {{\n")
    for code, bits in rows:
        name = chr(code).replace("\\", "backslash")
        f.write("    {" + ", ".join(f"0x{b:02x}" for b in bits) + f"}},  // {name}\n")
    f.write("};\n\n}  // namespace replay_bench::plot::detail\n")
