#!/usr/bin/env python3
"""Regenerates the canonical scene corpus in data/scenes/."""

import json
import pathlib
import sys

W, H, T = 320, 240, 81

BACKGROUND = {"kind": "noise", "cell": 8, "dark": [60, 70, 60], "light": [150, 160, 140]}
TARGET_TEX = {"kind": "noise", "cell": 4, "dark": [20, 20, 60], "light": [235, 220, 120]}
PATCH_TEX = {"kind": "checker", "cell": 3, "dark": [200, 30, 30], "light": [250, 200, 40]}
FLAT = {"kind": "flat", "cell": 1, "dark": [95, 95, 100], "light": [95, 95, 100]}
STRIPES = {"kind": "checker", "cell": 12, "dark": [80, 80, 90], "light": [110, 105, 100]}
DYNAMIC = {"kind": "dynamic_noise", "cell": 3, "dark": [40, 40, 40], "light": [200, 200, 200]}


def static(x, y):
    return {"type": "static", "start": [x, y]}


def linear(x, y, vx, vy=0.0):
    return {"type": "linear", "start": [x, y], "velocity": [vx, vy]}


def sinusoid(x, y, ax, ay, period, vx=0.0, vy=0.0):
    return {"type": "sinusoidal", "start": [x, y], "velocity": [vx, vy],
            "amplitude": [ax, ay], "period": period}


def target(path, size=(48, 48), visible=(0, T - 1)):
    return {"size": list(size), "texture": TARGET_TEX, "path": path,
            "attribute_patch": {"box": [0.3, 0.3, 0.7, 0.7], "texture": PATCH_TEX,
                                "visible_interval": list(visible) if visible else None}}


def pillar(x0, x1, y0=40, y1=200, texture=FLAT, active=(0, T - 1), path=None):
    return {"size": [x1 - x0, y1 - y0], "texture": texture,
            "path": path or static(x0, y0), "active_interval": list(active)}


def scene(name, description, tgt, occ=None, seed=0, frames=T, background=BACKGROUND):
    return {"name": name, "description": description, "width": W, "height": H,
            "num_frames": frames, "seed": seed, "background": background,
            "target": tgt, "occluder": occ}


CHECKER_BG = {"kind": "checker", "cell": 16, "dark": [70, 80, 70], "light": [140, 150, 130]}

SCENES = [
    scene("static_clear", "static target, never occluded", target(static(136, 96)), seed=1),
    scene("linear_clear_h", "horizontal linear motion, no occluder",
          target(linear(30, 96, 2.0)), seed=2),
    scene("linear_clear_diag", "diagonal linear motion, no occluder",
          target(linear(40, 40, 1.5, 1.0)), seed=3),
    scene("linear_clear_v", "vertical linear motion, no occluder",
          target(linear(150, 20, 0.5, 1.8)), seed=4),
    scene("sinusoidal_clear", "sinusoidal sweep, no occluder",
          target(sinusoid(100, 96, 60, 20, 40, vx=0.5)), seed=5),
    scene("static_occ_mid", "occluder slides over a static target mid-clip",
          target(static(136, 96)),
          pillar(0, 80, 60, 170, path=linear(-100, 60, 5.0)), seed=6),
    scene("linear_occ_early", "target emerges from behind a pillar",
          target(linear(60, 96, 1.5)), pillar(70, 130), seed=7),
    scene("linear_occ_mid", "target passes behind a pillar mid-clip",
          target(linear(10, 96, 3.0)), pillar(130, 186), seed=8),
    scene("linear_occ_late", "target walks behind a pillar at the end",
          target(linear(40, 96, 2.0)), pillar(190, 250), seed=9),
    scene("sinusoidal_occ", "target oscillates through a pillar",
          target(sinusoid(136, 96, 100, 0, 80)), pillar(130, 190), seed=10),
    scene("border_exit", "target leaves through the right border",
          target(linear(150, 96, 2.0)), seed=11),
    scene("border_enter", "target enters through the left border",
          target(linear(-40, 96, 2.0)), seed=12),
    scene("never_visible_attribute", "attribute never faces the camera; mid occlusion",
          target(linear(10, 96, 3.0), visible=None), pillar(130, 186), seed=13),
    scene("attribute_window", "target fully visible with attribute exposed only on 30-50",
          target(linear(20, 96, 2.0), visible=(30, 50)), pillar(10, 80), seed=14),
    scene("partial_half", "left half of a static target covered on 20-60",
          target(static(136, 96)), pillar(100, 160, 80, 160, active=(20, 60)), seed=15),
    scene("checker_background_occ", "pillar occlusion over a checkerboard background",
          target(linear(10, 96, 3.0)), pillar(130, 186), seed=16, background=CHECKER_BG),
    scene("long_occlusion", "static target hidden on frames 10-60",
          target(static(136, 96)), pillar(120, 200, 70, 170, active=(10, 60)), seed=17),
    scene("fast_crossing", "fast target crossed by an opposing occluder",
          target(linear(20, 100, 3.5)), pillar(0, 70, 70, 180, path=linear(250, 70, -3.0)),
          seed=18),
    scene("small_target_occ", "32x32 target behind a pillar",
          target(linear(20, 110, 3.0), size=(32, 32)), pillar(140, 180), seed=19),
    scene("large_target_occ", "80x64 target partly covered mid-clip",
          target(linear(20, 80, 2.0), size=(80, 64)), pillar(150, 230, 60, 180, active=(25, 55)),
          seed=20),
    scene("sinusoidal_occ_late", "vertical oscillation, occluded late",
          target(sinusoid(136, 90, 0, 50, 40)), pillar(110, 210, 40, 200, active=(60, 75)),
          seed=21),
    scene("dynamic_occluder", "flickering textured occluder crosses a static target",
          target(static(136, 96)),
          pillar(0, 80, 60, 170, texture=DYNAMIC, path=linear(-100, 60, 5.0)), seed=22),
    scene("striped_occluder", "striped pillar hides the target mid-clip",
          target(linear(10, 96, 3.0)), pillar(130, 186, texture=STRIPES), seed=23),
    scene("short_clip", "21-frame clip with a mid occlusion",
          target(static(136, 96), visible=(0, 20)), pillar(120, 200, 70, 170, active=(8, 12)), seed=24,
          frames=21),
]


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else
                       pathlib.Path(__file__).resolve().parent.parent / "data" / "scenes")
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob("*.json"):
        old.unlink()
    for i, s in enumerate(SCENES):
        path = out / f"{i:02d}_{s['name']}.json"
        path.write_text(json.dumps(s, indent=2) + "\n")
    print(f"wrote {len(SCENES)} scenes to {out}")


if __name__ == "__main__":
    main()
