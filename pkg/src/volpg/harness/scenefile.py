"""Human-readable scene text format.

Typed blocks with one key-value pair per line::

    camera {
        origin 0 0.4 -4.2
        look_at 0 0 0
        fov 32
        resolution 256 256
    }
    medium {
        type homogeneous        # or: grid (needs `file volume.vol`)
        sigma_s 1.8 1.8 1.8
        sigma_a 0.2 0.2 0.2     # alternatively: sigma_t
        g 0.5
        bounds -1 -1 -1 1 1 1
    }
    surface {
        type quad               # sphere | box | quad
        origin -0.6 1.6 -0.6
        edge_u 1.2 0 0
        edge_v 0 0 1.2
        material emitter 0      # or: lambertian R G B | black
    }
    emitter {
        type area
        radiance 10 10 10
    }

`#` starts a comment. Grid volume paths resolve relative to the scene file.
"""

from __future__ import annotations

import os

import numpy as np

from volpg.scenecore.types import (
    Camera,
    Emitter,
    Medium,
    Scene,
    SceneError,
    Surface,
)
from volpg.scenecore.volgrid import read_volume_grid, write_volume_grid


class SceneParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def parse_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return parse_scene_text(text, base_dir=os.path.dirname(os.path.abspath(path)))


def parse_scene_text(text: str, base_dir: str = ".") -> Scene:
    blocks = _split_blocks(text)
    camera = None
    media: list[Medium] = []
    surfaces: list[Surface] = []
    emitters: list[Emitter] = []
    n_media = 0
    for kind, line_no, entries in blocks:
        if kind == "camera":
            if camera is not None:
                raise SceneParseError(line_no, "duplicate camera block")
            camera = _parse_camera(line_no, entries)
        elif kind == "medium":
            n_media += 1
            media.append(_parse_medium(line_no, entries, base_dir, n_media))
        elif kind == "surface":
            surfaces.append(_parse_surface(line_no, entries))
        elif kind == "emitter":
            emitters.append(_parse_emitter(line_no, entries))
        else:
            raise SceneParseError(line_no, f"unknown block type {kind!r}")
    if camera is None:
        raise SceneParseError(1, "scene has no camera block")
    try:
        return Scene(camera=camera, media=media, surfaces=surfaces, emitters=emitters)
    except SceneError as exc:
        raise SceneError(f"scene validation failed: {exc}") from exc


def _split_blocks(text: str):
    blocks = []
    current = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.endswith("{"):
            if current is not None:
                raise SceneParseError(line_no, "nested blocks are not allowed")
            name = line[:-1].strip()
            if not name:
                raise SceneParseError(line_no, "block is missing a type name")
            current = (name, line_no, [])
            continue
        if line == "}":
            if current is None:
                raise SceneParseError(line_no, "unmatched '}'")
            blocks.append(current)
            current = None
            continue
        if current is None:
            raise SceneParseError(line_no, f"content outside any block: {line!r}")
        parts = line.split()
        current[2].append((line_no, parts[0], parts[1:]))
    if current is not None:
        raise SceneParseError(current[1], f"block {current[0]!r} is never closed")
    return blocks


def _entries_to_dict(entries):
    out = {}
    for line_no, key, values in entries:
        if key in out:
            raise SceneParseError(line_no, f"duplicate key {key!r}")
        out[key] = (line_no, values)
    return out


def _floats(line_no, key, values, n):
    if len(values) != n:
        raise SceneParseError(line_no, f"{key} expects {n} values, got {len(values)}")
    try:
        return tuple(float(v) for v in values)
    except ValueError as exc:
        raise SceneParseError(line_no, f"{key}: {exc}") from exc


def _require(d, key, line_no):
    if key not in d:
        raise SceneParseError(line_no, f"missing required key {key!r}")
    return d[key]


def _parse_camera(block_line, entries) -> Camera:
    d = _entries_to_dict(entries)
    ln, v = _require(d, "origin", block_line)
    origin = _floats(ln, "origin", v, 3)
    ln, v = _require(d, "look_at", block_line)
    look_at = _floats(ln, "look_at", v, 3)
    ln, v = _require(d, "fov", block_line)
    fov = _floats(ln, "fov", v, 1)[0]
    ln, v = _require(d, "resolution", block_line)
    try:
        resolution = (int(v[0]), int(v[1]))
    except (ValueError, IndexError) as exc:
        raise SceneParseError(ln, f"resolution: {exc}") from exc
    up = (0.0, 1.0, 0.0)
    if "up" in d:
        ln, v = d["up"]
        up = _floats(ln, "up", v, 3)
    try:
        return Camera(origin, look_at, fov, resolution, up)
    except SceneError as exc:
        raise SceneParseError(block_line, str(exc)) from exc


def _parse_medium(block_line, entries, base_dir, index) -> Medium:
    d = _entries_to_dict(entries)
    name = f"medium{index}"
    if "name" in d:
        name = d["name"][1][0]
    ln, v = _require(d, "type", block_line)
    kind = v[0]
    ln, v = _require(d, "sigma_s", block_line)
    sigma_s = _floats(ln, "sigma_s", v, 3)
    if "sigma_t" in d:
        ln, v = d["sigma_t"]
        sigma_t = _floats(ln, "sigma_t", v, 3)
    elif "sigma_a" in d:
        ln, v = d["sigma_a"]
        sigma_a = _floats(ln, "sigma_a", v, 3)
        sigma_t = tuple(s + a for s, a in zip(sigma_s, sigma_a))
    else:
        raise SceneParseError(block_line, f"medium '{name}': needs sigma_t or sigma_a")
    g = 0.0
    if "g" in d:
        ln, v = d["g"]
        g = _floats(ln, "g", v, 1)[0]
    ln, v = _require(d, "bounds", block_line)
    bounds = _floats(ln, "bounds", v, 6)
    density = None
    density_scale = 1.0
    density_file = ""
    if kind == "grid":
        ln, v = _require(d, "file", block_line)
        density_file = v[0]
        density = read_volume_grid(os.path.join(base_dir, density_file))
        if "density_scale" in d:
            ln, v = d["density_scale"]
            density_scale = _floats(ln, "density_scale", v, 1)[0]
    try:
        return Medium(
            kind=kind, sigma_t=sigma_t, sigma_s=sigma_s, phase_g=g, bounds=bounds,
            name=name, density=density, density_scale=density_scale,
            density_file=density_file,
        )
    except SceneError as exc:
        raise SceneError(str(exc)) from exc


def _parse_surface(block_line, entries) -> Surface:
    d = _entries_to_dict(entries)
    ln, v = _require(d, "type", block_line)
    geometry = v[0]
    if geometry == "sphere":
        ln, v = _require(d, "center", block_line)
        center = _floats(ln, "center", v, 3)
        ln, v = _require(d, "radius", block_line)
        radius = _floats(ln, "radius", v, 1)
        params = center + radius
    elif geometry == "box":
        ln, v = _require(d, "min", block_line)
        lo = _floats(ln, "min", v, 3)
        ln, v = _require(d, "max", block_line)
        hi = _floats(ln, "max", v, 3)
        params = lo + hi
    elif geometry == "quad":
        ln, v = _require(d, "origin", block_line)
        o = _floats(ln, "origin", v, 3)
        ln, v = _require(d, "edge_u", block_line)
        u = _floats(ln, "edge_u", v, 3)
        ln, v = _require(d, "edge_v", block_line)
        vv = _floats(ln, "edge_v", v, 3)
        params = o + u + vv
    else:
        raise SceneParseError(ln, f"unknown surface type {geometry!r}")
    ln, v = _require(d, "material", block_line)
    if not v:
        raise SceneParseError(ln, "material needs a kind")
    mat = v[0]
    albedo = (0.0, 0.0, 0.0)
    emitter_index = -1
    if mat == "lambertian":
        albedo = _floats(ln, "material lambertian", v[1:], 3)
    elif mat == "emitter":
        try:
            emitter_index = int(v[1])
        except (ValueError, IndexError) as exc:
            raise SceneParseError(ln, f"material emitter needs an index: {exc}") from exc
    elif mat != "black":
        raise SceneParseError(ln, f"unknown material {mat!r}")
    try:
        return Surface(geometry, params, mat, albedo, emitter_index)
    except SceneError as exc:
        raise SceneParseError(block_line, str(exc)) from exc


def _parse_emitter(block_line, entries) -> Emitter:
    d = _entries_to_dict(entries)
    ln, v = _require(d, "type", block_line)
    kind = v[0]
    value_key = {"area": "radiance", "point": "intensity", "directional": "irradiance"}.get(kind)
    if value_key is None:
        raise SceneParseError(ln, f"unknown emitter type {kind!r}")
    ln, v = _require(d, value_key, block_line)
    value = _floats(ln, value_key, v, 3)
    position = (0.0, 0.0, 0.0)
    direction = (0.0, -1.0, 0.0)
    if kind == "point":
        ln, v = _require(d, "position", block_line)
        position = _floats(ln, "position", v, 3)
    if kind == "directional":
        ln, v = _require(d, "direction", block_line)
        direction = _floats(ln, "direction", v, 3)
    try:
        return Emitter(kind, value, position, direction)
    except SceneError as exc:
        raise SceneParseError(block_line, str(exc)) from exc


def serialize_scene(scene: Scene) -> str:
    """Canonical text form; floats use repr so round-trips are exact."""
    out = []
    cam = scene.camera
    out.append("camera {")
    out.append(f"    origin {_fmt(cam.origin)}")
    out.append(f"    look_at {_fmt(cam.look_at)}")
    out.append(f"    up {_fmt(cam.up)}")
    out.append(f"    fov {cam.fov!r}")
    out.append(f"    resolution {cam.resolution[0]} {cam.resolution[1]}")
    out.append("}")
    for m in scene.media:
        out.append("medium {")
        out.append(f"    name {m.name}")
        out.append(f"    type {m.kind}")
        out.append(f"    sigma_s {_fmt(m.sigma_s)}")
        out.append(f"    sigma_t {_fmt(m.sigma_t)}")
        out.append(f"    g {m.phase_g!r}")
        out.append(f"    bounds {_fmt(m.bounds)}")
        if m.kind == "grid":
            if not m.density_file:
                raise SceneError(
                    f"medium '{m.name}': grid media need a density_file to serialize"
                )
            out.append(f"    file {m.density_file}")
            out.append(f"    density_scale {m.density_scale!r}")
        out.append("}")
    for s in scene.surfaces:
        out.append("surface {")
        out.append(f"    type {s.geometry}")
        if s.geometry == "sphere":
            out.append(f"    center {_fmt(s.params[:3])}")
            out.append(f"    radius {s.params[3]!r}")
        elif s.geometry == "box":
            out.append(f"    min {_fmt(s.params[:3])}")
            out.append(f"    max {_fmt(s.params[3:])}")
        else:
            out.append(f"    origin {_fmt(s.params[:3])}")
            out.append(f"    edge_u {_fmt(s.params[3:6])}")
            out.append(f"    edge_v {_fmt(s.params[6:])}")
        if s.material == "lambertian":
            out.append(f"    material lambertian {_fmt(s.albedo)}")
        elif s.material == "emitter":
            out.append(f"    material emitter {s.emitter_index}")
        else:
            out.append("    material black")
        out.append("}")
    for e in scene.emitters:
        out.append("emitter {")
        out.append(f"    type {e.kind}")
        if e.kind == "area":
            out.append(f"    radiance {_fmt(e.value)}")
        elif e.kind == "point":
            out.append(f"    intensity {_fmt(e.value)}")
            out.append(f"    position {_fmt(e.position)}")
        else:
            out.append(f"    irradiance {_fmt(e.value)}")
            out.append(f"    direction {_fmt(e.direction)}")
        out.append("}")
    return "\n".join(out) + "\n"


def save_scene(scene: Scene, path) -> None:
    text = serialize_scene(scene)
    base = os.path.dirname(os.path.abspath(path))
    for m in scene.media:
        if m.kind == "grid" and m.density_file:
            vol_path = os.path.join(base, m.density_file)
            if not os.path.exists(vol_path):
                write_volume_grid(vol_path, m.density)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)
