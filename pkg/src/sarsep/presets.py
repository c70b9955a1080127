"""Bundled example scenes.

Each preset is a JSON scene description shipped with the package; the
randomly placed stationary targets were drawn once and frozen so every
installation simulates identical scenes.
"""

from __future__ import annotations

import json
from importlib import resources

from .io import scene_from_dict
from .scene import SceneSpec

__all__ = ["list_presets", "load_preset", "preset_scene"]


def _preset_dir():
    return resources.files(__package__) / "presets"


def list_presets() -> list[str]:
    """Names of the bundled scene presets."""
    return sorted(
        path.name[: -len(".json")]
        for path in _preset_dir().iterdir()
        if path.name.endswith(".json")
    )


def load_preset(name: str) -> dict:
    """Raw preset dictionary (description plus scene)."""
    path = _preset_dir() / f"{name}.json"
    try:
        text = path.read_text()
    except FileNotFoundError:
        known = ", ".join(list_presets())
        raise ValueError(f"unknown preset {name!r}; available: {known}") from None
    return json.loads(text)


def preset_scene(name: str) -> SceneSpec:
    """Scene specification for the named preset."""
    return scene_from_dict(load_preset(name)["scene"])
