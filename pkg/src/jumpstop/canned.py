"""Small bundled models used by the tests, demos and CLI (``--model canned:<name>``)."""
from __future__ import annotations

import json
from importlib import resources

from .model import ControlledJumpModel, load_model


def canned_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("jumpstop.data").iterdir() if p.name.endswith(".json"))


def canned_document(name: str) -> dict:
    path = resources.files("jumpstop.data").joinpath(f"{name}.json")
    if not path.is_file():
        raise KeyError(f"no canned model {name!r}; available: {', '.join(canned_names())}")
    return json.loads(path.read_text())


def canned_model(name: str) -> ControlledJumpModel:
    return load_model(canned_document(name))
