"""Built-in experiment specs (desk-scale versions of the synthetic studies)."""

from __future__ import annotations

import json
from importlib import resources

from ..spec import ExperimentSpec

__all__ = ["default_spec_names", "default_spec", "default_spec_doc"]


def default_spec_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(__package__).iterdir() if p.name.endswith(".json"))


def default_spec_doc(name: str) -> dict:
    path = resources.files(__package__) / f"{name}.json"
    if not path.is_file():
        raise KeyError(f"no built-in spec {name!r}; available: {', '.join(default_spec_names())}")
    return json.loads(path.read_text())


def default_spec(name: str, **overrides) -> ExperimentSpec:
    """Load a built-in spec; top-level keys can be overridden (e.g. ``trials=3``)."""
    doc = default_spec_doc(name)
    doc.update(overrides)
    return ExperimentSpec.from_dict(doc)
