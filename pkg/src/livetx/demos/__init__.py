"""Bundled demo programs and their change scripts."""

from importlib import resources


def demo_source(name: str) -> str:
    """Text of a bundled .st program, e.g. demo_source("ball")."""
    return (resources.files(__package__) / f"{name}.st").read_text("utf-8")


def script_source(name: str) -> str:
    """Text of a bundled change script, e.g. script_source("gravity")."""
    path = resources.files(__package__) / "scripts" / f"{name}.txns"
    return path.read_text("utf-8")
