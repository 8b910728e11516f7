"""Bundled problem and Gronwall instance files."""

from pathlib import Path

CORPUS_DIR = Path(__file__).resolve().parent

PROBLEMS = ("cosh", "cosh_w0_1_1", "fredholm_linear", "pure_jump", "rotation_2d")
GRONWALL = ("gronwall_mixed_k2_1", "gronwall_mixed_k2_half", "gronwall_tight")


def corpus_path(name: str) -> Path:
    """Path of a bundled file, given with or without the ``.toml`` suffix."""
    stem = name[:-5] if name.endswith(".toml") else name
    path = CORPUS_DIR / f"{stem}.toml"
    if not path.is_file():
        raise FileNotFoundError(f"no corpus file named {name!r}")
    return path
