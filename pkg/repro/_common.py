"""Small helpers shared by the narrative scripts."""

from pathlib import Path

from mcegate import SimConfig

HERE = Path(__file__).resolve().parent
OUT = HERE / "out"


def load(name: str, **overrides) -> SimConfig:
    cfg = SimConfig.from_file(HERE / "configs" / name)
    return cfg.with_overrides(overrides) if overrides else cfg


def save(name: str, text: str) -> Path:
    OUT.mkdir(exist_ok=True)
    path = OUT / name
    path.write_text(text)
    return path
