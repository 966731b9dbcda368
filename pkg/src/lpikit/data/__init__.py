"""Bundled reference data."""

from importlib import resources


def load_druglike_smiles() -> list[tuple[str, str]]:
    """Bundled 100-molecule drug-like corpus as (name, smiles) pairs."""
    text = resources.files(__package__).joinpath("druglike_100.smi").read_text(encoding="utf-8")
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, smiles = line.split("\t")
        out.append((name, smiles))
    return out
