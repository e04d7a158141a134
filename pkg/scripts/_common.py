"""Shared argument handling for the experiment scripts."""

from __future__ import annotations

import argparse

from coevo.datasets import available, load_dataset, surrogate
from coevo.graph import Graph


def parser(description: str, networks: list[str]) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--networks", nargs="+", default=networks)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--generations", type=int, default=30)
    p.add_argument("--surrogate", action="store_true",
                   help="use a synthetic graph of the same size when the edge list is missing")
    return p


def graph_for(name: str, allow_surrogate: bool) -> tuple[Graph, str]:
    if available(name):
        return load_dataset(name), name
    if not allow_surrogate:
        raise SystemExit(f"{name}: edge list not found; set COEVO_DATA_DIR or pass --surrogate")
    return surrogate(name), f"{name} (surrogate)"
