"""Shared fixtures: bundled sample data, loaded once per session."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from triggercraft.lexicon import (
    PhoneInventory,
    PronouncingDictionary,
    WakeWordSpec,
    load_dictionary,
)
from triggercraft.weights import load_probe_scores, load_weight_table

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def inventory() -> PhoneInventory:
    return PhoneInventory.default()


@pytest.fixture(scope="session")
def mini_dictionary() -> PronouncingDictionary:
    with open(FIXTURES / "mini_dict.txt") as fh:
        return load_dictionary(fh)


@pytest.fixture(scope="session")
def wake_words() -> list[WakeWordSpec]:
    items = json.loads((FIXTURES / "wake_words.json").read_text())
    return [
        WakeWordSpec(
            id=item["id"],
            text=item["text"],
            phones=tuple(item["phones"]),
            explicit_blocklist=tuple(item.get("blocklist", ())),
        )
        for item in items
    ]


@pytest.fixture(scope="session")
def wake_by_id(wake_words) -> dict[str, WakeWordSpec]:
    return {w.id: w for w in wake_words}


@pytest.fixture(scope="session")
def probe_scores():
    with open(FIXTURES / "probe_scores.tsv") as fh:
        return load_probe_scores(fh)


@pytest.fixture(scope="session")
def weight_table():
    with open(FIXTURES / "weights.tsv") as fh:
        return load_weight_table(fh)
