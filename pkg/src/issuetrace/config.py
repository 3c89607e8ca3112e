"""Pipeline configuration.

Every knob of the pipeline lives here, loadable from an INI file with an
``[issuetrace]`` section of plain ``key = value`` lines.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

SECTION = "issuetrace"


@dataclass
class Config:
    # inputs
    reviews_path: str = ""
    lexicon_path: str = ""          # empty -> bundled default lexicon
    filter_path: str = ""           # empty -> bundled default filter list
    changelog_path: str = ""
    embeddings_path: str = ""       # empty + train_embeddings -> corpus-trained
    train_embeddings: bool = True

    # model sizes and priors
    omega: int = 3
    topics: int = 13
    sentiments: int = 3
    alpha: float = 0.1
    beta: float = 0.01
    gamma: float = 1.0
    lambda_match: float = 0.9
    lambda_miss: float = 0.05
    iterations: int = 500
    seed: int = 42

    # phrase mining and anomaly detection
    pmi_threshold: float = 5.0
    delta: float = 1.25
    column_stats: bool = False

    # labeling
    mu: float = 1.0
    m: float = 0.5
    top_words: int = 50
    n_phrases: int = 3
    n_sentences: int = 3
    sentence_min_tokens: int = 3
    sentence_max_tokens: int = 30
    sentence_pool_cap: int = 2000

    # embedding training
    embed_dim: int = 100
    embed_window: int = 5
    embed_negatives: int = 5
    embed_epochs: int = 5
    embed_min_count: int = 2
    embed_learning_rate: float = 0.025

    # evaluation and output
    match_threshold: float = 0.6
    out_dir: str = "issuetrace_out"
    report_format: str = "structured-data"   # or "static-page", or "both"


def load_config(path: str | Path) -> Config:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    if SECTION not in parser:
        raise ValueError(f"config file {path} is missing the [{SECTION}] section")
    section = parser[SECTION]

    kwargs = {}
    valid = {f.name: f.type for f in fields(Config)}
    defaults = Config()
    for key in section:
        if key not in valid:
            raise ValueError(f"unknown config key {key!r}")
        current = getattr(defaults, key)
        if isinstance(current, bool):
            kwargs[key] = section.getboolean(key)
        elif isinstance(current, int):
            kwargs[key] = section.getint(key)
        elif isinstance(current, float):
            kwargs[key] = section.getfloat(key)
        else:
            kwargs[key] = section.get(key)
    return Config(**kwargs)


def save_config(config: Config, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    parser[SECTION] = {f.name: str(getattr(config, f.name)) for f in fields(Config)}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
