"""Run configuration: a flat ``key = value`` file plus command-line overrides.

Example::

    mechanism = geometric
    epsilon = 1.0
    lists = lists/glove.list, lists/w2v.list
    config_tag = L0
    master_seed = 7

Instead of ``lists``, ``embeddings`` (comma separated) and ``seeds`` build
one list per (embedding file, seed) pair at load time. Relative paths are
resolved against the config file's directory.
"""

from __future__ import annotations

import configparser
import logging
import os
from dataclasses import dataclass, field, fields

from .core import CONFIG_TAGS, DROP, LOWERCASE, PASSTHROUGH, PRESERVE, DiffractorConfig, ListBank
from .embeddings import load_embeddings
from .errors import ConfigError, ContractError
from .lists import build_list, load_list
from .mechanisms import DEFAULT_BETA, MechanismConfig, normalize_kind

log = logging.getLogger(__name__)

_SECTION = "run"
_PATH_KEYS = ("lists", "embeddings", "mvc_embeddings", "corpus", "out", "records")


def _split(value):
    return [v.strip() for v in value.split(",") if v.strip()]


def _bool(value):
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


@dataclass
class RunConfig:
    mechanism: str = "geometric"
    epsilon: float = 1.0
    beta: float = DEFAULT_BETA
    lists: list[str] = field(default_factory=list)
    embeddings: list[str] = field(default_factory=list)
    seeds: list[int] = field(default_factory=lambda: [0])
    limit: int | None = None
    lowercase: bool = True
    backend: str = "exact"
    config_tag: str = "custom"
    oov_policy: str = PASSTHROUGH
    case_policy: str = LOWERCASE
    master_seed: int = 0
    mvc_embeddings: str | None = None
    corpus: str | None = None
    out: str | None = None
    records: str | None = None

    def validate(self):
        bad = []
        try:
            self.mechanism = normalize_kind(self.mechanism)
        except ContractError:
            bad.append("mechanism")
        if not self.epsilon > 0:
            bad.append("epsilon")
        if self.mechanism == "tem" and not 0 < self.beta < 0.5:
            bad.append("beta")
        if not self.lists and not self.embeddings:
            bad.append("lists")
        if self.limit is not None and self.limit <= 0:
            bad.append("limit")
        if self.backend not in ("exact", "approx", "approximate"):
            bad.append("backend")
        if self.config_tag not in CONFIG_TAGS:
            bad.append("config_tag")
        if self.oov_policy not in (PASSTHROUGH, DROP):
            bad.append("oov_policy")
        if self.case_policy not in (LOWERCASE, PRESERVE):
            bad.append("case_policy")
        if bad:
            raise ConfigError("invalid configuration fields: " + ", ".join(bad), bad)
        return self

    def mechanism_config(self, epsilon=None) -> MechanismConfig:
        return MechanismConfig(self.mechanism, self.epsilon if epsilon is None else epsilon,
                               self.beta, self.master_seed)


_CONVERTERS = {
    "epsilon": float, "beta": float, "limit": int, "master_seed": int,
    "lowercase": _bool, "lists": _split, "embeddings": _split,
    "seeds": lambda v: [int(s) for s in _split(v)],
}


def _convert(key, value):
    if isinstance(value, str) and key in _CONVERTERS:
        return _CONVERTERS[key](value)
    return value


def load_run_config(path=None, overrides=None) -> RunConfig:
    """Read ``path`` (optional), apply non-None ``overrides`` and validate."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                           inline_comment_prefixes=("#",))
        with open(path, encoding="utf-8") as fh:
            parser.read_string(f"[{_SECTION}]\n" + fh.read(), source=str(path))
        base = os.path.dirname(os.path.abspath(path))
        for key, raw in parser.items(_SECTION):
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}", [key])
            values[key] = _resolve(key, raw, base)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    cfg = RunConfig()
    bad = []
    for key, raw in values.items():
        try:
            setattr(cfg, key, _convert(key, raw))
        except ValueError:
            bad.append(key)
    if bad:
        raise ConfigError("unparsable configuration fields: " + ", ".join(bad), bad)
    return cfg.validate()


def _resolve(key, raw, base):
    if key not in _PATH_KEYS:
        return raw
    parts = _split(raw) if key in ("lists", "embeddings") else [raw.strip()]
    joined = [p if p == "-" or os.path.isabs(p) else os.path.join(base, p) for p in parts]
    return ", ".join(joined) if key in ("lists", "embeddings") else joined[0]


def build_bank(run: RunConfig) -> ListBank:
    """Load list files, or build lists from embedding files, into a bank."""
    lists = [load_list(p) for p in run.lists]
    for path in run.embeddings:
        model = load_embeddings(path, limit=run.limit, lowercase=run.lowercase)
        for seed in run.seeds:
            log.info("building list from %s (seed %d, %d words)", path, seed, len(model))
            lists.append(build_list(model, seed, run.backend))
    return ListBank(lists, run.config_tag)


def diffractor_config(run: RunConfig, bank: ListBank, epsilon=None, mechanism=None) -> DiffractorConfig:
    mc = run.mechanism_config(epsilon)
    if mechanism is not None:
        mc = MechanismConfig(mechanism, mc.epsilon, mc.beta, mc.rng_seed)
    return DiffractorConfig(mc, bank, run.oov_policy, run.case_policy)
