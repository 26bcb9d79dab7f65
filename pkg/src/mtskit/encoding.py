"""Canonical state values and their JSON encoding.

States are plain hashable Python values: ints, strings, tuples, frozensets,
plus the two structured kinds defined here (`Config` for per-agent maps and
`GSState` for a shared state with program counters). Every state has exactly
one JSON encoding, and `state_key` of that encoding is the total order used
for canonical successor ordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, Iterator, Mapping

from .errors import StructuralError


class _Marker:
    """A named singleton value distinct from every payload."""

    __slots__ = ("name",)

    def __init__(self, name: str) -> None:
        self.name = name

    def __repr__(self) -> str:
        return self.name

    def __copy__(self) -> "_Marker":
        return self

    def __deepcopy__(self, memo: dict) -> "_Marker":
        return self


#: The empty payload carried by filler blocks.
BOT = _Marker("⊥")
#: Payload written by junk faults; never part of any correct alphabet.
JUNK = _Marker("junk")


class Config(Mapping):
    """Immutable map from agent id to local state, canonically ordered."""

    __slots__ = ("_dict", "_items", "_hash")

    def __init__(self, items: Mapping | Iterable = ()) -> None:
        d = dict(items)
        self._dict = d
        self._items = tuple(sorted(d.items(), key=lambda kv: state_key(kv[0])))
        self._hash = hash(self._items)

    @classmethod
    def _from_sorted(cls, items: tuple) -> "Config":
        c = cls.__new__(cls)
        c._dict = dict(items)
        c._items = items
        c._hash = hash(items)
        return c

    def __getitem__(self, agent: Any) -> Any:
        return self._dict[agent]

    def __iter__(self) -> Iterator:
        return (a for a, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Config):
            return self._hash == other._hash and self._items == other._items
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{a!r}: {v!r}" for a, v in self._items)
        return "{" + inner + "}"

    @property
    def agents(self) -> tuple:
        return tuple(a for a, _ in self._items)

    def replace(self, agent: Any, local: Any) -> "Config":
        if agent not in self._dict:
            raise StructuralError(f"unknown agent {agent!r}")
        items = tuple((a, local if a == agent else v) for a, v in self._items)
        return Config._from_sorted(items)

    def project(self, agents: Iterable) -> "Config":
        out = {}
        for a in agents:
            if a not in self._dict:
                raise StructuralError(f"cannot project on unknown agent {a!r}")
            out[a] = self._dict[a]
        return Config(out)

    def merge(self, other: "Config") -> "Config":
        overlap = set(self._dict) & set(other._dict)
        if overlap:
            raise StructuralError(f"overlapping agents {sorted(map(repr, overlap))}")
        d = dict(self._dict)
        d.update(other._dict)
        return Config(d)


@dataclass(frozen=True)
class GSState:
    """Shared global state plus one program counter per agent."""

    shared: Any
    counters: Config


def encode(value: Any) -> Any:
    """Map a state value to a JSON-compatible structure."""
    if value is BOT:
        return "⊥"
    if value is JUNK:
        return {"junk": None}
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, tuple):
        return [encode(v) for v in value]
    if isinstance(value, list):
        return [encode(v) for v in value]
    if isinstance(value, frozenset):
        return {"set": sorted((encode(v) for v in value), key=_dumps)}
    if isinstance(value, Config):
        return {"cfg": [[encode(a), encode(v)] for a, v in value.items()]}
    if isinstance(value, GSState):
        return {"gs": [encode(value.shared), encode(value.counters)]}
    raise TypeError(f"value {value!r} of type {type(value).__name__} is not encodable")


def decode(obj: Any) -> Any:
    """Inverse of `encode` (lists come back as tuples)."""
    if obj == "⊥":
        return BOT
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, list):
        return tuple(decode(v) for v in obj)
    if isinstance(obj, dict) and len(obj) == 1:
        (tag, body), = obj.items()
        if tag == "junk":
            return JUNK
        if tag == "set":
            return frozenset(decode(v) for v in body)
        if tag == "cfg":
            return Config((decode(a), decode(v)) for a, v in body)
        if tag == "gs":
            return GSState(decode(body[0]), decode(body[1]))
    raise ValueError(f"cannot decode {obj!r}")


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


@lru_cache(maxsize=1 << 17, typed=True)
def state_key(value: Any) -> str:
    """Canonical string for a state; equal states give equal keys."""
    return _dumps(encode(value))


def sort_states(values: Iterable) -> list:
    """Deduplicate and sort states canonically."""
    return sorted(set(values), key=state_key)


def to_json(value: Any) -> str:
    return _dumps(value)
