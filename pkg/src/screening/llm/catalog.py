"""Design alternatives as the Cartesian product of attribute levels."""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from typing import Dict, List

from ..exceptions import ConfigurationError

_CPU = ["Intel Core i5", "Intel Core i7", "Intel Core i9", "AMD-R5", "AMD-R7", "AMD-R9"]
_GPU = [
    "NVIDIA GeForce 20M", "NVIDIA GeForce 30M", "NVIDIA GeForce 40M",
    "AMD Radeon 5000M", "AMD Radeon 6000M",
]
_WIDE = {
    "cpu": _CPU,
    "ram": ["8 GB", "16 GB", "32 GB", "64 GB"],
    "storage": ["256 GB", "512 GB", "1024 GB"],
    "gpu": _GPU,
}

#: Attribute levels of the laptop design instances, keyed by catalog size.
LAPTOP_LEVELS: Dict[int, Dict[str, List[str]]] = {
    36: {"cpu": _CPU, "ram": ["16 GB", "32 GB", "64 GB"], "storage": ["256 GB", "512 GB"]},
    360: dict(_WIDE),
    1080: {**_WIDE, "resolution": ["1080p Full HD", "1440p Quad HD", "4K Ultra HD"]},
    3240: {
        **_WIDE,
        "resolution": ["1080p Full HD", "1440p Quad HD", "4K Ultra HD"],
        "screen_size": ["13.3 inch", "14 inch", "15.6 inch"],
    },
}


@dataclass
class AlternativeCatalog:
    """Ordered attribute levels; alternative ``i`` is the ``i``-th product tuple.

    The last attribute varies fastest, so the order is that of
    :func:`itertools.product`.
    """

    levels: Dict[str, List[str]]

    def __post_init__(self):
        if not self.levels:
            raise ConfigurationError("a catalog needs at least one attribute")
        for name, values in self.levels.items():
            if not values:
                raise ConfigurationError(f"attribute {name!r} has no levels")
        self.levels = {k: list(v) for k, v in self.levels.items()}

    @classmethod
    def laptop(cls, k: int = 36) -> "AlternativeCatalog":
        if k not in LAPTOP_LEVELS:
            raise ConfigurationError(f"no laptop catalog with k={k}; choose from {sorted(LAPTOP_LEVELS)}")
        return cls(LAPTOP_LEVELS[k])

    @property
    def attribute_names(self):
        return list(self.levels)

    def __len__(self):
        n = 1
        for values in self.levels.values():
            n *= len(values)
        return n

    def __iter__(self):
        names = self.attribute_names
        for combo in itertools.product(*self.levels.values()):
            yield dict(zip(names, combo))

    def __getitem__(self, i: int) -> Dict[str, str]:
        n = len(self)
        if not -n <= i < n:
            raise IndexError(i)
        i %= n
        out = {}
        for name in reversed(self.attribute_names):
            values = self.levels[name]
            i, r = divmod(i, len(values))
            out[name] = values[r]
        return {name: out[name] for name in self.attribute_names}

    def to_dict(self):
        return {"levels": self.levels}


def load_catalog(spec) -> AlternativeCatalog:
    """Catalog from a laptop preset size (``"36"``, ``3240``) or a JSON file of levels."""
    if isinstance(spec, int) or (isinstance(spec, str) and spec.isdigit()):
        return AlternativeCatalog.laptop(int(spec))
    with open(os.fspath(spec), encoding="utf-8") as fh:
        data = json.load(fh)
    return AlternativeCatalog(data.get("levels", data))
