"""Object catalog: the retrieval pool for instantiating and replacing objects.

Each prototype pairs a category with a caption, canonical half extents, and a
tuple of discrete feature indices (codebook indices standing in for a learned
semantic embedding). Captions are unique and avoid the template grammar's
separator words so commands stay parseable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

DEFAULT_N_F = 4
DEFAULT_K_F = 64


@dataclass(frozen=True)
class Prototype:
    category: str
    caption: str
    half_extents: tuple[float, float, float]
    feature_indices: tuple[int, ...]


@dataclass(frozen=True)
class ObjectCatalog:
    n_f: int
    k_f: int
    categories: tuple[str, ...]
    prototypes: tuple[Prototype, ...]

    def __post_init__(self):
        counts = {c: 0 for c in self.categories}
        captions = set()
        for proto in self.prototypes:
            if proto.category not in counts:
                raise ValueError(f"prototype category {proto.category!r} not in categories")
            if proto.caption in captions:
                raise ValueError(f"duplicate prototype caption {proto.caption!r}")
            captions.add(proto.caption)
            if len(proto.feature_indices) != self.n_f:
                raise ValueError(f"prototype {proto.caption!r} needs {self.n_f} feature indices")
            if not all(0 <= f < self.k_f for f in proto.feature_indices):
                raise ValueError(f"feature indices of {proto.caption!r} out of range")
            counts[proto.category] += 1
        for category, count in counts.items():
            if count < 2:
                raise ValueError(f"category {category!r} needs >= 2 prototypes for replace")
        features = [p.feature_indices for p in self.prototypes]
        if len(set(features)) != len(features):
            raise ValueError("prototype feature indices must be unique")

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def category_index(self, name: str) -> int:
        try:
            return self.categories.index(name)
        except ValueError:
            raise KeyError(f"unknown category {name!r}") from None

    def prototypes_of(self, category_index: int) -> list[Prototype]:
        name = self.categories[category_index]
        return [p for p in self.prototypes if p.category == name]

    def prototype_by_caption(self, caption: str) -> Prototype:
        for proto in self.prototypes:
            if proto.caption == caption:
                return proto
        raise KeyError(f"no prototype captioned {caption!r}")


_DEFAULT_SPEC = [
    # category, [(caption, (hx, hy, hz)), ...]
    ("bed", [
        ("a wooden double bed", (0.95, 0.45, 1.05)),
        ("a modern king bed with gray fabric", (1.05, 0.50, 1.10)),
        ("a single bed with white frame", (0.55, 0.40, 1.00)),
    ]),
    ("wardrobe", [
        ("a tall oak wardrobe", (0.60, 1.10, 0.32)),
        ("a white sliding wardrobe", (0.80, 1.05, 0.35)),
    ]),
    ("nightstand", [
        ("a walnut nightstand", (0.25, 0.28, 0.22)),
        ("a round metal nightstand", (0.22, 0.30, 0.22)),
    ]),
    ("desk", [
        ("a walnut writing desk", (0.65, 0.38, 0.35)),
        ("a compact study desk", (0.55, 0.37, 0.30)),
    ]),
    ("chair", [
        ("a red fabric armchair", (0.38, 0.42, 0.38)),
        ("a black office chair", (0.30, 0.45, 0.30)),
        ("a green velvet lounge chair", (0.40, 0.40, 0.40)),
    ]),
    ("lamp", [
        ("a brass floor lamp", (0.18, 0.80, 0.18)),
        ("a tripod reading lamp", (0.22, 0.75, 0.22)),
    ]),
    ("table", [
        ("a round coffee table", (0.45, 0.25, 0.45)),
        ("a glass side table", (0.35, 0.28, 0.35)),
    ]),
    ("sofa", [
        ("a gray three seat sofa", (1.10, 0.42, 0.45)),
        ("a compact blue loveseat", (0.80, 0.40, 0.42)),
    ]),
]


def default_catalog(n_f: int = DEFAULT_N_F, k_f: int = DEFAULT_K_F) -> ObjectCatalog:
    """Built-in toy catalog with deterministic, distinct feature indices."""
    rng = np.random.default_rng(20240817)
    prototypes = []
    seen: set[tuple[int, ...]] = set()
    for category, items in _DEFAULT_SPEC:
        for caption, half_extents in items:
            while True:
                feats = tuple(int(v) for v in rng.integers(0, k_f, size=n_f))
                if feats not in seen:
                    seen.add(feats)
                    break
            prototypes.append(Prototype(category, caption, half_extents, feats))
    return ObjectCatalog(
        n_f=n_f,
        k_f=k_f,
        categories=tuple(name for name, _ in _DEFAULT_SPEC),
        prototypes=tuple(prototypes),
    )


def catalog_to_doc(catalog: ObjectCatalog) -> dict:
    return {
        "n_f": catalog.n_f,
        "K_f": catalog.k_f,
        "categories": list(catalog.categories),
        "prototypes": [
            {
                "category": p.category,
                "caption": p.caption,
                "half_extents": list(p.half_extents),
                "feature_indices": list(p.feature_indices),
            }
            for p in catalog.prototypes
        ],
    }


def catalog_from_doc(doc: dict) -> ObjectCatalog:
    allowed = {"n_f", "K_f", "categories", "prototypes"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown catalog fields: {sorted(unknown)}")
    prototypes = []
    for entry in doc["prototypes"]:
        extra = set(entry) - {"category", "caption", "half_extents", "feature_indices"}
        if extra:
            raise ValueError(f"unknown prototype fields: {sorted(extra)}")
        prototypes.append(
            Prototype(
                category=entry["category"],
                caption=entry["caption"],
                half_extents=tuple(float(v) for v in entry["half_extents"]),
                feature_indices=tuple(int(v) for v in entry["feature_indices"]),
            )
        )
    return ObjectCatalog(
        n_f=int(doc["n_f"]),
        k_f=int(doc["K_f"]),
        categories=tuple(doc["categories"]),
        prototypes=tuple(prototypes),
    )


def save_catalog(catalog: ObjectCatalog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(catalog_to_doc(catalog), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_catalog(path) -> ObjectCatalog:
    with open(path, encoding="utf-8") as fh:
        return catalog_from_doc(json.load(fh))
