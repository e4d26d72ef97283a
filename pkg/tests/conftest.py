import math

import numpy as np
import pytest

from roomedit.catalog import default_catalog
from roomedit.scene import Scene, SceneObject


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


def make_object(
    oid="obj",
    category=0,
    caption="a wooden double bed",
    feats=(1, 2, 3, 4),
    position=(0.0, 0.5, 0.0),
    half_extents=(0.5, 0.5, 0.5),
    yaw=0.0,
):
    return SceneObject(
        id=oid,
        category=category,
        caption=caption,
        feature_indices=feats,
        position=position,
        half_extents=half_extents,
        yaw=yaw,
    )


TOY_BOUNDS = ((-2.5, 0.0, -2.5), (2.5, 3.0, 2.5))


def make_scene(objects, room_type="toy", bounds=TOY_BOUNDS):
    return Scene(room_type=room_type, room_bounds=bounds, objects=tuple(objects))


@pytest.fixture
def bed_lamp_scene(catalog):
    bed_proto = catalog.prototype_by_caption("a wooden double bed")
    lamp_proto = catalog.prototype_by_caption("a brass floor lamp")
    bed = SceneObject(
        id="bed_0",
        category=catalog.category_index("bed"),
        caption=bed_proto.caption,
        feature_indices=bed_proto.feature_indices,
        position=(0.0, bed_proto.half_extents[1], -1.0),
        half_extents=bed_proto.half_extents,
        yaw=0.0,
    )
    lamp = SceneObject(
        id="lamp_0",
        category=catalog.category_index("lamp"),
        caption=lamp_proto.caption,
        feature_indices=lamp_proto.feature_indices,
        position=(1.8, lamp_proto.half_extents[1], 1.2),
        half_extents=lamp_proto.half_extents,
        yaw=0.0,
    )
    return make_scene([bed, lamp])


def random_scene(catalog, rng, n_objects=(2, 5), distinct=True):
    from roomedit.datagen import sample_toy_scene

    while True:
        scene = sample_toy_scene(catalog, rng, n_objects=n_objects, distinct=distinct)
        if scene is not None:
            return scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
