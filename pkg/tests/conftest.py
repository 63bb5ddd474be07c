import numpy as np
import pytest

from handgeom import pipeline, synth


@pytest.fixture(scope="session")
def small_dataset():
    """Four persons, four captures each; shared by the classifier and CLI tests."""
    return synth.make_dataset(persons=4, acquisitions=4, master_seed=11)


@pytest.fixture(scope="session")
def small_table(small_dataset, tmp_path_factory):
    d = tmp_path_factory.mktemp("small")
    synth.write_dataset(small_dataset, d)
    table, rejects = pipeline.extract_directory(d)
    assert rejects == []
    return table


@pytest.fixture(scope="session")
def hand():
    """One rendered hand with its extraction and ground truth."""
    p = synth.sample_person([5, 0, 1])
    img, gt = synth.render(p, [5, 1, 1, 1, 0])
    return img, gt, pipeline.extract(img)


def rect_mask(h, w, top=0, left=0, shape=None):
    shape = shape or (h + top + 2, w + left + 2)
    m = np.zeros(shape, dtype=bool)
    m[top:top + h, left:left + w] = True
    return m
