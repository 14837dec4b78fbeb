import pytest

from textguard.classifier import TrainConfig, train_classifier
from textguard.corpus import Dataset, TextSample
from textguard.lexicon import load_default_morph_rules, load_default_thesaurus
from textguard.synthetic import make_desk_corpus
from textguard.transform import TransformContext

MARKER_POS = "marker"


@pytest.fixture(scope="session")
def thesaurus():
    return load_default_thesaurus()


@pytest.fixture(scope="session")
def morph_rules():
    return load_default_morph_rules()


@pytest.fixture(scope="session")
def transform_context(thesaurus, morph_rules):
    return TransformContext(thesaurus=thesaurus, morph_rules=morph_rules)


def make_marker_corpus() -> Dataset:
    """Linearly separable toy corpus: class 1 iff the marker word occurs."""
    fillers = [
        "the story moves along", "characters talk for a while",
        "scenes come and go", "the camera wanders around",
        "dialogue fills the room", "the screen shows a field",
        "people walk through town", "a quiet evening passes",
        "someone reads a letter", "the band plays a song",
    ]
    samples = []
    for i, filler in enumerate(fillers):
        samples.append(TextSample(id=f"neg-{i}", text=filler, label=0))
        samples.append(TextSample(id=f"pos-{i}", text=f"{filler} {MARKER_POS}", label=1))
    return Dataset(samples=samples, num_classes=2, split="train")


@pytest.fixture(scope="session")
def marker_corpus():
    return make_marker_corpus()


@pytest.fixture(scope="session")
def marker_model(marker_corpus):
    return train_classifier(marker_corpus, TrainConfig(seed=0, learning_rate=0.5, epochs=12))


@pytest.fixture(scope="session")
def small_train():
    return make_desk_corpus(400, seed=7, split="train")


@pytest.fixture(scope="session")
def small_test():
    return make_desk_corpus(200, seed=8, split="test")


@pytest.fixture(scope="session")
def small_victim(small_train):
    return train_classifier(small_train, TrainConfig(seed=0))
