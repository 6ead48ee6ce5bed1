import pytest

from embed_export.encoder import make_tiny_encoder


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    return make_tiny_encoder(tmp_path_factory.mktemp("model"), seed=0, hidden=16)


@pytest.fixture
def manifest_path(tmp_path):
    path = tmp_path / "items.tsv"
    path.write_text(
        "item-a\tBlue Suede Notebook\n"
        "item-b\tPortable Star Atlas\n"
        "item-c\tBlue Suede Notebook\n",
        encoding="utf-8",
    )
    return str(path)
