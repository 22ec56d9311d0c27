"""Checks against the released datasets, skipped unless FSI_DATA_DIR is set.

Expected layout under FSI_DATA_DIR: one directory per dataset
(banking77/, clinc150/, hwu64/) each holding the released train.csv and
test.csv (or .jsonl). These tests pin the published corpus statistics:
row counts and intent counts per dataset, and the k-shot split sizes.
"""

import os
from pathlib import Path

import pytest

from fewshot_intent import dataset as ds

DATA_DIR = os.environ.get("FSI_DATA_DIR")

pytestmark = pytest.mark.skipif(
    not DATA_DIR, reason="set FSI_DATA_DIR to the released datasets to run"
)

EXPECTED = {
    "banking77": {"labels": 77, "rows": 13_083},
    "clinc150": {"labels": 150, "rows": 23_700},
    "hwu64": {"labels": 64, "rows": 25_716},
}


def load_full(name, tmp_path):
    root = Path(DATA_DIR) / name
    fmt = "csv" if (root / "train.csv").exists() else "jsonl"
    pack = ds.ingest_pack(
        root / f"train.{fmt}", root / f"test.{fmt}", tmp_path / name,
        format=fmt, name=name,
    )
    return pack


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_published_corpus_statistics(name, tmp_path):
    if not (Path(DATA_DIR) / name).is_dir():
        pytest.skip(f"{name} not present under FSI_DATA_DIR")
    pack = load_full(name, tmp_path)
    labels = ds.build_label_index(pack)
    assert len(pack.rows) == EXPECTED[name]["rows"]
    assert labels.num_classes == EXPECTED[name]["labels"]


def test_banking77_k_shot_sizes(tmp_path):
    if not (Path(DATA_DIR) / "banking77").is_dir():
        pytest.skip("banking77 not present under FSI_DATA_DIR")
    pack = load_full("banking77", tmp_path)
    labels = ds.build_label_index(pack)
    assert len(ds.few_shot_sample(pack, labels, k=10, seed=0).row_indices) == 770
    assert len(ds.few_shot_sample(pack, labels, k=30, seed=0).row_indices) == 2_310
