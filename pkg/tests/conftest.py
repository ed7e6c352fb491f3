import numpy as np
import pytest

from edgevote.bundle import Bundle
from edgevote.dataset import (
    FeatureMask,
    apply_scaler,
    drop_missing,
    fit_scaler,
    load_csv,
    split,
)
from edgevote.ensemble import VotingMode, parse_combo, train_sharded
from helpers import PIMA_CSV, fast_hp


@pytest.fixture(scope="session")
def pima():
    return load_csv(PIMA_CSV)


@pytest.fixture(scope="session")
def kept(pima):
    return drop_missing(pima)


@pytest.fixture(scope="session")
def prepared(kept):
    """Seed-0 split of the cleaned dataset, standardized on train rows."""
    sd = split(kept, seed=0)
    scaler = fit_scaler(kept, sd.train_idx)
    X, y = kept.feature_matrix(), kept.labels()

    def part(idx):
        return apply_scaler(scaler, X[list(idx)]), y[list(idx)]

    Xtr, ytr = part(sd.train_idx)
    Xva, yva = part(sd.val_idx)
    Xte, yte = part(sd.test_idx)
    return {
        "split": sd,
        "scaler": scaler,
        "Xtr": Xtr, "ytr": ytr,
        "Xva": Xva, "yva": yva,
        "Xte": Xte, "yte": yte,
    }


@pytest.fixture(scope="session")
def small_bundle(kept, prepared):
    """A quick-to-train deployable model for node and CLI tests."""
    hp = fast_hp(seed=3)
    ens = train_sharded(
        parse_combo("svm-dt-lr"),
        prepared["Xtr"], prepared["ytr"], hp, 3,
        prepared["Xva"], prepared["yva"],
        mode=VotingMode.HARD,
    )
    mask = FeatureMask(selected=tuple(range(8)))
    return Bundle(
        ensemble=ens,
        scaler=prepared["scaler"],
        mask=mask,
        seed=3,
        reports={},
        hyperparams=hp.to_dict(),
    )


@pytest.fixture(scope="session")
def raw_rows(kept, prepared):
    """Unscaled feature rows from the seed-0 test partition."""
    X = kept.feature_matrix()
    return np.ascontiguousarray(X[list(prepared["split"].test_idx)])
