import numpy as np
import pytest
from sklearn.base import clone

from genusflow.estimators import (Betti1Transformer, EntropyTransformer, FamilyClassifier,
                                  LevelSetFlow, TorusShrinkerFinder)
from genusflow.exceptions import ConfigurationError
from genusflow.grid import FamilySpec, Torus, torus_profile
from genusflow.homology import fixture_zoo
from sklearn.exceptions import NotFittedError


def test_level_set_flow():
    est = LevelSetFlow(h=1 / 32, t_max=0.3)
    assert clone(est).get_params()["h"] == 1 / 32
    with pytest.raises(NotFittedError):
        est.predict()
    est.fit(Torus(1.0, 0.3))
    assert est.predict().tolist() == ["A"]
    rows = est.transform()
    assert rows.shape[1] == 4 and rows[0, 1] == 1


def test_level_set_flow_validates_parameters():
    with pytest.raises(ConfigurationError):
        LevelSetFlow(h=1.0).fit(Torus(1.0, 0.3))


def test_family_classifier():
    fam = FamilySpec(Torus(1.0, 0.6), -0.3, 0.25)
    clf = FamilyClassifier(fam, h=1 / 32, t_max=0.4, tol=1 / 8).fit()
    lo, hi = clf.bracket_
    assert hi - lo <= 1 / 8
    assert clf.predict([0.0, 1.0]).tolist() == ["A", "B"]
    assert clf.score([0.0, 1.0], ["A", "B"]) == 1.0
    with pytest.raises(ConfigurationError):
        clf.predict([2.0])
    with pytest.raises(ValueError):
        FamilyClassifier().fit()


def test_torus_shrinker_finder():
    est = TorusShrinkerFinder().fit()
    assert 1.82 <= est.gaussian_area_ <= 1.88
    assert est.transform().shape[1] == 2


def test_entropy_transformer():
    profiles = [torus_profile(Torus(2.0, 0.5), ds=2e-3), torus_profile(Torus(4.0, 1.0), ds=4e-3)]
    vals = EntropyTransformer(grid=10, max_iter=100).fit().transform(profiles)
    assert vals.shape == (2,)
    assert vals[0] == pytest.approx(vals[1], abs=1e-3)
    with pytest.raises(ConfigurationError):
        EntropyTransformer().fit().transform([1, 2])


def test_betti1_transformer():
    zoo = fixture_zoo(12)
    masks = [m for m, _ in zoo.values()]
    out = Betti1Transformer().fit_transform(masks)
    assert out.tolist() == [b for _, b in zoo.values()]
    with pytest.raises(ConfigurationError):
        Betti1Transformer().fit().transform([np.zeros((2, 2))])
