import json

import numpy as np
import pytest

from gapcert.errors import DimensionMismatchError, ModelError
from gapcert.lattice import Region
from gapcert.models import (
    InteractionTerm,
    LocalHamiltonian,
    builtin_model,
    load_model,
    model_from_dict,
    model_to_dict,
    singlet_projector,
    spin2_projector,
    to_projector,
)
from gapcert.spectral import check_frustration_free

I = Region.interval


def test_builtin_projectors():
    assert np.allclose(singlet_projector() @ singlet_projector(), singlet_projector())
    assert round(np.trace(singlet_projector()).real) == 1
    assert round(np.trace(spin2_projector()).real) == 5


@pytest.mark.parametrize("name,d", [("product", 2), ("heisenberg_fm", 2), ("aklt", 3)])
def test_builtin_shapes(name, d):
    H = builtin_model(name)
    assert H.local_dim == d
    terms = H.restrict(I(0, 5))
    assert len(terms) == (6 if name == "product" else 5)


def test_restrict_2d():
    H = builtin_model("heisenberg_fm", dim=2)
    assert len(H.restrict(Region.box([0, 0], [2, 2]))) == 12


def test_unknown_model_and_param():
    with pytest.raises(ModelError):
        builtin_model("ising")
    with pytest.raises(ModelError):
        builtin_model("aklt", {"J": 1})


def test_to_projector_from_nonprojector():
    m = np.diag([0.0, 2.0, 0.5])
    p, orig = to_projector(m)
    assert np.allclose(p, np.diag([0.0, 1.0, 1.0]))
    assert orig is not None


def test_term_validation():
    with pytest.raises(ModelError):
        LocalHamiltonian(1, 2, 1, fixed_terms=[InteractionTerm(((0,), (2,)), singlet_projector())])
    with pytest.raises(DimensionMismatchError):
        LocalHamiltonian(2, 2, 2, fixed_terms=[InteractionTerm(((0,), (1,)), singlet_projector())])


def test_model_roundtrip(tmp_path, frustrated_triangle):
    for H in (builtin_model("aklt"), frustrated_triangle):
        path = tmp_path / "m.json"
        path.write_text(json.dumps(model_to_dict(H)))
        H2 = load_model(path)
        assert H2.local_dim == H.local_dim
        assert len(H2.restrict(I(0, 2))) == len(H.restrict(I(0, 2)))


def test_model_file_version_checked():
    doc = model_to_dict(builtin_model("product"))
    doc["version"] = 99
    with pytest.raises(ModelError):
        model_from_dict(doc)


def test_frustration_free_checks(frustrated_triangle):
    assert not check_frustration_free(frustrated_triangle, I(0, 2))
    for name in ("product", "heisenberg_fm", "aklt"):
        assert check_frustration_free(builtin_model(name), I(0, 4))
