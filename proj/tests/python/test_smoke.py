# SPDX-FileCopyrightText: Copyright (c) 2026 vscreen contributors. All rights reserved.
# SPDX-License-Identifier: Apache-2.0
import json

import numpy as np
import pytest

import vscreen


def test_parse_and_write():
    mol = vscreen.parse_smiles("c1ccccc1O")
    assert mol.num_atoms == 7
    assert mol.ring_count == 1
    again = vscreen.parse_smiles(mol.to_smiles())
    assert vscreen.is_isomorphic(mol, again)


def test_errors_carry_code():
    with pytest.raises(vscreen.VscreenError) as info:
        vscreen.parse_smiles("C(C")
    assert info.value.code == "UnbalancedBracket"


def test_similarity_bounds():
    a = vscreen.parse_smiles("CCO")
    b = vscreen.parse_smiles("CCN")
    assert vscreen.tanimoto(a, a) == 1.0
    assert 0.0 <= vscreen.tanimoto(a, b) < 1.0
    assert vscreen.wl_similarity(a, b) == pytest.approx(vscreen.wl_similarity(b, a))
    assert vscreen.edit_similarity("CCO", "CCO") == 1.0


def test_tensors_shape():
    x, a = vscreen.to_tensors(vscreen.parse_smiles("CC=O"))
    assert x.shape == (3, 12)
    assert a.shape == (3, 3)
    assert np.allclose(a, a.T)


def test_wasserstein_one_dimensional():
    a = np.array([[0.0], [1.0]])
    b = np.array([[0.5], [1.5]])
    assert vscreen.wasserstein(a, b) == pytest.approx(0.5)
    assert vscreen.wasserstein(a, a) == pytest.approx(0.0)


def test_mmd_identity():
    s = ["CCO", "c1ccccc1", "CC(C)N"]
    assert vscreen.mmd(s, s) == pytest.approx(0.0, abs=1e-12)


def test_run_job_deterministic(tmp_path):
    smi = tmp_path / "a.smi"
    smi.write_text("CCO\tethanol\nc1ccccc1\tbenzene\nCC(=O)O\tacetic\n")
    inputs = {"a": str(smi)}
    first, log = vscreen.run_job("sim", inputs, {"metric": "wl"}, seed=5)
    second, _ = vscreen.run_job("sim", inputs, {"metric": "wl"}, seed=5)
    assert first == second
    text = first["similarity.csv"].decode()
    meta = json.loads(text.splitlines()[0][2:])
    assert meta["spec_hash"] == vscreen.spec_hash("sim", inputs, {"metric": "wl"}, seed=5)
    assert meta["seed"] == 5
    assert log


def test_schema_rejects_bad_params(tmp_path):
    with pytest.raises(vscreen.VscreenError) as info:
        vscreen.run_job("sim", {"a": "x.smi"}, {"radius": "two"})
    assert info.value.code == "SchemaError"
    assert "sim" in vscreen.job_schema()["tasks"]
