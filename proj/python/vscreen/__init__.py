# SPDX-FileCopyrightText: Copyright (c) 2026 vscreen contributors. All rights reserved.
# SPDX-License-Identifier: Apache-2.0
"""Molecular similarity, screening and graph diffusion toolkit."""

import json as _json

from ._vscreen import (
    Molecule,
    VscreenError,
    __version__,
    edit_similarity,
    fingerprint,
    graph_statistics,
    has_substructure,
    is_isomorphic,
    load_molecules,
    mmd,
    parse_smiles,
    tanimoto,
    to_tensors,
    wasserstein,
    wl_similarity,
    write_smiles,
)
from . import _vscreen


def job_schema():
    return _json.loads(_vscreen.job_schema())


def run_job(task, inputs=None, params=None, seed=0):
    """Run one task synchronously. Returns (artifacts, log)."""
    spec = {"task": task, "inputs": inputs or {}, "params": params or {}, "seed": seed}
    return _vscreen.run_job(_json.dumps(spec))


def spec_hash(task, inputs=None, params=None, seed=0):
    spec = {"task": task, "inputs": inputs or {}, "params": params or {}, "seed": seed}
    return _vscreen.spec_hash(_json.dumps(spec))


__all__ = [
    "Molecule",
    "VscreenError",
    "__version__",
    "edit_similarity",
    "fingerprint",
    "graph_statistics",
    "has_substructure",
    "is_isomorphic",
    "job_schema",
    "load_molecules",
    "mmd",
    "parse_smiles",
    "run_job",
    "spec_hash",
    "tanimoto",
    "to_tensors",
    "wasserstein",
    "wl_similarity",
    "write_smiles",
]
