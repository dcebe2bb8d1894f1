#!/usr/bin/env python3
# SPDX-FileCopyrightText: Copyright (c) 2026 vscreen contributors. All rights reserved.
# SPDX-License-Identifier: Apache-2.0
"""Regenerates data/corpus.smi: small acyclic/monocyclic molecules plus
substituted scaffolds. Deterministic; the bundled file is the output of this
script with the default seed."""

import argparse
import itertools
import re
import random

SMALL_CORES = [
    "C", "CC", "CCC", "CCCC", "CCCCC", "CCCCCC", "CC(C)C", "CC(C)(C)C", "CCC(C)C",
    "C=C", "C=CC", "C#C", "C#CC", "CC=CC", "C=CC=C",
    "C1CC1", "C1CCC1", "C1CCCC1", "C1CCCCC1", "C1CCOC1", "C1CCNC1", "C1CCNCC1",
    "C1COCCN1", "c1ccccc1", "c1ccncc1", "c1ccoc1", "c1ccsc1", "c1cc[nH]c1", "c1cncnc1",
    "c1cnoc1", "c1ncc[nH]1", "C1=CCCC1", "C1CC=CC1", "O1CC1", "N1CC1",
]

SMALL_TAILS = ["", "O", "N", "F", "Cl", "C#N", "C=O", "C(=O)O", "OC", "C(=O)N", "NC", "S", "Br"]

SCAFFOLDS = [
    "c1ccc(cc1){}",
    "c1cc({})ccc1{}",
    "c1ccc({})c(c1){}",
    "c1cc({})ccn1",
    "c1ccc({})s1",
    "c1ccc({})o1",
    "c1cc({})c[nH]1",
    "C1CCC(CC1){}",
    "C1CCN(CC1){}",
    "C1COCCN1{}",
    "c1ccc2cc({})ccc2c1",
    "c1ccc2[nH]c({})cc2c1",
    "c1ccc2ncc({})cc2c1",
    "C1CC(C1){}",
    "c1cnc(nc1){}",
]

SUBSTITUENTS = [
    "C", "CC", "O", "N", "F", "Cl", "Br", "I", "C(=O)O", "C#N", "OC", "N(C)C",
    "C(F)(F)F", "C=O", "C(=O)N", "S(=O)(=O)N", "[N+](=O)[O-]", "CCO", "C(C)C",
    "SC", "OCC", "C(=O)OC", "NC(=O)C", "CN", "P(=O)(O)O",
]

LINKERS = ["", "C", "CC", "C(=O)N", "O", "N", "C(=O)", "OC", "CNC"]


def small_molecules(rng):
    out = set()
    for core, tail in itertools.product(SMALL_CORES, SMALL_TAILS):
        if tail and core[-1].isdigit() and core[0] in "cC":
            # attach to the first atom via a branch
            head = re.match(r"[A-Za-z]\d*", core).group(0)
            smi = head + "(" + tail + ")" + core[len(head):]
        else:
            smi = core + tail
        out.add(smi)
    return sorted(out)


def heavy_count(smi):
    count = 0
    i = 0
    while i < len(smi):
        c = smi[i]
        if c == "[":
            j = smi.index("]", i)
            count += 1
            i = j + 1
            continue
        if c in "CNOSPFIcnosp" or c == "B":
            count += 1
            if smi[i:i + 2] in ("Cl", "Br"):
                i += 2
                continue
        i += 1
    return count


def scaffold_molecules(rng):
    out = set()
    for scaffold in SCAFFOLDS:
        slots = scaffold.count("{}")
        for _ in range(24):
            subs = [rng.choice(SUBSTITUENTS) for _ in range(slots)]
            out.add(scaffold.format(*subs))
    for _ in range(260):
        a = rng.choice(SCAFFOLDS)
        b = rng.choice(SCAFFOLDS)
        link = rng.choice(LINKERS)
        subs_a = [rng.choice(SUBSTITUENTS) for _ in range(a.count("{}") - 1)]
        subs_b = [rng.choice(SUBSTITUENTS) for _ in range(b.count("{}"))]
        right = b.format(*subs_b)
        # renumber ring labels of the right-hand fragment to avoid clashes
        right = right.replace("1", "3").replace("2", "4")
        out.add(a.format(*(subs_a + [link + right])))
    return sorted(out)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="data/corpus.smi")
    args = parser.parse_args()
    rng = random.Random(args.seed)
    small = [s for s in small_molecules(rng) if heavy_count(s) <= 9]
    large = [s for s in scaffold_molecules(rng) if heavy_count(s) <= 38]
    with open(args.out, "w") as fh:
        fh.write("# vscreen bundled corpus: SMILES<TAB>name\n")
        for i, smi in enumerate(small + large):
            fh.write(f"{smi}\tc{i:04d}\n")
    print(f"{len(small)} small + {len(large)} scaffold molecules")


if __name__ == "__main__":
    main()
