# SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the fixture files under corpus/.

The SMILES reader in this script is a deliberately separate, minimal
implementation of the same notation subset the C++ parser accepts. The
golden records (atom/bond counts, degree lists, scaffold SMILES) are
produced here and asserted bit-exactly by the C++ tests, so the two
implementations cross-check each other rather than one echoing the other.

Outputs:
  corpus/smiles_golden.jsonl     50 records {smiles, n_atoms, n_bonds, degrees, scaffold_smiles}
  corpus/scaffold_split_100.csv  100 molecules, engineered scaffold group sizes, binary label
  corpus/tox_toy_16.csv          16-molecule linearly separable binary toy set
  corpus/pretrain_8.csv          8 unlabeled hydrocarbons for masked-recovery drills
  corpus/zinc_toy.csv            12 molecules with synthetic logP/SAS/QED columns
"""

import json
import math
import random
from pathlib import Path

ORGANIC_UPPER = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
ORGANIC_LOWER = ("b", "c", "n", "o", "p", "s")
BRACKET_LOWER = ("se", "as", "b", "c", "n", "o", "p", "s")


class Atom:
    __slots__ = ("el", "aromatic", "charge", "h", "bracket")

    def __init__(self, el, aromatic, charge=0, h=None, bracket=False):
        self.el = el            # canonical capitalisation ("N", "Cl")
        self.aromatic = aromatic
        self.charge = charge
        self.h = h              # explicit bracket H count, None when implicit
        self.bracket = bracket


class Mol:
    def __init__(self):
        self.atoms = []
        self.bonds = {}  # (lo, hi) -> order in {1, 2, 3, "ar"}

    def degree(self, i):
        return sum(1 for a, b in self.bonds if a == i or b == i)

    def degrees(self):
        deg = [0] * len(self.atoms)
        for a, b in self.bonds:
            deg[a] += 1
            deg[b] += 1
        return deg

    def neighbors(self, i):
        out = []
        for a, b in self.bonds:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return out


def _parse_bracket(s, i):
    """s[i] == '['. Returns (Atom, index past ')]')."""
    j = i + 1
    while j < len(s) and s[j].isdigit():  # isotope, ignored
        j += 1
    aromatic = False
    el = None
    for cand in BRACKET_LOWER:
        if s.startswith(cand, j):
            el, aromatic = cand.capitalize() if len(cand) == 2 else cand.upper(), True
            j += len(cand)
            break
    if el is None:
        if not s[j].isupper():
            raise ValueError(f"bad bracket element at {j}")
        el = s[j]
        j += 1
        if j < len(s) and s[j].islower() and s[j] != "]":
            el += s[j]
            j += 1
    while j < len(s) and s[j] == "@":  # chirality, ignored
        j += 1
    h = 0
    if j < len(s) and s[j] == "H":
        j += 1
        h = 1
        if s[j].isdigit():
            h = int(s[j])
            j += 1
    charge = 0
    if j < len(s) and s[j] in "+-":
        sign = 1 if s[j] == "+" else -1
        j += 1
        if s[j].isdigit():
            charge = sign * int(s[j])
            j += 1
            if s[j].isdigit():
                charge = charge * 10 + sign * int(s[j])
                j += 1
        else:
            charge = sign
            while s[j] == s[j - 1]:
                charge += sign
                j += 1
    if j < len(s) and s[j] == ":":  # atom class, ignored
        j += 1
        while s[j].isdigit():
            j += 1
    if j >= len(s) or s[j] != "]":
        raise ValueError(f"unterminated bracket at {i}")
    if el == "H":
        raise ValueError("explicit hydrogen atom")
    return Atom(el, aromatic, charge, h, bracket=True), j + 1


def parse_smiles(s):
    """Minimal reader for the supported notation subset. Returns a Mol with
    atoms in order of appearance; raises ValueError on anything off-grammar."""
    mol = Mol()
    prev = -1
    stack = []
    ring = {}  # closure number -> (atom index, bond symbol or None)
    pending = None
    sym_order = {"-": 1, "=": 2, "#": 3, ":": "ar"}

    def add_bond(a, b, sym):
        if a == b:
            raise ValueError("self bond")
        key = (min(a, b), max(a, b))
        if key in mol.bonds:
            raise ValueError("duplicate bond")
        if sym is None:
            both = mol.atoms[a].aromatic and mol.atoms[b].aromatic
            mol.bonds[key] = "ar" if both else 1
        else:
            if sym == ":" and not (mol.atoms[a].aromatic and mol.atoms[b].aromatic):
                raise ValueError("aromatic bond needs aromatic atoms")
            mol.bonds[key] = sym_order[sym]

    def attach(atom):
        nonlocal prev, pending
        mol.atoms.append(atom)
        idx = len(mol.atoms) - 1
        if prev >= 0:
            add_bond(prev, idx, pending)
        pending = None
        prev = idx

    i = 0
    while i < len(s):
        c = s[i]
        if c == "(":
            stack.append(prev)
            i += 1
        elif c == ")":
            prev = stack.pop()
            i += 1
        elif c in "-=#:":
            pending = c
            i += 1
        elif c in "/\\":
            if pending is None:
                pending = "-"
            i += 1
        elif c.isdigit() or c == "%":
            if c == "%":
                num = int(s[i + 1 : i + 3])
                i += 3
            else:
                num = int(c)
                i += 1
            if prev < 0:
                raise ValueError("ring closure before any atom")
            if num in ring:
                other, sym0 = ring.pop(num)
                if sym0 is not None and pending is not None and sym0 != pending:
                    raise ValueError("conflicting ring bond symbols")
                add_bond(other, prev, sym0 if sym0 is not None else pending)
            else:
                ring[num] = (prev, pending)
            pending = None
        elif c == "[":
            atom, i = _parse_bracket(s, i)
            attach(atom)
        elif c == ".":
            raise ValueError("disconnected components unsupported")
        else:
            matched = False
            for cand in ORGANIC_UPPER:
                if s.startswith(cand, i):
                    attach(Atom(cand, aromatic=False))
                    i += len(cand)
                    matched = True
                    break
            if not matched and c in ORGANIC_LOWER:
                attach(Atom(c.upper(), aromatic=True))
                i += 1
                matched = True
            if not matched:
                raise ValueError(f"unexpected character {c!r} at {i}")
    if stack:
        raise ValueError("unclosed branch")
    if ring:
        raise ValueError("unclosed ring bond")
    if not mol.atoms:
        raise ValueError("empty SMILES")
    return mol


def ring_bonds(mol):
    """A bond is in a ring iff removing it leaves its endpoints connected."""
    out = set()
    for key in mol.bonds:
        a, b = key
        seen = {a}
        frontier = [a]
        while frontier and b not in seen:
            u = frontier.pop()
            for x, y in mol.bonds:
                if (x, y) == key:
                    continue
                if x == u and y not in seen:
                    seen.add(y)
                    frontier.append(y)
                elif y == u and x not in seen:
                    seen.add(x)
                    frontier.append(x)
        if b in seen:
            out.add(key)
    return out


def ring_atoms(mol):
    atoms = set()
    for a, b in ring_bonds(mol):
        atoms.add(a)
        atoms.add(b)
    return atoms


def murcko_keep(mol):
    """Iteratively strip degree<=1 atoms outside rings; drop isolated leftovers."""
    in_ring = ring_atoms(mol)
    alive = [True] * len(mol.atoms)
    deg = mol.degrees()
    changed = True
    while changed:
        changed = False
        for i in range(len(mol.atoms)):
            if not alive[i] or deg[i] > 1 or i in in_ring:
                continue
            alive[i] = False
            changed = True
            for j in mol.neighbors(i):
                if alive[j]:
                    deg[j] -= 1
            deg[i] = 0
    return {i for i in range(len(mol.atoms)) if alive[i] and deg[i] > 0}


def _atom_token(atom):
    sym = atom.el.lower() if atom.aromatic else atom.el
    needs_bracket = (
        atom.bracket
        or atom.charge != 0
        or (atom.aromatic and sym not in ORGANIC_LOWER)
        or (not atom.aromatic and atom.el not in ORGANIC_UPPER)
    )
    if not needs_bracket:
        return sym
    tok = sym
    h = atom.h or 0
    if h == 1:
        tok += "H"
    elif h > 1:
        tok += f"H{h}"
    c = atom.charge
    if c == 1:
        tok += "+"
    elif c == -1:
        tok += "-"
    elif c > 1:
        tok += f"+{c}"
    elif c < -1:
        tok += f"-{-c}"
    return f"[{tok}]"


def _bond_token(mol, a, b):
    order = mol.bonds[(min(a, b), max(a, b))]
    if order == 2:
        return "="
    if order == 3:
        return "#"
    if order == "ar":
        return ""
    # Explicit single so two adjacent aromatic atoms don't fuse by default.
    if mol.atoms[a].aromatic and mol.atoms[b].aromatic:
        return "-"
    return ""


def write_subgraph_smiles(mol, keep, rng):
    """SMILES for the induced subgraph on `keep`, with rng-shuffled traversal
    so the output is not a transcript of input order. Empty set -> ''. """
    keep = sorted(keep)
    if not keep:
        return ""
    kset = set(keep)
    adj = {u: [] for u in keep}
    for a, b in mol.bonds:
        if a in kset and b in kset:
            adj[a].append(b)
            adj[b].append(a)

    children = {u: [] for u in keep}
    back_edges = []  # (open_pos, close_pos, opener, closer)
    preorder = {}
    visited = set()

    def dfs(u, parent):
        preorder[u] = len(preorder)
        visited.add(u)
        nbrs = adj[u][:]
        rng.shuffle(nbrs)
        for v in nbrs:
            if v == parent:
                continue
            if v in visited:
                # recorded once, from the endpoint reached later
                if preorder[v] < preorder[u]:
                    back_edges.append((preorder[v], preorder[u], v, u))
            else:
                children[u].append(v)
                dfs(v, u)

    start = keep[rng.randrange(len(keep))]
    dfs(start, None)
    if len(visited) != len(keep):
        raise ValueError("subgraph not connected")

    # Assign closure digits with an interval free-pool so a digit is never
    # reused while still open in the emitted string.
    events = []
    for k, (op, cl, o, c) in enumerate(back_edges):
        events.append((op, 1, k))  # open after close at same position
        events.append((cl, 0, k))
    events.sort()
    free = list(range(1, 100))
    digit = {}
    for _, kind, k in events:
        if kind == 1:
            digit[k] = free.pop(0)
        else:
            free.append(digit[k])
            free.sort()
    opens = {}   # atom -> [(digit, other)]
    closes = {}  # atom -> [digit]
    for k, (_, _, o, c) in enumerate(back_edges):
        opens.setdefault(o, []).append((digit[k], c))
        closes.setdefault(c, []).append(digit[k])

    def digit_token(d):
        return str(d) if d < 10 else f"%{d:02d}"

    def emit(u):
        out = _atom_token(mol.atoms[u])
        for d in sorted(closes.get(u, [])):
            out += digit_token(d)
        for d, other in sorted(opens.get(u, [])):
            out += _bond_token(mol, u, other) + digit_token(d)
        kids = children[u]
        for idx, v in enumerate(kids):
            piece = _bond_token(mol, u, v) + emit(v)
            out += f"({piece})" if idx + 1 < len(kids) else piece
        return out

    return emit(start)


def scaffold_smiles(smiles, salt="scaffold"):
    mol = parse_smiles(smiles)
    keep = murcko_keep(mol)
    rng = random.Random(f"{smiles}|{salt}")
    return write_subgraph_smiles(mol, keep, rng)


_WL_IDS = {}


def _wl_id(sig):
    """Process-global signature interning keeps round labels comparable
    across graphs while the label size stays constant per round."""
    if sig not in _WL_IDS:
        _WL_IDS[sig] = len(_WL_IDS)
    return _WL_IDS[sig]


def canonical_key(mol, keep):
    """Structural isomorphism key for the induced subgraph: iterated
    neighborhood relabeling (colour refinement) over interned labels."""
    keep = sorted(keep)
    if not keep:
        return "empty"
    local = {u: i for i, u in enumerate(keep)}
    n = len(keep)
    adj = [[] for _ in range(n)]
    n_edges = 0
    for (a, b), order in mol.bonds.items():
        if a in local and b in local:
            adj[local[a]].append((str(order), local[b]))
            adj[local[b]].append((str(order), local[a]))
            n_edges += 1
    label = [
        _wl_id((mol.atoms[u].el, mol.atoms[u].aromatic, mol.atoms[u].charge))
        for u in keep
    ]
    for _ in range(2 * n):
        label = [
            _wl_id((label[i], tuple(sorted((o, label[j]) for o, j in adj[i]))))
            for i in range(n)
        ]
    return repr((n, n_edges, sorted(label)))


def check_roundtrip(smiles):
    """Scaffold writer output must parse and describe the same scaffold."""
    mol = parse_smiles(smiles)
    keep = murcko_keep(mol)
    written = scaffold_smiles(smiles)
    if not keep:
        assert written == "", smiles
        return
    again = parse_smiles(written)
    keep2 = murcko_keep(again)
    assert len(keep2) == len(again.atoms) == len(keep), (smiles, written)
    assert canonical_key(mol, keep) == canonical_key(again, keep2), (smiles, written)


GOLDEN_SMILES = [
    "CCO", "CC(=O)O", "c1ccccc1", "Cc1ccccc1", "c1ccc2ccccc2c1",
    "c1ccncc1", "c1cc[nH]c1", "c1ccoc1", "c1ccsc1", "c1c[nH]cn1",
    "c1cncnc1", "c1ccc2ncccc2c1", "c1ccc2[nH]ccc2c1", "CC(C)CC",
    "CCCCCCCC", "CC(C)(C)C", "C1CCCCC1", "C1CCCC1", "C1CC1",
    "C1CCCCCC1", "C1CCC2CCCCC2C1", "C1CC2CCC1C2", "C1CCC2(CC1)CCCC2",
    "c1ccc(cc1)-c1ccccc1", "C%10CCCCCCCCC%10", "C/C=C\\C", "C=C",
    "C#C", "CC#N", "C=CC=C", "CC(=O)OCC", "CC(=O)NC", "CCN(CC)CC",
    "CS(=O)(=O)C", "CS(=O)C", "CP(C)C", "OP(=O)(O)O", "C[N+](C)(C)C",
    "CC(=O)[O-]", "[NH4+]", "FC(F)(F)c1ccccc1", "Clc1ccccc1", "BrCCBr",
    "C[C@H](N)C(=O)O", "N#Cc1ccccc1", "O=C=O", "Oc1ccccc1",
    "Nc1ccc(O)cc1", "COc1ccccc1", "CN1CCCC1",
]

# Scaffold groups with engineered sizes. Greedy largest-first filling at
# 0.8/0.1 fractions lands exactly 80/10/10 for this multiset regardless of
# how ties are ordered, because every group of size >1 fits in train and the
# remaining singletons tile the cutoffs exactly.
SPLIT_GROUPS = [
    ["c1ccccc1", "Cc1ccccc1", "CCc1ccccc1", "Oc1ccccc1",
     "Nc1ccccc1", "Clc1ccccc1", "COc1ccccc1", "CC(C)c1ccccc1"],
    ["c1ccncc1", "Cc1ccncc1", "Cc1cccnc1", "Cc1ccccn1",
     "CCc1ccncc1", "Oc1ccncc1", "Nc1ccncc1"],
    ["C1CCCCC1", "CC1CCCCC1", "CCC1CCCCC1", "OC1CCCCC1",
     "NC1CCCCC1", "ClC1CCCCC1"],
    ["c1ccc2ccccc2c1", "Cc1ccc2ccccc2c1", "CCc1ccc2ccccc2c1",
     "Oc1ccc2ccccc2c1", "Nc1ccc2ccccc2c1", "Clc1ccc2ccccc2c1"],
    ["C1CCNCC1", "CC1CCNCC1", "CCC1CCNCC1", "OC1CCNCC1", "CC1CCCNC1"],
    ["c1ccsc1", "Cc1ccsc1", "CCc1ccsc1", "Cc1cccs1", "Clc1ccsc1"],
    ["c1ccoc1", "Cc1ccoc1", "CCc1ccoc1", "Cc1ccco1"],
    ["C1CCCC1", "CC1CCCC1", "CCC1CCCC1", "OC1CCCC1"],
    ["C1CCOC1", "CC1CCOC1", "CC1CCCO1", "OCC1CCOC1"],
    ["c1cc[nH]c1", "Cc1cc[nH]c1", "Cc1ccc[nH]1"],
    ["c1cncnc1", "Cc1cncnc1", "Nc1ncccn1"],
    ["c1ccc2ncccc2c1", "Cc1ccc2ncccc2c1", "c1ccc2cccnc2c1"],
    ["C1COCCN1", "CC1COCCN1"],
    ["C1CNCCN1", "CC1CNCCN1"],
    ["c1cnccn1", "Cc1cnccn1"],
    ["C1CC1", "CC1CC1"],
    ["C1CCC1", "CC1CCC1"],
    ["c1c[nH]cn1", "Cc1c[nH]cn1"],
]

SPLIT_SINGLETONS = [
    "C1CCCCCC1", "C1CCCCCCC1", "C1CO1", "C1CS1", "C1CN1", "C1COC1",
    "C1CNC1", "C1CCOCC1", "C1CCSC1", "C1CCSCC1", "C1CCNC1", "c1cscn1",
    "c1ocnc1", "c1cn[nH]c1", "c1ccnnc1", "c1ncncn1", "c1ccc2nccnc2c1",
    "c1ccc2cnccc2c1", "c1ccc2occc2c1", "c1ccc2sccc2c1", "c1ccc2[nH]ccc2c1",
    "C1Cc2ccccc2C1", "C1CCc2ccccc2C1", "C1CCC2CCCCC2C1", "C1CC2CCC1C2",
    "C1CCC2(CC1)CCCC2", "c1ccc(cc1)-c1ccccc1", "C1CCCCC1C1CCCCC1",
    "C1CCC=CC1", "C%10CCCCCCCCC%10",
]

TOX_POSITIVE = ["CCN", "CCCN", "CN(C)C", "CNC", "NCCN", "CCCCN",
                "c1ccncc1", "C1CCNCC1"]
TOX_NEGATIVE = ["CCC", "CCO", "CCCC", "COC", "c1ccccc1", "CC(C)C",
                "CCOCC", "C1CCCCC1"]

PRETRAIN_8 = ["c1ccccc1", "C1CCCCC1", "c1ccc2ccccc2c1", "Cc1ccccc1",
              "CCCC", "CC(C)C", "C1CC1", "c1ccc(cc1)-c1ccccc1"]

ZINC_TOY = ["CCO", "CC(C)O", "CCCC", "CC(=O)OC", "c1ccccc1", "Cc1ccccc1",
            "c1ccncc1", "C1CCCCC1", "CCN(CC)CC", "CC(=O)NC",
            "COc1ccccc1", "CS(=O)C"]


def synthetic_properties(smiles):
    """Toy stand-ins for logP/SAS/QED, deterministic functions of counts."""
    mol = parse_smiles(smiles)
    counts = {}
    for a in mol.atoms:
        counts[a.el] = counts.get(a.el, 0) + 1
    n = len(mol.atoms)
    n_arom = sum(1 for a in mol.atoms if a.aromatic)
    n_rings = len(mol.bonds) - n + 1
    logp = (0.5 * counts.get("C", 0) + 0.3 * n_arom - 0.8 * counts.get("O", 0)
            - 0.9 * counts.get("N", 0) - 0.2 * counts.get("S", 0))
    sas = 1.0 + 0.25 * n + 0.5 * n_rings
    qed = 1.0 / (1.0 + math.exp(0.35 * (n - 10)))
    return round(logp, 3), round(sas, 3), round(qed, 3)


def main():
    root = Path(__file__).resolve().parents[1]
    out_dir = root / "corpus"
    out_dir.mkdir(exist_ok=True)

    # --- golden records ---
    assert len(GOLDEN_SMILES) == len(set(GOLDEN_SMILES)) == 50
    lines = []
    for smi in GOLDEN_SMILES:
        mol = parse_smiles(smi)
        check_roundtrip(smi)
        rec = {
            "smiles": smi,
            "n_atoms": len(mol.atoms),
            "n_bonds": len(mol.bonds),
            "degrees": mol.degrees(),
            "scaffold_smiles": scaffold_smiles(smi),
        }
        lines.append(json.dumps(rec))
    (out_dir / "smiles_golden.jsonl").write_text("\n".join(lines) + "\n")

    # --- scaffold split corpus ---
    split_smiles = [smi for grp in SPLIT_GROUPS for smi in grp] + SPLIT_SINGLETONS
    assert len(split_smiles) == len(set(split_smiles)) == 100
    by_key = {}
    for smi in split_smiles:
        mol = parse_smiles(smi)
        check_roundtrip(smi)
        by_key.setdefault(canonical_key(mol, murcko_keep(mol)), []).append(smi)
    sizes = sorted((len(v) for v in by_key.values()), reverse=True)
    expect = sorted((len(g) for g in SPLIT_GROUPS), reverse=True) + [1] * 30
    assert sizes == sorted(expect, reverse=True), sizes
    # Simulate the greedy fill to confirm the 80/10/10 outcome.
    n_train = n_valid = n_test = 0
    for size in sizes:
        if n_train + size <= 80:
            n_train += size
        elif n_train + n_valid + size <= 90:
            n_valid += size
        else:
            n_test += size
    assert (n_train, n_valid, n_test) == (80, 10, 10)
    rows = ["smiles,active"]
    for smi in split_smiles:
        mol = parse_smiles(smi)
        active = int(any(a.el == "N" for a in mol.atoms))
        rows.append(f"{smi},{active}")
    (out_dir / "scaffold_split_100.csv").write_text("\n".join(rows) + "\n")

    # --- binary toy set ---
    rows = ["smiles,toxic"]
    rows += [f"{smi},1" for smi in TOX_POSITIVE]
    rows += [f"{smi},0" for smi in TOX_NEGATIVE]
    for smi in TOX_POSITIVE + TOX_NEGATIVE:
        parse_smiles(smi)
    (out_dir / "tox_toy_16.csv").write_text("\n".join(rows) + "\n")

    # --- unlabeled hydrocarbon corpus ---
    for smi in PRETRAIN_8:
        parse_smiles(smi)
    (out_dir / "pretrain_8.csv").write_text(
        "smiles\n" + "\n".join(PRETRAIN_8) + "\n")

    # --- regression toy set ---
    rows = ["smiles,logP,SAS,QED"]
    for smi in ZINC_TOY:
        logp, sas, qed = synthetic_properties(smi)
        rows.append(f"{smi},{logp},{sas},{qed}")
    (out_dir / "zinc_toy.csv").write_text("\n".join(rows) + "\n")

    print(f"wrote 5 fixture files to {out_dir}")


if __name__ == "__main__":
    main()
