"""Serialization of fragmentation trees: JSON, Newick and DOT."""
from __future__ import annotations

import json
import re
from typing import Mapping

from .trees import FragTree, Shape, mask_of


def to_json(t: FragTree) -> dict:
    """Recursive ``{"labels": [...], "children": [...]}`` mapping."""
    return {"labels": list(t.members), "children": [to_json(c) for c in t.children]}


def from_json(obj: Mapping) -> FragTree:
    return FragTree(mask_of(obj["labels"]), [from_json(c) for c in obj.get("children", ())])


def dumps(t: FragTree) -> str:
    return json.dumps(to_json(t), separators=(",", ":"))


def loads(text: str) -> FragTree:
    return from_json(json.loads(text))


def to_newick(t: FragTree, lengths: Mapping[int, float] | None = None) -> str:
    """Newick string with leaf labels only.

    ``lengths`` maps a vertex bitmask to the length of the edge below it;
    vertices missing from the mapping (leaves, typically) get no length.
    """
    def go(v: FragTree) -> str:
        body = str(v.members[0]) if not v.children else "(" + ",".join(go(c) for c in v.children) + ")"
        if lengths is not None and v.labels in lengths:
            body += f":{lengths[v.labels]:.12g}"
        return body

    return go(t) + ";"


_TOKEN = re.compile(r"\s*([(),;]|:[^(),;]*|[^(),;:\s]+)")


def parse_newick(text: str) -> FragTree:
    """Parse a leaf-labelled Newick string (branch lengths are ignored)."""
    tokens = [m.group(1) for m in _TOKEN.finditer(text) if not m.group(1).startswith(":")]
    pos = 0

    def node() -> FragTree:
        nonlocal pos
        tok = tokens[pos]
        if tok == "(":
            pos += 1
            kids = [node()]
            while tokens[pos] == ",":
                pos += 1
                kids.append(node())
            if tokens[pos] != ")":
                raise ValueError(f"expected ')' at token {pos}")
            pos += 1
            mask = 0
            for k in kids:
                mask |= k.labels
            return FragTree(mask, kids)
        pos += 1
        return FragTree.leaf(int(tok))

    tree = node()
    if pos >= len(tokens) or tokens[pos] != ";":
        raise ValueError("missing terminating ';'")
    return tree


def _block(v: FragTree) -> str:
    return "{" + ",".join(map(str, v.members)) + "}"


def to_dot(t: FragTree, name: str = "fragmentation") -> str:
    """DOT digraph with one node per vertex labelled by its block."""
    lines = [f"digraph {name} {{"]
    for v in t.vertices():
        lines.append(f'  n{v.labels} [label="{_block(v)}"];')
    for v in t.vertices():
        for c in v.children:
            lines.append(f"  n{v.labels} -> n{c.labels};")
    lines.append("}")
    return "\n".join(lines)


def shape_to_dot(s: Shape, name: str = "shape") -> str:
    """DOT digraph of an unlabelled shape; vertices show subtree sizes."""
    lines = [f"digraph {name} {{"]
    counter = 0

    def go(node: Shape) -> int:
        nonlocal counter
        me = counter
        counter += 1
        lines.append(f'  v{me} [label="{node.leaves}"];')
        for c in node.children:
            lines.append(f"  v{me} -> v{go(c)};")
        return me

    go(s)
    lines.append("}")
    return "\n".join(lines)
