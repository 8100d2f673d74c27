"""Where signatures stop determining tree shapes.

Up to eight leaves the multiset of block sizes pins down the shape of a
binary tree.  At nine leaves it no longer does.
"""
from fragtree.enumeration import find_collisions, signature_table
from fragtree.io import shape_to_dot

for n in range(4, 12):
    table = signature_table(n, literal_cap=0)
    print(f"n={n:<2} shapes={sum(len(e.shapes) for e in table.entries.values()):<4}"
          f" signatures={len(table.entries):<4} collisions={len(table.collisions())}")

for sig, shapes in find_collisions(9):
    print("signature", sig)
    for i, s in enumerate(shapes):
        print(shape_to_dot(s, name=f"shape{i}"))
