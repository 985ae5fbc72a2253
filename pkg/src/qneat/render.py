"""Plain-text circuit diagrams of genomes."""
from __future__ import annotations

from .genome import Genome

WIRE = "---"
DELIM = ":"


def _cnot_column(n: int, control: int, target: int) -> list[str]:
    lo, hi = sorted((control, target))
    col = []
    for w in range(n):
        if w == control:
            col.append("-@-")
        elif w == target:
            col.append("-X-")
        elif lo < w < hi:
            col.append("-+-")
        else:
            col.append(WIRE)
    return col


def render_circuit(genome: Genome, encoding: str = "U") -> str:
    """Wires top to bottom, the encoding box first, then each layer between ``:`` delimiters.

    ROTs of one layer share a column (``R``); each CNOT gets its own column
    with ``@`` on the control, ``X`` on the target and ``+`` where it crosses
    other wires.
    """
    n = genome.n_wires
    enc = f"[{encoding}]"
    columns: list[list[str]] = [[enc] * n]
    labels = ["enc".center(len(enc))]
    for layer in range(1, genome.depth + 1):
        block: list[list[str]] = []
        rots = {g.wire for g in genome.rot_genes if g.layer == layer}
        if rots:
            block.append(["-R-" if w in rots else WIRE for w in range(n)])
        for g in sorted((g for g in genome.cnot_genes if g.layer == layer), key=lambda g: g.wire_from):
            block.append(_cnot_column(n, g.wire_from, g.wire_to(n)))
        if not block:
            block.append([WIRE] * n)
        columns.append([DELIM] * n)
        labels.append(" ")
        columns.extend(block)
        width = 3 * len(block)
        labels.append(f"L{layer}".center(width))
    if genome.depth:
        columns.append([DELIM] * n)
        labels.append(" ")
    name_width = len(f"q{n - 1}: ")
    lines = [" " * name_width + "".join(labels).rstrip()]
    for w in range(n):
        lines.append(f"q{w}: ".ljust(name_width) + "".join(col[w] for col in columns))
    return "\n".join(lines)
