"""Shared fixture data: the fixed three-user, one-key reference trace.

Eleven operations by three users on key x whose expected stamps are known
by hand; reused by the table, engine, graph, and acceptance suites.
"""

from stccsim.duot import Duot, OpKind

# (user, kind, key, value) in registration order.
REFERENCE_ROWS = [
    (0, OpKind.WRITE, "x", "a"),
    (0, OpKind.WRITE, "x", "b"),
    (1, OpKind.READ, "x", "a"),
    (1, OpKind.READ, "x", "b"),
    (1, OpKind.WRITE, "x", "d"),
    (2, OpKind.READ, "x", "a"),
    (2, OpKind.READ, "x", "b"),
    (2, OpKind.READ, "x", "d"),
    (1, OpKind.READ, "x", "d"),
    (1, OpKind.WRITE, "x", "c"),
    (0, OpKind.READ, "x", "b"),
]

REFERENCE_STAMPS = [
    "[1,0,0]",
    "[2,0,0]",
    "[2,1,0]",
    "[2,2,0]",
    "[2,3,0]",
    "[2,3,1]",
    "[2,3,2]",
    "[2,3,3]",
    "[2,4,3]",
    "[2,5,3]",
    "[3,5,3]",
]

# Which write each read returned, by value.
REFERENCE_SERVES = {3: 1, 4: 2, 6: 1, 7: 2, 8: 5, 9: 5, 11: 2}


def build_reference_table() -> Duot:
    table = Duot(3)
    for user, kind, key, value in REFERENCE_ROWS:
        rec = table.register(user, kind, key, value if kind is OpKind.WRITE else None)
        if kind is OpKind.READ:
            table.set_read_value(rec.op_id, value)
    return table
