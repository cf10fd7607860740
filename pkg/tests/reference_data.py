"""Published coefficient tables used as fixed reference values."""

# fifth-order F-8 feedback u(x) as {(e1, e2, e3): coefficient}; small terms were
# dropped at publication.  The listing repeats the x1^3 x2^2 label; its second
# occurrence (0.043) is read as x1^3 x3^2, the only degree-5 slot it can fill.
F8_ORDER5_CONTROLLER = {
    (1, 0, 0): -0.053, (0, 1, 0): 0.5, (0, 0, 1): 0.521,
    (2, 0, 0): 0.035, (1, 1, 0): -0.045,
    (3, 0, 0): 0.339, (2, 1, 0): -0.531, (2, 0, 1): 0.017, (1, 2, 0): 0.139,
    (1, 1, 1): -0.042, (1, 0, 2): 0.013,
    (4, 0, 0): 0.504, (3, 1, 0): -0.655, (3, 0, 1): 0.082, (2, 2, 0): 0.353,
    (2, 1, 1): -0.081, (1, 3, 0): -0.087, (1, 2, 1): 0.0327,
    (5, 0, 0): 2.29, (4, 1, 0): -3.205, (4, 0, 1): 0.499, (3, 2, 0): 2.104,
    (3, 1, 1): -0.554, (3, 0, 2): 0.043, (2, 3, 0): -0.864, (2, 2, 1): 0.271,
    (2, 1, 2): -0.038, (1, 4, 0): 0.155, (1, 3, 1): -0.087, (1, 2, 2): 0.011,
    (0, 4, 1): 0.013,
}


def eval_monomials(table, x):
    total = 0.0
    for exps, c in table.items():
        term = c
        for xi, e in zip(x, exps):
            term *= xi**e
        total += term
    return total
