"""Reference right-hand sides with known linearizability."""

# f -> True (equivalent to y'' = 0)
LINEARIZABLE = (
    "0",
    "x",
    "x^2",
    "y'^3",
    "y*y'^3",
    "(y'+b)^3",
    "-3*y'/(2*x)",
    "y'^3 + 3/(2*y)*y'^2",
)

# f -> expected witness of failure
NOT_LINEARIZABLE = {
    "y": "r1 = 1",
    "y'^2": "r3 = 2/9",
    "y'^3 + x": "r2 = -x",
    "y'^4": "not-cubic: degree 4 in y'",
    "x*y'": "r1 = (2*x^2 - 3)/9",
}
