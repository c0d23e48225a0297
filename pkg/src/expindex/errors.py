"""Error types shared across the package.

Two failure families matter for exit codes: bad input (manifest / argument
problems) and mathematical failure (a tolerance or axiom violated at run
time).  Everything else is a plain bug and raises builtin exceptions.
"""


class ManifestError(ValueError):
    """Invalid user input: schema violation, unitality failure, bad flag."""


class ToleranceError(ArithmeticError):
    """A numerical identity that must hold failed beyond its tolerance."""
