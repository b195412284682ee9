"""Per-figure reproduction recipes.

Each recipe expands to a list of ordinary runs (subcommand plus flat config), so
every member of a bundle can be re-run on its own from its manifest.
"""
from __future__ import annotations

from dataclasses import dataclass, field

QUANTUM_DEFAULTS = {"N": 30, "M": 30, "dt_over_T": 0.001, "n_periods": 100}
SEMICLASSICAL_PERIODS = 1200
PSOS_PERIODS = 300
SCAN_DELTAS = [round(0.01 * k, 2) for k in range(1, 21)]


@dataclass(frozen=True)
class Recipe:
    kind: str  # "psos" | "mf" | "scan" | "quantum"
    runs: tuple  # (tag, config) pairs
    criteria: tuple = ()
    description: str = ""
    sizes: tuple = field(default=())  # site-number study (fig7)


def _psos(JT, d, criteria=(), text=""):
    return Recipe("psos", ((f"JT{JT:g}_delta{d:g}", {"JT": JT, "epsilonT": d, "lambdaT": d}),),
                  criteria, text)


def _quantum(triples, criteria=(), text="", **extra):
    runs = tuple((f"JT{JT:g}_eps{e:g}_lam{l:g}", {"JT": JT, "epsilonT": e, "lambdaT": l, **extra})
                 for JT, e, l in triples)
    return Recipe("quantum", runs, criteria, text)


FIGURES: dict[str, Recipe] = {
    "fig1a": _psos(1, 0.0, (), "PSOS, ideal drive"),
    "fig1b": _psos(1, 0.05, (4,), "PSOS, weak imperfection"),
    "fig1c": _psos(1, 0.5, (), "PSOS, strong imperfection"),
    "fig1d": _psos(2, 0.05, (), "PSOS, JT=2"),
    "fig1e": _psos(3, 0.05, (), "PSOS, JT=3"),
    "fig1f": _psos(4, 0.05, (5,), "PSOS, JT=4"),
    "fig2": Recipe("mf", tuple((f"JT{JT}", {"JT": JT, "epsilonT": 0.05, "lambdaT": 0.05,
                                             "n_periods": SEMICLASSICAL_PERIODS})
                               for JT in (1, 3, 4)),
                   (4, 5), "semiclassical series and spectra"),
    "fig3a": Recipe("scan", (("JT1", {"JT": 1}),), (6,), "subharmonic peak vs delta, JT=1"),
    "fig3b": Recipe("scan", (("JT2", {"JT": 2}),), (), "subharmonic peak vs delta, JT=2"),
    "fig3c": Recipe("scan", (("JT0", {"JT": 0}),), (6,), "subharmonic peak vs delta, JT=0"),
    "fig3d": Recipe("scan", (("JT5", {"JT": 5}),), (), "subharmonic peak vs delta, JT=5"),
    "fig4": _quantum(((0.0, 0.0, 0.0), (0.0, 0.05, 0.05), (0.5, 0.05, 0.05)), (1, 2, 3, 7),
                     "quantum series: free, imperfect free, interacting"),
    "fig5": _quantum(tuple((1.0, d, d) for d in (0.05, 0.09, 0.13, 0.15, 0.17, 0.19)), (8,),
                     "quantum spectra vs imperfection at JT=1"),
    "fig6": _quantum(tuple((JT, 0.05, 0.05) for JT in (0.1, 0.9, 1.5, 2.0)), (),
                     "quantum series vs interaction strength"),
    "fig7": Recipe("quantum", (("JT1_eps0.05_lam0.05",
                                {"JT": 1.0, "epsilonT": 0.05, "lambdaT": 0.05, "n_periods": 200}),),
                   (9,), "site-number study", sizes=(30, 50, 80)),
}
