"""Batch figure rendering for starcov sweep CSVs.

Recipes are small JSON files mapping a CSV's columns onto one figure: x/y
columns, a series-grouping column (or an explicit line list for wide CSVs),
axis labels and scales.  Rendering is deterministic: identical inputs produce
byte-identical images.
"""

from .render import FigureRecipe, load_recipe, render, builtin_recipe

__version__ = "0.1.0"

__all__ = ["FigureRecipe", "load_recipe", "render", "builtin_recipe"]
