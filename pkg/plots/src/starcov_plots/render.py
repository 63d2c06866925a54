"""Render starcov sweep CSVs into figures, one recipe per figure."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from importlib import resources

import matplotlib

matplotlib.use("Agg")  # headless and deterministic

import matplotlib.pyplot as plt

log = logging.getLogger("starcov_plots")


@dataclass
class FigureRecipe:
    """Column mapping and styling for one figure.

    Long-format CSVs group rows by `series` and plot `y` (with `yerr` bars)
    against `x`.  Wide-format CSVs (no series column) list the y-columns to
    draw in `lines`.
    """

    name: str
    csv: str = ""
    out: str = ""
    x: str = "value"
    y: str = "mean"
    yerr: str = "stderr"
    series: str = ""
    lines: list = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""
    xscale: str = "linear"
    yscale: str = "linear"
    title: str = ""


def load_recipe(path) -> FigureRecipe:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return FigureRecipe(**data)


def builtin_recipe(name) -> FigureRecipe:
    """Load one of the shipped per-figure recipes by name (e.g. 'fig5')."""
    ref = resources.files("starcov_plots").joinpath(f"recipes/{name}.json")
    with ref.open("r", encoding="utf-8") as fh:
        return FigureRecipe(**json.load(fh))


def _read_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        rows = list(reader)
    if not header:
        raise ValueError(f"{path}: empty CSV (no header)")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return header, rows


def _column(rows, name):
    out = []
    for row in rows:
        raw = row.get(name, "")
        try:
            out.append(float(raw))
        except (TypeError, ValueError):
            out.append(math.nan)
    return out


def render(recipe: FigureRecipe, csv_path=None, out_path=None):
    """Render one figure from a CSV per the recipe; returns the image path.

    Rows whose plotted values are missing or non-numeric are skipped (with a
    logged count).  Missing columns are reported by name.  The input CSV is
    never modified.
    """
    csv_path = csv_path or recipe.csv
    out_path = out_path or recipe.out or f"{recipe.name}.png"
    header, rows = _read_rows(csv_path)

    plotted = [recipe.x]
    if recipe.series:
        plotted += [recipe.series, recipe.y]
        if recipe.yerr:
            plotted.append(recipe.yerr)
    else:
        if not recipe.lines:
            raise ValueError(f"recipe {recipe.name}: needs 'series' or 'lines'")
        plotted += [ln["y"] for ln in recipe.lines]
        plotted += [ln["yerr"] for ln in recipe.lines if ln.get("yerr")]
    missing = sorted(set(plotted) - set(header))
    if missing:
        raise ValueError(f"{csv_path}: missing columns {', '.join(missing)}")

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=144)
    skipped = 0
    if recipe.series:
        groups = {}
        for row in rows:
            groups.setdefault(row[recipe.series], []).append(row)
        for label in sorted(groups):
            xs = _column(groups[label], recipe.x)
            ys = _column(groups[label], recipe.y)
            errs = _column(groups[label], recipe.yerr) if recipe.yerr else [0.0] * len(xs)
            keep = [i for i in range(len(xs))
                    if math.isfinite(xs[i]) and math.isfinite(ys[i])]
            skipped += len(xs) - len(keep)
            if not keep:
                continue
            order = sorted(keep, key=lambda i: xs[i])
            ax.errorbar([xs[i] for i in order], [ys[i] for i in order],
                        yerr=[errs[i] if math.isfinite(errs[i]) else 0.0 for i in order],
                        marker="o", markersize=3, capsize=2, linewidth=1.2, label=label)
    else:
        xs = _column(rows, recipe.x)
        for ln in recipe.lines:
            ys = _column(rows, ln["y"])
            errs = _column(rows, ln["yerr"]) if ln.get("yerr") else [0.0] * len(xs)
            keep = [i for i in range(len(xs))
                    if math.isfinite(xs[i]) and math.isfinite(ys[i])]
            skipped += len(xs) - len(keep)
            order = sorted(keep, key=lambda i: xs[i])
            ax.errorbar([xs[i] for i in order], [ys[i] for i in order],
                        yerr=[errs[i] if math.isfinite(errs[i]) else 0.0 for i in order],
                        marker="o", markersize=3, capsize=2, linewidth=1.2,
                        label=ln.get("label", ln["y"]))
    if skipped:
        log.info("%s: skipped %d rows with missing data", recipe.name, skipped)

    ax.set_xlabel(recipe.xlabel or recipe.x)
    ax.set_ylabel(recipe.ylabel or recipe.y)
    ax.set_xscale(recipe.xscale)
    ax.set_yscale(recipe.yscale)
    if recipe.title:
        ax.set_title(recipe.title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    # strip writer metadata so identical inputs give identical bytes
    fig.savefig(out_path, metadata={"Software": None})
    plt.close(fig)
    return out_path


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="starcov-plot", description="Render a starcov sweep CSV into a figure.")
    parser.add_argument("--csv", required=True, help="input CSV path")
    parser.add_argument("--recipe", required=True,
                        help="recipe JSON path, or a builtin name like fig5")
    parser.add_argument("--out", default=None, help="output image path")
    args = parser.parse_args(argv)
    try:
        if args.recipe.endswith(".json"):
            recipe = load_recipe(args.recipe)
        else:
            recipe = builtin_recipe(args.recipe)
        path = render(recipe, csv_path=args.csv, out_path=args.out)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
