"""`figures <recipe.json>`: render one figure recipe to its output image."""

from __future__ import annotations

import sys
from pathlib import Path

from .qf01 import QF01FormatError
from .recipes import FigureRecipe, RecipeError, render


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1 or argv[0] in ("-h", "--help"):
        print(__doc__.strip(), file=sys.stderr)
        return 2
    recipe_path = Path(argv[0])
    try:
        recipe = FigureRecipe.from_json(recipe_path)
        out = render(recipe, base=recipe_path.resolve().parent)
    except (RecipeError, QF01FormatError, OSError, ValueError) as exc:
        print(f"figures: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
